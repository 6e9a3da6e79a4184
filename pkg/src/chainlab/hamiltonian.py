"""The Fefferman light-cone Hamiltonian of a normal-form hypersurface.

Four evaluators are provided:

  * kind "full":   the canonical Hamiltonian assembled from the surface's
                   rho-partials, the bordered-Hessian determinant Phi and
                   the cofactor inverse of the contact matrix A;
  * kind "rigid":  the closed-form specialization for rigid surfaces
                   (graph function independent of y1), an independent
                   evaluation path used for cross-validation;
  * kind "model":  the weighted-order <= 6, a-linear truncation for the
                   polynomial model surface, hard-coded;
  * kind "sphere": the sphere Hamiltonian in its conventional 3x-scaled
                   form.  On the sphere, 3 * eval(full) == eval(sphere);
                   the global constant 3 comes from the rescaled contact
                   matrix used in the sphere convention.

Every kind reduces H to a momentum quadratic form with position-dependent
coefficients, H = p . N(y1, z2) . p / D(y1, z2), assembled once over a
generic coefficient ring.  Feeding complex numbers gives values, feeding
Jet numbers gives phase-space gradients, and feeding WeightedSeries gives
a compiled closed form evaluated by one matrix product per call (the fast
path used by the flow integrator).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import Jet, WeightedSeries
from .surface import BORDER_IDX, PERMS3, det3

_Z4 = (0, 0, 0, 0)

# Ambient derivative directions.
_DIRS = {"z1": (1, 0, 0, 0), "zb1": (0, 1, 0, 0),
         "z2": (0, 0, 1, 0), "zb2": (0, 0, 0, 1)}

# Momentum slot -> (row of P in the contact-matrix frame, complex factor):
# P = (p_x0, i p_y1, p_x2 + i p_y2).
_P_SLOTS = ((0, 1.0 + 0j), (1, 1j), (2, 1.0 + 0j), (2, 1j))

# Fixed order for the upper triangle of the symmetric 4x4 form.
UPPER = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1),
         (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))

KINDS = ("full", "rigid", "model", "sphere")


class SingularMatrixError(ValueError):
    """Contact matrix A is numerically singular at the requested point."""


@dataclass(frozen=True)
class PhasePoint:
    """Point of the 8-dimensional real phase space.

    Weights under anisotropic scaling: x0 -> 0, y1 -> 2, z2 -> 1,
    p_x0 -> 2, p_y1 -> 0, p_z2 -> 1.  The conjugate momentum of z2 is
    carried as the complex combination p_z2 = p_x2 + i p_y2.
    """

    x0: float
    y1: float
    z2: complex
    px0: float
    py1: float
    pz2: complex

    @property
    def x2(self):
        return self.z2.real

    @property
    def y2(self):
        return self.z2.imag

    @property
    def px2(self):
        return self.pz2.real

    @property
    def py2(self):
        return self.pz2.imag

    def to_state(self):
        """8-vector (x0, y1, x2, y2, p_x0, p_y1, p_x2, p_y2)."""
        return np.array([self.x0, self.y1, self.x2, self.y2,
                         self.px0, self.py1, self.px2, self.py2])

    @classmethod
    def from_state(cls, y):
        return cls(float(y[0]), float(y[1]), complex(y[2], y[3]),
                   float(y[4]), float(y[5]), complex(y[6], y[7]))

    def anisotropic_scale(self, delta):
        return PhasePoint(self.x0, delta ** 2 * self.y1, delta * self.z2,
                          delta ** 2 * self.px0, self.py1, delta * self.pz2)

    def momenta(self):
        return np.array([self.px0, self.py1, self.px2, self.py2])


# ---------------------------------------------------------------------
# Ring-generic assembly of the momentum quadratic form
# ---------------------------------------------------------------------


def _new_form(zero):
    return [[zero for _ in range(4)] for _ in range(4)]


def _add(n, mu, nu, c):
    """Add the momentum term c * p_mu * p_nu to a symmetric form."""
    if mu == nu:
        n[mu][mu] = n[mu][mu] + c
    else:
        half = 0.5 * c
        n[mu][nu] = n[mu][nu] + half
        n[nu][mu] = n[nu][mu] + half


def _expand_pz(n, mu, c, conjugated):
    """Add c * p_mu * p_z2 (or p_mu * p_zbar2) via p_z2 = p_x2 + i p_y2."""
    _add(n, mu, 2, c)
    _add(n, mu, 3, (-1j if conjugated else 1j) * c)


def _adjugate3(a):
    """Adjugate (transposed cofactor matrix) of a 3x3 over any ring."""
    def minor(r, c):
        rows = [x for x in range(3) if x != r]
        cols = [x for x in range(3) if x != c]
        return (a[rows[0]][cols[0]] * a[rows[1]][cols[1]]
                - a[rows[0]][cols[1]] * a[rows[1]][cols[0]])

    out = []
    for i in range(3):
        row = []
        for j in range(3):
            m = minor(j, i)
            row.append(m if (i + j) % 2 == 0 else -m)
        out.append(row)
    return out


def _det_entries(b):
    return det3([[b(r, c, _Z4) for c in range(3)] for r in range(3)])


def _det_d1(b, adir):
    """First derivative of the bordered determinant in direction adir."""
    acc = 0
    for sigma, sign in PERMS3:
        for i in range(3):
            term = 1
            for j in range(3):
                term = term * b(j, sigma[j], adir if j == i else _Z4)
            acc = acc + (term if sign > 0 else -term)
    return acc


def _det_d2(b, adir, bdir):
    """Second mixed derivative of the bordered determinant."""
    ab = tuple(x + y for x, y in zip(adir, bdir))
    acc = 0
    for sigma, sign in PERMS3:
        for i in range(3):
            for l in range(3):
                term = 1
                for j in range(3):
                    if j == i and j == l:
                        extra = ab
                    elif j == i:
                        extra = adir
                    elif j == l:
                        extra = bdir
                    else:
                        extra = _Z4
                    term = term * b(j, sigma[j], extra)
                acc = acc + (term if sign > 0 else -term)
    return acc


def _assemble_full(rp, conj):
    """Canonical Hamiltonian as (N, D) with H = p.N.p / D.

    rp(idx) must return the ring element for the ambient rho-partial with
    multi-index idx, evaluated on the surface; rp((0,0,0,0)) must be the
    ring zero (rho vanishes on the surface, while its derivatives do not).
    conj is the ring conjugation.

    The three canonical terms are placed over the common denominator
    D = Phi^2 * det A:
      P A^-1 P*                        ->  (P adjA P*) Phi^2
      -(2 p_x0 / Phi) Im(dbarPhi A^-1 P*) ->  -2 p_x0 Im(dbarPhi adjA P*) Phi
      -(p_x0^2 / 2 Phi) Tr(PhiTilde A^-1) ->  -(p_x0^2 / 2) T3n
    with T3n = sum_{j,k} (3 Phi Phi_{j kbar} - 5 Phi_j Phi_kbar) adjA_{kj},
    using that Phi and det A are real (A is Hermitian for real rho).
    """
    zero = rp(_Z4)

    def b(r, c, extra=_Z4):
        idx = tuple(m + e for m, e in zip(BORDER_IDX[(r, c)], extra))
        return rp(idx)

    phi = _det_entries(b)
    phi_d = {name: _det_d1(b, direction) for name, direction in _DIRS.items()}
    phi_dd = {(j, k): _det_d2(b, _DIRS[j], _DIRS[k])
              for j in ("z1", "z2") for k in ("zb1", "zb2")}

    a_mat = [
        [zero, 1j * rp(_DIRS["zb1"]), 1j * rp(_DIRS["zb2"])],
        [-1j * rp(_DIRS["z1"]), 3 * rp((1, 1, 0, 0)), 3 * rp((1, 0, 0, 1))],
        [-1j * rp(_DIRS["z2"]), 3 * rp((0, 1, 1, 0)), 3 * rp((0, 0, 1, 1))],
    ]
    adj = _adjugate3(a_mat)
    det_a = det3(a_mat)

    n = _new_form(zero)
    phi2 = phi * phi

    for mu in range(4):
        rmu, amu = _P_SLOTS[mu]
        for nu in range(4):
            rnu, anu = _P_SLOTS[nu]
            _add(n, mu, nu, (amu * anu.conjugate()) * (adj[rmu][rnu] * phi2))

    for nu in range(4):
        rnu, anu = _P_SLOTS[nu]
        w = phi_d["zb1"] * adj[1][rnu] + phi_d["zb2"] * adj[2][rnu]
        w = anu.conjugate() * w
        im_w = (w - conj(w)) * (-0.5j)
        _add(n, 0, nu, -2.0 * (im_w * phi))

    t3n = zero
    for ji, j in enumerate(("z1", "z2")):
        for ki, k in enumerate(("zb1", "zb2")):
            t3n = t3n + (3.0 * (phi * phi_dd[(j, k)])
                         - 5.0 * (phi_d[j] * phi_d[k])) * adj[ki + 1][ji + 1]
    _add(n, 0, 0, -0.5 * t3n)

    return n, phi2 * det_a


def _assemble_rigid(q, conj):
    """Rigid-surface Hamiltonian as (N, D) from its closed form.

    q(m, n) must return the ring element of the (m, n) z2/zbar2-partial of
    the graph function Q.  Common denominator D = 6 d^3 with d = Q_{z2 zbar2}:
      2 p_x0 p_y1                                      -> 12 d^3
      [-|Q_zb|^2 p_y1^2 + i Q_z p_y1 p_z2
         - i Q_zb p_y1 p_zb2 - |p_z2|^2] / (3d)        -> bracket * 2 d^2
      -(2/3)(p_x0 / d^2) Im(Q_{z zb^2}(i Q_z p_y1
         - p_x2 + i p_y2))                             -> -4 d * p_x0 * Im(...)
      +(p_x0^2 / 6 d^2)(3 Q_{z^2 zb^2}
         - 5 Q_{z^2 zb} Q_{z zb^2} / d)                -> p_x0^2 (3 d Q_{z^2 zb^2}
                                                           - 5 Q_{z^2 zb} Q_{z zb^2})
    """
    d = q(1, 1)
    qz, qzb = q(1, 0), q(0, 1)
    q21, q12, q22 = q(2, 1), q(1, 2), q(2, 2)
    zero = 0.0 * d
    d2 = d * d

    n = _new_form(zero)
    _add(n, 0, 1, 12.0 * (d2 * d))
    _add(n, 1, 1, -2.0 * (d2 * (qz * qzb)))
    _expand_pz(n, 1, 2j * (d2 * qz), conjugated=False)
    _expand_pz(n, 1, -2j * (d2 * qzb), conjugated=True)
    _add(n, 2, 2, zero - 2.0 * d2)
    _add(n, 3, 3, zero - 2.0 * d2)

    for nu, v in ((1, q12 * (1j * qz)), (2, -1.0 * q12), (3, 1j * q12)):
        im_v = (v - conj(v)) * (-0.5j)
        _add(n, 0, nu, -4.0 * (d * im_v))

    _add(n, 0, 0, 3.0 * (d * q22) - 5.0 * (q21 * q12))

    return n, 6.0 * (d2 * d)


def _assemble_model(a, z2, z2b):
    """Model Hamiltonian (weighted order <= 6, linear in a) as (N, D=1)."""
    zero = 0.0 * z2
    re2 = 0.5 * (z2 * z2 + z2b * z2b)
    m = z2 * z2b

    n = _new_form(zero)
    _add(n, 0, 0, 24.0 * a * re2)
    _add(n, 0, 1, 2.0 + (-64.0 * a / 3.0) * (m * re2))
    _expand_pz(n, 0, (1j * a / 3.0) * (24.0 * (z2 * z2 * z2b) + 8.0 * z2b ** 3),
               conjugated=False)
    _expand_pz(n, 0, (-1j * a / 3.0) * (8.0 * z2 ** 3 + 24.0 * (z2 * (z2b * z2b))),
               conjugated=True)
    _add(n, 1, 1, (1.0 / 3.0) * (-1.0 * m + (4.0 * a) * ((m * m) * re2)))
    _expand_pz(n, 1, (1j / 3.0) * (z2b - a * (z2 * (4.0 * (m * m) + 6.0 * z2b ** 4))),
               conjugated=False)
    _expand_pz(n, 1, (-1j / 3.0) * (z2 - a * (z2b * (4.0 * (m * m) + 6.0 * z2 ** 4))),
               conjugated=True)
    diag = (-1.0 / 3.0) * (1.0 + (-16.0 * a) * (m * re2))
    _add(n, 2, 2, diag)
    _add(n, 3, 3, diag)

    return n, zero + 1.0


def _assemble_sphere(z2, z2b):
    """Sphere Hamiltonian in its 3x convention as (N, D=1)."""
    zero = 0.0 * z2
    n = _new_form(zero)
    _add(n, 0, 1, zero + 6.0)
    _add(n, 1, 1, -1.0 * (z2 * z2b))
    _add(n, 1, 2, -1j * (z2 - z2b))     # 2 y2
    _add(n, 1, 3, -1.0 * (z2 + z2b))    # -2 x2
    _add(n, 2, 2, zero - 1.0)
    _add(n, 3, 3, zero - 1.0)
    return n, zero + 1.0


# ---------------------------------------------------------------------
# Public evaluator
# ---------------------------------------------------------------------


class Hamiltonian:
    """Evaluator for one Hamiltonian kind; immutable and stateless."""

    def __init__(self, kind, surface=None, a=None):
        if kind not in KINDS:
            raise ValueError(f"unknown Hamiltonian kind {kind!r}")
        if kind in ("full", "rigid"):
            if surface is None:
                raise ValueError(f"kind {kind!r} needs a surface")
            if kind == "rigid" and not surface.is_rigid():
                raise ValueError("kind 'rigid' requires a rigid surface (eta = 0)")
        if kind == "model":
            if a is None:
                a = surface.a if surface is not None else None
            if a is None:
                raise ValueError("kind 'model' needs the coefficient a")
        self.kind = kind
        self.surface = surface
        self.a = float(a) if a is not None else None
        self._compiled = None

    def __repr__(self):
        return f"Hamiltonian(kind={self.kind!r})"

    # -- assembly over a chosen ring -----------------------------------

    def _assemble(self, y1e, z2e, z2be, conj, zero):
        if self.kind == "full":
            memo = {}

            def rp(idx):
                if sum(idx) == 0:
                    return zero
                got = memo.get(idx)
                if got is None:
                    got = self.surface.rho_partial_series(idx).evaluate(
                        y1e, z2e, z2be)
                    memo[idx] = got
                return got

            return _assemble_full(rp, conj)
        if self.kind == "rigid":
            memo = {}

            def q(mm, nn):
                got = memo.get((mm, nn))
                if got is None:
                    got = self.surface._f_deriv(0, mm, nn).evaluate(
                        y1e, z2e, z2be)
                    memo[(mm, nn)] = got
                return got

            return _assemble_rigid(q, conj)
        if self.kind == "model":
            return _assemble_model(self.a, z2e, z2be)
        return _assemble_sphere(z2e, z2be)

    def _assemble_series(self):
        """(N, D) as exact WeightedSeries in (y1, z2, conj z2)."""
        conj = lambda s: s.conjugate()
        zero = WeightedSeries()
        if self.kind == "full":
            def rp(idx):
                if sum(idx) == 0:
                    return zero
                return self.surface.rho_partial_series(idx)

            return _assemble_full(rp, conj)
        if self.kind == "rigid":
            return _assemble_rigid(
                lambda m, n: self.surface._f_deriv(0, m, n), conj)
        z2 = WeightedSeries.monomial(0, 1, 0)
        z2b = WeightedSeries.monomial(0, 0, 1)
        if self.kind == "model":
            return _assemble_model(self.a, z2, z2b)
        return _assemble_sphere(z2, z2b)

    # -- regularity ------------------------------------------------------

    def _check_regular(self, q):
        """Reject points where the contact matrix is numerically singular."""
        if self.kind not in ("full", "rigid"):
            return
        s = self.surface
        pt = (q.y1, q.z2)
        a_mat = np.array([
            [0.0, 1j * s.rho_partial(pt, (0, 1, 0, 0)),
             1j * s.rho_partial(pt, (0, 0, 0, 1))],
            [-1j * s.rho_partial(pt, (1, 0, 0, 0)),
             3 * s.rho_partial(pt, (1, 1, 0, 0)),
             3 * s.rho_partial(pt, (1, 0, 0, 1))],
            [-1j * s.rho_partial(pt, (0, 0, 1, 0)),
             3 * s.rho_partial(pt, (0, 1, 1, 0)),
             3 * s.rho_partial(pt, (0, 0, 1, 1))],
        ])
        cond = np.linalg.cond(a_mat)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularMatrixError(
                f"contact matrix condition number {cond:.3e} at z2={q.z2}")

    # -- evaluation -------------------------------------------------------

    def value(self, q):
        """H(q) as a real number; raises if the assembly drifts off the
        real axis or the contact matrix is singular."""
        self._check_regular(q)
        n, d = self._assemble(q.y1, complex(q.z2), complex(q.z2).conjugate(),
                              lambda x: x.conjugate(), 0j)
        p = (q.px0, q.py1, q.px2, q.py2)
        acc = 0j
        for i in range(4):
            for j in range(4):
                acc += n[i][j] * p[i] * p[j]
        h = acc / d
        scale = 1.0 + abs(h)
        if abs(h.imag) > 1e-12 * scale:
            raise ArithmeticError(
                f"Hamiltonian value has imaginary residue {h.imag:.3e}")
        return h.real

    def value_and_gradient(self, q):
        """(H, H_x, H_p) with the gradients along (x0, y1, x2, y2) and
        (p_x0, p_y1, p_x2, p_y2), via forward-mode jets."""
        self._check_regular(q)
        y1j = Jet.variable(q.y1, 1)
        z2j = Jet(q.z2, (0j, 0j, 1.0, 1j, 0j, 0j, 0j, 0j))
        z2bj = z2j.conjugate()
        pj = (Jet.variable(q.px0, 4), Jet.variable(q.py1, 5),
              Jet.variable(q.px2, 6), Jet.variable(q.py2, 7))
        n, d = self._assemble(y1j, z2j, z2bj,
                              lambda x: x.conjugate(), Jet.constant(0.0))
        acc = Jet.constant(0.0)
        for i in range(4):
            for j in range(4):
                acc = acc + n[i][j] * pj[i] * pj[j]
        h = acc / d
        hx = np.array([p.real for p in h.partials[:4]])
        hp = np.array([p.real for p in h.partials[4:]])
        return h.value.real, hx, hp

    def gradient(self, q):
        _, hx, hp = self.value_and_gradient(q)
        return hx, hp

    # -- fast path ---------------------------------------------------------

    @property
    def compiled(self):
        if self._compiled is None:
            self._compiled = CompiledHamiltonian(self)
        return self._compiled

    def rhs(self, t, y):
        """Hamilton right-hand side over the 8-vector state (fast path)."""
        return self.compiled.rhs(t, y)


def make_hamiltonian(kind, surface=None, a=None):
    """Factory mirroring the four documented kinds."""
    return Hamiltonian(kind, surface=surface, a=a)


class CompiledHamiltonian:
    """Closed-form H = p.N(y1, z2).p / D(y1, z2) with exact polynomial
    coefficients, flattened into one coefficient matrix.

    A single complex matrix-vector product per call evaluates the 10
    distinct N-entries, D, and their three position derivatives, which is
    everything the Hamilton equations need.
    """

    def __init__(self, ham):
        n, d = ham._assemble_series()
        uppers = [n[i][j] for (i, j) in UPPER]

        def d_y1(s):
            return s.diff("y1")

        def d_x2(s):
            return s.diff("z2") + s.diff("z2b")

        def d_y2(s):
            return 1j * (s.diff("z2") - s.diff("z2b"))

        rows = list(uppers) + [d]
        for op in (d_y1, d_x2, d_y2):
            rows.extend(op(s) for s in uppers)
        rows.extend(op(d) for op in (d_y1, d_x2, d_y2))

        keys = sorted(set().union(*[set(s.coeffs) for s in rows]))
        self.exp_y1 = np.array([k for (k, _, _) in keys], dtype=np.int64)
        self.exp_z2 = np.array([al for (_, al, _) in keys], dtype=np.int64)
        self.exp_z2b = np.array([be for (_, _, be) in keys], dtype=np.int64)
        self.coeff_matrix = np.zeros((len(rows), len(keys)), dtype=complex)
        for r, s in enumerate(rows):
            for c, key in enumerate(keys):
                v = s.coeffs.get(key)
                if v is not None:
                    self.coeff_matrix[r, c] = v

    def _rows_at(self, y1, z2):
        z2b = np.conjugate(z2)
        mon = (y1 ** self.exp_y1) * (z2 ** self.exp_z2) * (z2b ** self.exp_z2b)
        return self.coeff_matrix @ mon

    @staticmethod
    def _unpack(vals10):
        n = np.empty((4, 4), dtype=complex)
        for idx, (i, j) in enumerate(UPPER):
            n[i, j] = vals10[idx]
            n[j, i] = vals10[idx]
        return n

    def value(self, y1, z2, p):
        """H at position (y1, z2) and real momenta p = (px0, py1, px2, py2)."""
        vals = self._rows_at(y1, z2)
        n = self._unpack(vals[:10])
        p = np.asarray(p, dtype=float)
        return float((p @ n @ p / vals[10]).real)

    def value_state(self, y):
        return self.value(y[1], complex(y[2], y[3]), y[4:8])

    def values(self, states):
        """Vectorized H over an (m, 8) array of states."""
        states = np.asarray(states, dtype=float)
        y1 = states[:, 1]
        z2 = states[:, 2] + 1j * states[:, 3]
        z2b = np.conjugate(z2)
        mon = ((y1[None, :] ** self.exp_y1[:, None])
               * (z2[None, :] ** self.exp_z2[:, None])
               * (z2b[None, :] ** self.exp_z2b[:, None]))
        vals = self.coeff_matrix @ mon
        p = states[:, 4:8]
        acc = np.zeros(states.shape[0], dtype=complex)
        for idx, (i, j) in enumerate(UPPER):
            w = 1.0 if i == j else 2.0
            acc += w * vals[idx] * p[:, i] * p[:, j]
        return (acc / vals[10]).real

    def rhs(self, t, y):
        """Hamilton equations x' = H_p, p' = -H_x for the 8-vector y."""
        vals = self._rows_at(y[1], complex(y[2], y[3]))
        n = self._unpack(vals[:10])
        d = vals[10]
        p = y[4:8]
        np_vec = n @ p
        h = (p @ np_vec) / d
        dxdt = (2.0 / d) * np_vec
        out = np.empty(8)
        out[0:4] = dxdt.real
        out[4] = 0.0
        for k in range(3):
            nk = self._unpack(vals[11 + 10 * k: 21 + 10 * k])
            dk = vals[41 + k]
            hx = ((p @ nk @ p) - h * dk) / d
            out[5 + k] = -hx.real
        return out


def truncation_gap(surface, q, deltas, return_gaps=False):
    """Log-log slope of |H_full - H_model| under anisotropic scaling.

    Scales the phase point q by each delta, evaluates both the canonical
    Hamiltonian of `surface` and the hard-coded model Hamiltonian at the
    scaled point, and fits the gap's decay exponent.  Gaps below the
    1e-14 cancellation floor are excluded; fewer than two usable points
    raise ValueError.
    """
    full = Hamiltonian("full", surface=surface)
    model = Hamiltonian("model", a=surface.a)
    deltas = np.asarray(list(deltas), dtype=float)
    gaps = []
    for delta in deltas:
        qs = q.anisotropic_scale(delta)
        gaps.append(abs(full.value(qs) - model.value(qs)))
    gaps = np.array(gaps)
    usable = gaps > 1e-14
    if np.count_nonzero(usable) < 2:
        raise ValueError(
            "all truncation gaps at the cancellation floor; cannot fit a slope")
    slope = np.polyfit(np.log(deltas[usable]), np.log(gaps[usable]), 1)[0]
    if return_gaps:
        return float(slope), gaps
    return float(slope)
