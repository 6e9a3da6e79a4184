"""Normal-form hypersurfaces in C^2, their defining-function partials,
the complex Monge-Ampere determinant, and its approximate solutions.

A surface is given in graph normal form

    rho = 2 Re z1 - F(y1, z2, conj z2),
    F   = |z2|^2 + a (z2^4 zbar2^2 + z2^2 zbar2^4) + y1 * eta + delta,

with eta real-valued of weighted order >= 6 (may involve y1) and delta
real-valued of weighted order >= 7 in (z2, conj z2) only.  The real
coefficient a is the cubic curvature coefficient: a = 0 at the origin
means the origin is umbilical.  Note 2a|z2|^4 Re z2^2 expands to the two
monomials above.

The x1-dependence of rho is linear and hard-coded, so all data reduce to
the graph function F.  Ambient points off the surface are supported as
(x1, y1, z2) triples; points on the surface need only (y1, z2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .series import WeightedSeries

# Permutations of (0,1,2) with signs, for 3x3 determinants over any ring.
PERMS3 = (
    ((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
    ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1),
)

# Bordered-Hessian slot (r, c) -> ambient derivative multi-index
# (n_z1, n_zbar1, n_z2, n_zbar2): row r differentiates by z_r, column c
# by conj(z_c), slot 0 means no derivative.
BORDER_IDX = {
    (0, 0): (0, 0, 0, 0),
    (0, 1): (0, 1, 0, 0),
    (0, 2): (0, 0, 0, 1),
    (1, 0): (1, 0, 0, 0),
    (1, 1): (1, 1, 0, 0),
    (1, 2): (1, 0, 0, 1),
    (2, 0): (0, 0, 1, 0),
    (2, 1): (0, 1, 1, 0),
    (2, 2): (0, 0, 1, 1),
}


def det3(m):
    """Determinant of a 3x3 nested list over any commutative ring."""
    total = 0
    for sigma, sign in PERMS3:
        term = m[0][sigma[0]] * m[1][sigma[1]] * m[2][sigma[2]]
        total = total + (term if sign > 0 else -term)
    return total


@dataclass(frozen=True)
class SurfacePoint:
    """Point on the surface: (y1, z2) with x1 determined by rho = 0."""

    y1: float
    z2: complex


class Hypersurface:
    """Strictly pseudoconvex hypersurface in Chern-Moser graph form."""

    def __init__(self, a, eta=None, delta=None):
        self.a = float(a)
        self.eta = eta if eta is not None else WeightedSeries()
        self.delta = delta if delta is not None else WeightedSeries()
        self._validate()
        base = WeightedSeries({(0, 1, 1): 1.0,
                               (0, 4, 2): self.a,
                               (0, 2, 4): self.a})
        y1 = WeightedSeries.monomial(1, 0, 0)
        self.F = base + y1 * self.eta + self.delta
        self._fderiv_cache = {(0, 0, 0): self.F}

    def _validate(self):
        if not self.eta.is_real_valued():
            raise ValueError("eta must be a real-valued series")
        if not self.delta.is_real_valued():
            raise ValueError("delta must be a real-valued series")
        d = self.eta.min_weighted_degree()
        if d is not None and d < 6:
            raise ValueError(f"eta has weighted order {d} < 6")
        d = self.delta.min_weighted_degree()
        if d is not None and d < 7:
            raise ValueError(f"delta has weighted order {d} < 7")
        if any(k > 0 for (k, _, _) in self.delta.coeffs):
            raise ValueError("delta must not involve y1")
        if self.eta.truncation_order is not None or self.delta.truncation_order is not None:
            raise ValueError("eta and delta must be exact polynomials (no truncation)")

    # -- constructors ---------------------------------------------------

    @classmethod
    def sphere(cls):
        """The model sphere 2 Re z1 = |z2|^2 (a = 0, no perturbation)."""
        return cls(0.0)

    @classmethod
    def model(cls, a):
        """The polynomial model 2 Re z1 = |z2|^2 + 2a |z2|^4 Re z2^2."""
        return cls(a)

    @classmethod
    def from_json(cls, source):
        """Build from a JSON document or an already-parsed dict.

        Format: {"a": float, "eta": [[k, alpha, beta, re, im], ...],
                 "delta": [[alpha, beta, re, im], ...]}.
        """
        if isinstance(source, str):
            with open(source, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        else:
            doc = source
        if not isinstance(doc, dict) or "a" not in doc:
            raise ValueError("surface JSON must be an object with an 'a' field")
        eta = WeightedSeries({(int(k), int(al), int(be)): complex(re, im)
                              for k, al, be, re, im in doc.get("eta", [])})
        delta = WeightedSeries({(0, int(al), int(be)): complex(re, im)
                                for al, be, re, im in doc.get("delta", [])})
        return cls(float(doc["a"]), eta, delta)

    def to_json_dict(self):
        return {
            "a": self.a,
            "eta": [[k, al, be, c.real, c.imag]
                    for (k, al, be), c in self.eta.terms()],
            "delta": [[al, be, c.real, c.imag]
                      for (_, al, be), c in self.delta.terms()],
        }

    # -- basic geometry --------------------------------------------------

    def is_rigid(self):
        """True when F does not involve y1 (then rho ignores Im z1)."""
        return not self.eta.coeffs

    def graph_height(self, y1, z2):
        """F(y1, z2, conj z2); on the surface 2 x1 equals this."""
        return self.F.evaluate(y1, z2).real

    def x1_on_surface(self, y1, z2):
        return 0.5 * self.graph_height(y1, z2)

    def rho(self, point):
        """Ambient defining function 2 x1 - F at (x1, y1, z2)."""
        x1, y1, z2 = _coords(self, point)
        return 2.0 * x1 - self.F.evaluate(y1, z2).real

    # -- derivatives ------------------------------------------------------

    def _f_deriv(self, l, m, n):
        """Cached series d^l/dy1^l d^m/dz2^m d^n/dzbar2^n of F."""
        key = (l, m, n)
        cached = self._fderiv_cache.get(key)
        if cached is not None:
            return cached
        if l > 0:
            base = self._f_deriv(l - 1, m, n).diff("y1")
        elif m > 0:
            base = self._f_deriv(l, m - 1, n).diff("z2")
        else:
            base = self._f_deriv(l, m, n - 1).diff("z2b")
        self._fderiv_cache[key] = base
        return base

    def rho_partial_series(self, idx):
        """The (y1, z2, conj z2)-series of an ambient rho-partial, |idx| >= 1.

        idx = (j, k, m, n) counts derivatives in (z1, conj z1, z2, conj z2).
        With y1 = (z1 - conj z1)/(2i), the chain rule gives
        d^idx rho = [idx is a single z1- or zbar1-derivative]
                    - (-i/2)^j (i/2)^k * d_y1^(j+k) d_z2^m d_zbar2^n F.
        """
        j, k, m, n = idx
        if j + k + m + n == 0:
            raise ValueError("rho itself is not a pure series in (y1, z2)")
        series = self._f_deriv(j + k, m, n) * (-((-0.5j) ** j * (0.5j) ** k))
        if idx in ((1, 0, 0, 0), (0, 1, 0, 0)):
            series = series + 1.0
        return series

    def rho_partial_any(self, point, idx):
        """Ambient rho-partial of any order at a point (internal helper)."""
        if sum(idx) == 0:
            return complex(self.rho(point))
        _, y1, z2 = _coords(self, point)
        return self.rho_partial_series(idx).evaluate(y1, z2)

    def rho_partial(self, point, idx):
        """Ambient partial derivative of rho, total order at most 4.

        point: SurfacePoint, (y1, z2) pair, or ambient (x1, y1, z2) triple.
        idx: (n_z1, n_zbar1, n_z2, n_zbar2) with 0 <= sum(idx) <= 4.
        """
        idx = tuple(int(i) for i in idx)
        if len(idx) != 4 or any(i < 0 for i in idx):
            raise ValueError(f"bad derivative multi-index {idx}")
        if sum(idx) > 4:
            raise ValueError(f"derivative order {sum(idx)} exceeds 4")
        return self.rho_partial_any(point, idx)

    def __repr__(self):
        return (f"Hypersurface(a={self.a}, eta={len(self.eta.coeffs)} terms, "
                f"delta={len(self.delta.coeffs)} terms)")


def _coords(surface, point):
    """Normalize a point argument to ambient coordinates (x1, y1, z2)."""
    if isinstance(point, SurfacePoint):
        return (surface.x1_on_surface(point.y1, point.z2),
                float(point.y1), complex(point.z2))
    seq = tuple(point)
    if len(seq) == 2:
        y1, z2 = seq
        return surface.x1_on_surface(y1, z2), float(y1), complex(z2)
    if len(seq) == 3:
        x1, y1, z2 = seq
        return float(x1), float(y1), complex(z2)
    raise ValueError("point must be SurfacePoint, (y1, z2), or (x1, y1, z2)")


def monge_ampere(surface, point):
    """Complex Monge-Ampere determinant J(rho) at an ambient point.

    J(rho) = det [[rho,     rho_zbar1,    rho_zbar2   ],
                  [rho_z1,  rho_z1zbar1,  rho_z1zbar2 ],
                  [rho_z2,  rho_z2zbar1,  rho_z2zbar2 ]].

    Real (up to round-off) since the matrix is Hermitian for real rho.
    """
    b = [[surface.rho_partial_any(point, BORDER_IDX[(r, c)])
          for c in range(3)] for r in range(3)]
    return det3(b)


# ---------------------------------------------------------------------
# Truncated ambient Taylor jets in (z1, zbar1, z2, zbar2)
# ---------------------------------------------------------------------


def _mfact(idx):
    out = 1
    for i in idx:
        out *= math.factorial(i)
    return out


def _gen_binom(alpha, k):
    """Generalized binomial coefficient alpha over k."""
    out = 1.0
    for i in range(k):
        out *= (alpha - i) / (i + 1)
    return out


class TaylorJet:
    """Sparse truncated Taylor polynomial in the 4 ambient variables.

    Coefficients are Taylor coefficients (derivative / multi-factorial)
    at a base point; monomials above `order` in total degree are dropped.
    Only the operations needed by the Monge-Ampere iteration are provided.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order):
        self.order = int(order)
        self.coeffs = {}
        for key, c in coeffs.items():
            if sum(key) <= self.order and c != 0:
                self.coeffs[key] = complex(c)

    @property
    def value(self):
        return self.coeffs.get((0, 0, 0, 0), 0j)

    def truncate(self, order):
        return TaylorJet(self.coeffs, min(self.order, order))

    def partial_value(self, kappa):
        """Value of the kappa-partial of this jet at the base point."""
        if sum(kappa) > self.order:
            raise ValueError("partial order exceeds jet order")
        return self.coeffs.get(tuple(kappa), 0j) * _mfact(kappa)

    def partial_jet(self, kappa, order):
        """The kappa-partial as a jet of the given order."""
        kappa = tuple(kappa)
        if sum(kappa) + order > self.order:
            raise ValueError("jet too short for requested partial jet")
        out = {}
        for key, c in self.coeffs.items():
            nu = tuple(k - q for k, q in zip(key, kappa))
            if any(v < 0 for v in nu) or sum(nu) > order:
                continue
            out[nu] = c * _mfact(key) / _mfact(nu)
        return TaylorJet(out, order)

    def __add__(self, other):
        if isinstance(other, TaylorJet):
            order = min(self.order, other.order)
            out = dict(self.coeffs)
            for key, c in other.coeffs.items():
                out[key] = out.get(key, 0j) + c
            return TaylorJet(out, order)
        out = dict(self.coeffs)
        out[(0, 0, 0, 0)] = out.get((0, 0, 0, 0), 0j) + complex(other)
        return TaylorJet(out, self.order)

    __radd__ = __add__

    def __neg__(self):
        return TaylorJet({k: -c for k, c in self.coeffs.items()}, self.order)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TaylorJet) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TaylorJet):
            order = min(self.order, other.order)
            out = {}
            for k1, c1 in self.coeffs.items():
                for k2, c2 in other.coeffs.items():
                    key = tuple(a + b for a, b in zip(k1, k2))
                    if sum(key) > order:
                        continue
                    out[key] = out.get(key, 0j) + c1 * c2
            return TaylorJet(out, order)
        return TaylorJet({k: c * other for k, c in self.coeffs.items()},
                         self.order)

    __rmul__ = __mul__

    def pow_real(self, alpha):
        """(self)**alpha for real alpha, requiring a nonzero constant term."""
        u0 = self.value
        if u0 == 0:
            raise ValueError("cannot raise a jet with zero value to a real power")
        w = self * (1.0 / u0) - 1.0
        out = TaylorJet({(0, 0, 0, 0): 1.0}, self.order)
        wk = TaylorJet({(0, 0, 0, 0): 1.0}, self.order)
        for k in range(1, self.order + 1):
            wk = wk * w
            out = out + _gen_binom(alpha, k) * wk
        return complex(u0) ** alpha * out


class MongeAmpereApprox:
    """Evaluators for the approximate Monge-Ampere solutions.

    rho1 = rho / J(rho)^(1/3) rescales the defining function so that
    J(rho1) = 1 exactly on the surface (hence 1 + O(rho) near it), and
    the Newton-type step rho2 = rho1 * (5 - J(rho1)) / 4 gains one more
    order, J(rho2) = 1 + O(rho^2).  Each further step of the classical
    iteration would gain one additional order, up to the dimensional
    obstruction.
    """

    def __init__(self, surface):
        self.surface = surface

    def _rho_jet(self, point, order):
        coeffs = {}
        for key in _multi_indices(order):
            d = self.surface.rho_partial_any(point, key)
            if d != 0:
                coeffs[key] = d / _mfact(key)
        return TaylorJet(coeffs, order)

    def _entry_jet(self, point, mu, order):
        """Jet of the rho-partial d^mu rho, built directly from rho."""
        coeffs = {}
        for nu in _multi_indices(order):
            idx = tuple(m + n for m, n in zip(mu, nu))
            d = self.surface.rho_partial_any(point, idx)
            if d != 0:
                coeffs[nu] = d / _mfact(nu)
        return TaylorJet(coeffs, order)

    def _j_jet(self, point, order):
        """Jet of J(rho), from bordered-Hessian entries as jets."""
        b = [[self._entry_jet(point, BORDER_IDX[(r, c)], order)
              for c in range(3)] for r in range(3)]
        return det3(b)

    def _check_positive(self, jval):
        if abs(jval.imag) > 1e-8 * (1.0 + abs(jval.real)) or jval.real <= 0:
            raise ValueError(
                f"Monge-Ampere determinant not positive at this point: {jval}")
        return jval.real

    def _rho1_jet(self, point, order):
        rho_j = self._rho_jet(point, order)
        j_j = self._j_jet(point, order)
        self._check_positive(j_j.value)
        return rho_j * j_j.pow_real(-1.0 / 3.0)

    def _rho2_jet(self, point, order):
        rho1_4 = self._rho1_jet(point, order + 2)
        j1 = self._det_of(rho1_4, order)
        return rho1_4.truncate(order) * ((5.0 - j1) * 0.25)

    @staticmethod
    def _det_of(jet, order):
        """J applied to a defining-function jet, as a jet of given order."""
        b = [[jet.partial_jet(BORDER_IDX[(r, c)], order)
              for c in range(3)] for r in range(3)]
        return det3(b)

    # -- public evaluators ---------------------------------------------

    def j_rho(self, point):
        """J(rho) value; same as monge_ampere()."""
        return monge_ampere(self.surface, point)

    def rho1(self, point):
        rho_val = self.surface.rho(point)
        j_val = self._check_positive(complex(self.j_rho(point)))
        return rho_val * j_val ** (-1.0 / 3.0)

    def rho2(self, point):
        rho1_val = self.rho1(point)
        j1_val = self.j_rho1(point).real
        return rho1_val * (5.0 - j1_val) * 0.25

    def j_rho1(self, point):
        """J evaluated on rho1; equals 1 on the surface, 1 + O(rho) off it."""
        jet = self._rho1_jet(point, 2)
        b = [[jet.partial_value(BORDER_IDX[(r, c)]) for c in range(3)]
             for r in range(3)]
        return det3(b)

    def j_rho2(self, point):
        """J evaluated on rho2; 1 + O(rho^2) near the surface."""
        jet = self._rho2_jet(point, 2)
        b = [[jet.partial_value(BORDER_IDX[(r, c)]) for c in range(3)]
             for r in range(3)]
        return det3(b)


def _multi_indices(order):
    """All 4-variable multi-indices of total degree <= order."""
    out = []
    for n1 in range(order + 1):
        for n1b in range(order + 1 - n1):
            for n2 in range(order + 1 - n1 - n1b):
                for n2b in range(order + 1 - n1 - n1b - n2):
                    out.append((n1, n1b, n2, n2b))
    return out


def approx_ma_solutions(surface):
    """Pointwise evaluators (rho1, rho2) for the improved defining functions."""
    ma = MongeAmpereApprox(surface)
    return ma.rho1, ma.rho2
