"""Chain flow integration and shrinking-family scans.

Chains are the projections to the hypersurface of null geodesics of the
Fefferman metric; concretely they solve Hamilton's equations for the
quadratic momentum form assembled in :mod:`chainlab.hamiltonian`,
restricted to the zero energy level.  This module integrates that
system with an adaptive high-order Runge-Kutta scheme, constructs the
one-parameter family of zero-energy seeds whose orbits shrink toward
the distinguished point of the normal form, detects the near-2*pi
period of each orbit, and extracts the leading deformation coefficient
of the rescaled orbits across the family.

The closed-form sphere chain lives here too; it is the oracle the
integrator is tested against.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .hamiltonian import PhasePoint

TWO_PI = 2.0 * math.pi

# Family parameter range and integrator guard rails.  The seed family is
# an asymptotic construction near s = 0; beyond s = 0.3 the orbits leave
# the regime where the expansions mean anything.
S_MAX = 0.3
TOL_RANGE = (1e-13, 1e-6)
DRIFT_FACTOR = 100.0


def _polyval(coeffs, s):
    """Ascending-order polynomial evaluation; empty tuple is zero."""
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


@dataclass(frozen=True)
class FamilySeed:
    """Polynomial data for the shrinking family of zero-energy seeds.

    Each field is an ascending-order coefficient tuple of a polynomial
    in the family parameter s.  The seed phase point at parameter s is

        x0   = x0_init
        y1   = s^2 phi(s)
        z2   = s + s^5 psi(s)
        p_x0 = -s^2/2 + s^6 chi(s)
        p_y1 = -3/4
        p_z2 = -(3i/4) s + s^5 xi(s)

    with chi fixed by the zero-energy condition (solve_initial_chi).
    psi must be real so the orbit starts on the real z2 axis
    (Im z2(s, 0) = 0), which period detection relies on.
    """

    x0_init: float = 0.0
    phi: tuple = ()
    psi: tuple = ()
    xi: tuple = ()

    def __post_init__(self):
        for name in ("phi", "psi"):
            if any(complex(c).imag != 0.0 for c in getattr(self, name)):
                raise ValueError(f"{name} coefficients must be real")
        object.__setattr__(self, "phi", tuple(float(c) for c in self.phi))
        object.__setattr__(self, "psi", tuple(float(c) for c in self.psi))
        object.__setattr__(self, "xi", tuple(complex(c) for c in self.xi))

    def phase_point(self, s, chi=0.0):
        """Seed phase point at parameter s with the given chi value."""
        return PhasePoint(
            x0=self.x0_init,
            y1=s * s * _polyval(self.phi, s),
            z2=s + s ** 5 * _polyval(self.psi, s),
            px0=-0.5 * s * s + s ** 6 * chi,
            py1=-0.75,
            pz2=-0.75j * s + s ** 5 * _polyval(self.xi, s),
        )


def _bounded_quadratic_root(c2, c1, c0):
    """Smaller-magnitude real root of c2 x^2 + c1 x + c0, computed in the
    numerically stable form (the two roots differ by orders of magnitude
    here: the linear coefficient scales like s^6, the quadratic one like
    s^8)."""
    if c0 == 0.0:
        return 0.0
    if c2 == 0.0:
        if c1 == 0.0:
            raise ArithmeticError("zero-energy equation is degenerate in chi")
        return -c0 / c1
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        raise ArithmeticError("zero-energy quadratic has no real root")
    q = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
    if q == 0.0:
        return 0.0
    roots = [c0 / q, q / c2]
    return min(roots, key=abs)


def solve_initial_chi(ham, s, seed=None):
    """Momentum correction chi closing the zero-energy condition at the
    family seed.

    The Hamiltonian is an exact quadratic in chi (p_x0 enters the
    momentum form quadratically), so the polynomial is reconstructed
    from three evaluations and solved in closed form; the bounded branch
    is the smaller-magnitude root.  The residual is polished with one
    Newton step if rounding in the reconstruction left more than 1e-13.
    """
    if not 0.0 < s <= S_MAX:
        raise ValueError(f"family parameter s={s} outside (0, {S_MAX}]")
    if seed is None:
        seed = FamilySeed()
    h0 = ham.value(seed.phase_point(s, 0.0))
    hp = ham.value(seed.phase_point(s, 1.0))
    hm = ham.value(seed.phase_point(s, -1.0))
    c1 = 0.5 * (hp - hm)
    c2 = 0.5 * (hp + hm) - h0
    chi = _bounded_quadratic_root(c2, c1, h0)
    residual = ham.value(seed.phase_point(s, chi))
    if abs(residual) > 1e-13:
        slope = 2.0 * c2 * chi + c1
        if slope != 0.0:
            chi -= residual / slope
            residual = ham.value(seed.phase_point(s, chi))
    if abs(residual) > 1e-13:
        raise ArithmeticError(
            f"zero-energy root at s={s} left residual {residual:.3e}")
    return float(chi)


class ChainTrajectory:
    """A chain orbit with dense output and an energy audit.

    States are sampled on a uniform grid over the integration window in
    the order (x0, y1, x2, y2, p_x0, p_y1, p_x2, p_y2); the dense
    interpolant gives access at arbitrary times.  The detected period,
    once known, is stored in ``period``.
    """

    def __init__(self, ham, interpolant, t, states, max_h_drift,
                 period=None):
        self.ham = ham
        self.interpolant = interpolant
        self.t = np.asarray(t, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self.max_h_drift = float(max_h_drift)
        self.period = period

    @property
    def t_span(self):
        return float(self.t[0]), float(self.t[-1])

    def state(self, t):
        """Dense-output state at time(s) t, shape (8,) or (m, 8)."""
        out = self.interpolant(np.asarray(t, dtype=float))
        return out.T if out.ndim == 2 else out

    def phase_point(self, t):
        return PhasePoint.from_state(self.interpolant(float(t)))

    def z2(self, t):
        y = self.interpolant(np.asarray(t, dtype=float))
        return y[2] + 1j * y[3]

    def h_residuals(self, t=None):
        """Energy along the orbit (zero up to integrator error)."""
        states = self.states if t is None else np.atleast_2d(self.state(t))
        return self.ham.compiled.values(states)

    def momentum_drift(self):
        """Sup deviation of (p_x0, p_y1) from their initial values."""
        dp = np.abs(self.states[:, 4:6] - self.states[0, 4:6])
        return float(dp[:, 0].max()), float(dp[:, 1].max())

    def to_csv(self, path):
        """Write the sampled orbit; one row per stored time."""
        res = self.h_residuals()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x0", "y1", "re_z2", "im_z2",
                             "p_x0", "p_y1", "p_x2", "p_y2", "H_residual"])
            for k, tk in enumerate(self.t):
                row = [tk, *self.states[k], res[k]]
                writer.writerow([format(v, ".17g") for v in row])
        return path


def integrate_chain(ham, q0, t_span=(0.0, 2.5 * math.pi), rtol=1e-12,
                    atol=1e-12, samples=1025):
    """Integrate Hamilton's equations from the zero-energy point q0.

    Uses the adaptive 8th-order Dormand-Prince pair with dense output.
    Energy preservation is audited at the accepted solver steps and on
    the uniform sample grid; drift beyond DRIFT_FACTOR times the
    integration tolerance aborts with a diagnostic rather than
    returning a polluted orbit.
    """
    if not TOL_RANGE[0] <= rtol <= TOL_RANGE[1]:
        raise ValueError(f"rtol={rtol} outside {TOL_RANGE}")
    if not TOL_RANGE[0] <= atol <= TOL_RANGE[1]:
        raise ValueError(f"atol={atol} outside {TOL_RANGE}")
    h0 = ham.value(q0)
    if abs(h0) > 1e-12:
        raise ValueError(f"seed is off the zero energy level: H = {h0:.3e}")
    compiled = ham.compiled
    sol = solve_ivp(compiled.rhs, tuple(t_span), q0.to_state(),
                    method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True)
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    t_grid = np.linspace(t_span[0], t_span[1], samples)
    states = sol.sol(t_grid).T
    audit_t = np.union1d(sol.t, t_grid)
    drift = float(np.max(np.abs(compiled.values(sol.sol(audit_t).T))))
    limit = DRIFT_FACTOR * max(rtol, atol)
    if drift > limit:
        raise ArithmeticError(
            f"energy drift {drift:.3e} exceeds {limit:.3e}; "
            "orbit left the zero level")
    return ChainTrajectory(ham, sol.sol, t_grid, states, drift)


def detect_period(traj, closure_tol=0.05):
    """Period of a family orbit: the time near 2*pi at which z2 returns
    to the outgoing real half-axis.

    Brackets a sign change of Im z2 inside a window around 2*pi, refines
    it with Brent's method on the dense output, and keeps the crossing
    closest to 2*pi that has Re z2 > 0 and closes the curve within
    closure_tol relative to |z2(0)| (this rejects the half-period
    crossing, which sits on the opposite side of the orbit).  Stores the
    result in ``traj.period`` and returns it.
    """
    t0, t1 = traj.t_span
    if t0 > 0.0 or t1 < 2.5 * math.pi - 1e-12:
        raise ValueError("period detection needs coverage of [0, 2.5*pi]")
    z0 = traj.z2(0.0)
    if abs(z0.imag) > 1e-9 * max(1.0, abs(z0)):
        raise ValueError("orbit does not start on the real z2 axis")

    def im_z2(t):
        return traj.interpolant(t)[3]

    window = np.linspace(1.5 * math.pi, min(2.5 * math.pi, t1), 513)
    im = traj.z2(window).imag
    candidates = []
    for k in range(len(window) - 1):
        if im[k] == 0.0:
            candidates.append(float(window[k]))
        elif im[k] * im[k + 1] < 0.0:
            candidates.append(brentq(im_z2, window[k], window[k + 1],
                                     xtol=1e-13, rtol=4e-15))
    if im[-1] == 0.0:
        candidates.append(float(window[-1]))
    if not candidates:
        raise ArithmeticError("no Im z2 = 0 crossing near t = 2*pi")
    for root in sorted(candidates, key=lambda r: abs(r - TWO_PI)):
        zr = traj.z2(root)
        if zr.real <= 0.0:
            continue
        if abs(zr - z0) > closure_tol * max(abs(z0), 1e-30):
            continue
        traj.period = float(root)
        return traj.period
    raise ArithmeticError(
        "crossings near 2*pi fail the closure check; orbit not periodic")


@dataclass
class ScanEntry:
    """One row of a family scan: either a period-tagged orbit or the
    error that prevented it."""

    s: float
    chi: float = float("nan")
    trajectory: ChainTrajectory | None = None
    error: str | None = None

    @property
    def ok(self):
        return self.trajectory is not None and self.error is None


def _scan_entry(payload):
    """Worker for one family parameter; must stay module-level so scan
    payloads pickle into subprocesses."""
    ham, seed, s, rtol, atol, samples = payload
    try:
        chi = solve_initial_chi(ham, s, seed)
        traj = integrate_chain(ham, seed.phase_point(s, chi),
                               (0.0, 2.5 * math.pi), rtol=rtol, atol=atol,
                               samples=samples)
        detect_period(traj)
        return ScanEntry(s=s, chi=chi, trajectory=traj)
    except Exception as exc:  # per-s isolation is the scan contract
        return ScanEntry(s=s, error=f"{type(exc).__name__}: {exc}")


def family_scan(ham, s_grid, seed=None, rtol=1e-12, atol=1e-12,
                samples=1025, jobs=None):
    """Integrate one family orbit per grid value of s.

    Orbits are seeded by solve_initial_chi, integrated independently
    over [0, 2.5*pi], and period-detected.  Failures are recorded on the
    corresponding ScanEntry instead of aborting the scan.  With
    jobs > 1 the entries are computed in worker processes and merged
    back in grid order, so results are deterministic either way.
    """
    s_values = [float(s) for s in s_grid]
    if len(s_values) < 4:
        raise ValueError("family scans need at least 4 values of s")
    if any(not 0.0 < s <= S_MAX for s in s_values):
        raise ValueError(f"s grid must lie inside (0, {S_MAX}]")
    if seed is None:
        seed = FamilySeed()
    payloads = [(ham, seed, s, rtol, atol, samples) for s in s_values]
    if jobs is not None and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_scan_entry, payloads))
    return [_scan_entry(p) for p in payloads]


@dataclass
class FitResult:
    """Leading-order deformation of the rescaled family orbits.

    kernel[j] is the s^4 coefficient of zhat(s, t_j) - e^{i t_j} on the
    common phase grid t_grid, with the s^5 contribution absorbed by
    ``nuisance``; c3 is the e^{3it} Fourier component of the kernel.
    """

    t_grid: np.ndarray
    kernel: np.ndarray
    nuisance: np.ndarray
    c3: complex
    residual: float
    condition: float


def fit_cubic_coefficient(entries, n_grid=256):
    """Fit the order-s^4 deformation of the rescaled orbits and return
    its e^{3it} component.

    Each successful orbit is resampled at n_grid uniform phases of its
    own period, rescaled by 1/s, and the deviation from the unit circle
    e^{it} is least-squares fitted per phase against [s^4, s^5].  The
    s^5 nuisance column is essential: the deviation is only O(s^6) clean
    after it, and a pure s^4 fit would bias the result.  The s^4
    coefficient is then Fourier-analyzed on the phase grid.
    """
    good = [e for e in entries if e.ok]
    if len(good) < 4:
        raise ValueError("need at least 4 successful orbits to fit")
    if any(e.trajectory.period is None for e in good):
        raise ValueError("orbits must carry detected periods")
    s = np.array([e.s for e in good])
    design = np.column_stack([s ** 4, s ** 5])
    condition = float(np.linalg.cond(design))
    if condition > 1e8:
        raise ArithmeticError(
            f"deformation fit is ill-conditioned (cond = {condition:.3e}); "
            "widen the s grid")
    theta = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
    circle = np.exp(1j * theta)
    data = np.array([e.trajectory.z2(theta * (e.trajectory.period / TWO_PI))
                     / e.s - circle for e in good])
    coef, *_ = np.linalg.lstsq(design.astype(complex), data, rcond=None)
    residual = float(np.sqrt(np.mean(np.abs(data - design @ coef) ** 2)))
    c3 = complex(np.fft.fft(coef[0])[3] / n_grid)
    return FitResult(theta, coef[0], coef[1], c3, residual, condition)


def single_orbit_cubic(entry, n_grid=256):
    """Per-orbit estimate of the e^{3it} deformation component.

    Unlike fit_cubic_coefficient this cannot remove the s^5 nuisance
    term, so it carries an O(s) relative bias; it serves as a cheap
    per-s summary in scan reports.
    """
    traj = entry.trajectory
    theta = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
    dev = traj.z2(theta * (traj.period / TWO_PI)) / entry.s \
        - np.exp(1j * theta)
    return complex(np.fft.fft(dev)[3] / n_grid / entry.s ** 4)


def sphere_chain_closed_form(q0, t):
    """Exact sphere-kind chain through q0, sampled at times t; returns
    an (m, 8) state array.

    On the sphere the z2 component obeys z2'' = -ic z2' with c = 4 p_y1,
    hence traces the circle z2(t) = c1 e^{-ict} + c2; y1 advances
    linearly plus a pure oscillation, x0 is linear, p_x0 and p_y1 are
    conserved, and p_z2 rides the same circle.  No zero-energy condition
    is required.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    c = 4.0 * q0.py1
    z0 = complex(q0.z2)
    pz0 = complex(q0.pz2)
    dz0 = -0.5j * c * z0 - 2.0 * pz0
    if c != 0.0:
        c1 = 1j * dz0 / c
        c2 = z0 - c1
        phase = np.exp(-1j * c * t)
        z2 = c1 * phase + c2
        pz2 = 0.25j * c * (c1 * phase - c2)
        y1 = (q0.y1 + (6.0 * q0.px0 - c * abs(c1) ** 2) * t
              - np.real(1j * np.conjugate(c2) * c1 * (phase - 1.0)))
    else:
        z2 = z0 + dz0 * t
        pz2 = np.full(t.shape, pz0)
        y1 = q0.y1 + (6.0 * q0.px0
                      - 2.0 * (np.conjugate(z0) * pz0).imag) * t
    out = np.empty((t.size, 8))
    out[:, 0] = q0.x0 + 6.0 * q0.py1 * t
    out[:, 1] = y1
    out[:, 2] = z2.real
    out[:, 3] = z2.imag
    out[:, 4] = q0.px0
    out[:, 5] = q0.py1
    out[:, 6] = pz2.real
    out[:, 7] = pz2.imag
    return out
