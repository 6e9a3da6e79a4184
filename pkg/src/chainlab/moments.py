"""Moment conditions for stationary-disc attachment along chain traces.

A closed curve on the hypersurface bounds a stationary disc exactly
when some positive boundary multiplier makes both components of the
conormal lift extend holomorphically into the disc, and holomorphic
extendability on a closed curve is the vanishing of every nonnegative
contour moment.  This module builds closed curves from integrated chain
orbits, forms the moment rows of the lift kernels, finds the best
trigonometric multiplier in least squares, and scans the optimal
residual across the shrinking family.  On the sphere the residual sits
at rounding level; a nonzero sixth-order coefficient of the normal form
forces a residual of order s^4 that no multiplier can remove, scaling
linearly in that coefficient.

The multiplier is solved directly as a trigonometric polynomial along
the curve rather than through a conformal reparametrization; the
unknown enters the rows linearly and only its boundary values matter,
so no numerical Riemann map is needed.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .flow import FamilySeed, detect_period, integrate_chain, solve_initial_chi
from .hamiltonian import make_hamiltonian
from .surface import Hypersurface

TWO_PI = 2.0 * math.pi

ON_SURFACE_TOL = 1e-10
CLOSURE_TOL = 1e-8  # relative to the curve scale s


class SurfaceCurve:
    """A closed chain trace on the hypersurface, uniformly sampled.

    Holds N samples (N a power of two) of z2, its time derivative taken
    from the Hamiltonian right-hand side (never finite differences),
    y1, and the x1 recovered from the defining equation, over one period
    [0, T).  The scale parameter s tags curves from the shrinking
    family; it normalizes the moment rows.
    """

    def __init__(self, s, t, z2, dz2, y1, x1, period):
        self.s = float(s)
        self.t = np.asarray(t, dtype=float)
        self.z2 = np.asarray(z2, dtype=complex)
        self.dz2 = np.asarray(dz2, dtype=complex)
        self.y1 = np.asarray(y1, dtype=float)
        self.x1 = np.asarray(x1, dtype=float)
        self.period = float(period)
        n = self.t.size
        if n < 8 or n & (n - 1) != 0:
            raise ValueError(f"sample count {n} is not a power of two >= 8")

    @property
    def n(self):
        return self.t.size

    @classmethod
    def from_trajectory(cls, traj, surface, n=512, closure_tol=CLOSURE_TOL):
        """Resample one period of a chain orbit onto a uniform grid.

        The orbit must carry a detected period.  Checks that the curve
        closes up (|z2(T) - z2(0)| <= closure_tol * s) and is simple
        (winding number about the centroid is +-1); the scale s is read
        off the seed convention z2(0) = s + O(s^5).
        """
        if traj.period is None:
            raise ValueError("trajectory has no detected period; "
                             "run detect_period first")
        period = traj.period
        s = abs(traj.z2(0.0))
        defect = abs(traj.z2(period) - traj.z2(0.0))
        if defect > closure_tol * s:
            raise ValueError(
                f"curve fails to close: defect {defect:.3e} exceeds "
                f"{closure_tol:.1e} * s = {closure_tol * s:.3e}")
        t = np.arange(n) * (period / n)
        states = traj.state(t)
        z2 = states[:, 2] + 1j * states[:, 3]
        y1 = states[:, 1]
        rhs = traj.ham.compiled.rhs
        dz2 = np.empty(n, dtype=complex)
        for k in range(n):
            deriv = rhs(t[k], states[k])
            dz2[k] = complex(deriv[2], deriv[3])
        x1 = 0.5 * np.real(surface.F.evaluate(y1, z2))
        curve = cls(s, t, z2, dz2, y1, x1, period)
        curve._check_simple()
        return curve

    @classmethod
    def from_circle(cls, radius=1.0, n=256):
        """Exact circle z2 = radius * e^{it} on the sphere; the chain
        trace of the spherical model, useful as a quadrature fixture."""
        t = np.arange(n) * (TWO_PI / n)
        z2 = radius * np.exp(1j * t)
        return cls(radius, t, z2, 1j * z2, np.zeros(n),
                   np.full(n, 0.5 * radius ** 2), TWO_PI)

    def _check_simple(self):
        w = self.z2 - self.z2.mean()
        if np.min(np.abs(w)) == 0.0:
            raise ValueError("curve passes through its centroid")
        angles = np.unwrap(np.angle(np.concatenate([w, w[:1]])))
        winding = (angles[-1] - angles[0]) / TWO_PI
        if abs(abs(winding) - 1.0) > 1e-6:
            raise ValueError(f"curve is not simple: winding {winding:.3f}")

    def surface_residual(self, surface):
        """Sup of |rho| over the samples (zero by construction up to
        rounding when x1 came from the defining equation)."""
        f = np.real(surface.F.evaluate(self.y1, self.z2))
        return float(np.max(np.abs(2.0 * self.x1 - f)))


def contour_moment(curve, integrand, m):
    """Trapezoidal quadrature of the contour moment ∮ z^m φ dz.

    The integrand φ must be sampled on the curve's own grid; dz comes
    from the stored flow derivative.  For smooth periodic data the
    closed-curve trapezoid rule is spectrally accurate.
    """
    phi = np.asarray(integrand)
    if phi.shape != curve.z2.shape:
        raise ValueError("integrand samples do not match the curve grid")
    if m < 0:
        raise ValueError("moment index must be nonnegative")
    weights = curve.z2 ** m * phi * curve.dz2
    return complex(np.sum(weights) * (curve.period / curve.n))


def stationarity_integrands(surface, curve):
    """Samples of the lift kernels along the curve: (z ρ_z1, z ρ_z2).

    These are the two components whose product with the boundary
    multiplier must pass every moment condition; the multiplier itself
    is excluded here.  Requires the curve to lie on the surface.
    """
    resid = curve.surface_residual(surface)
    if resid > ON_SURFACE_TOL:
        raise ValueError(
            f"curve is off the surface by {resid:.3e} (> {ON_SURFACE_TOL})")
    rz1 = surface.rho_partial_series((1, 0, 0, 0)).evaluate(curve.y1, curve.z2)
    rz2 = surface.rho_partial_series((0, 0, 1, 0)).evaluate(curve.y1, curve.z2)
    return curve.z2 * rz1, curve.z2 * rz2


@dataclass
class StationarityReport:
    """Outcome of the least-squares multiplier solve on one curve.

    gamma maps Fourier index k to the multiplier coefficient, with
    gamma[0] = 1 pinned by normalization and gamma[-k] the conjugate of
    gamma[k], so the multiplier c(t) = sum_k gamma[k] e^{ikt} is real.
    residual is the RMS magnitude of the moment rows at the optimum;
    c_min is the positivity diagnostic (the solve itself is
    unconstrained: the obstruction is a lower bound on the unconstrained
    residual, which is the stronger statement).
    """

    s: float
    residual: float
    gamma: dict
    c_min: float
    modes: int
    max_moment: int
    n: int
    condition: float

    def multiplier(self, t):
        """Reconstructed multiplier c(t) on arbitrary times."""
        t = np.asarray(t, dtype=float)
        c = np.full(t.shape, 1.0)
        for k in range(1, self.modes + 1):
            g = self.gamma[k]
            c = c + 2.0 * (g.real * np.cos(k * t) - g.imag * np.sin(k * t))
        return c

    def to_json_dict(self, slope_context=None):
        return {
            "s": self.s,
            "residual": self.residual,
            "slope_context": slope_context,
            "gamma": [[k, self.gamma[k].real, self.gamma[k].imag]
                      for k in sorted(self.gamma)],
            "c_min": self.c_min,
            "K": self.modes,
            "M_max": self.max_moment,
            "N": self.n,
        }


def stationarity_residual(surface, curve, modes=8, max_moment=16):
    """Best-multiplier moment residual of a closed chain trace.

    Writes the multiplier as c(t) = 1 + sum_{0<|k|<=modes} gamma_k
    e^{ikt} with gamma_{-k} = conj(gamma_k), forms the moment rows

        ∮ zh^m c(t) (zh ρ_z1)           dzh   m = 0..max_moment
        ∮ zh^m c(t) (zh ρ_z2 / s)       dzh   m = 0..max_moment

    on the rescaled curve zh = z2 / s (each row is the physical-curve
    moment divided by s^{m+2}, resp. s^{m+3}, which keeps all rows of
    comparable size across the family), and minimizes the stacked RMS
    over the 2*modes free real coefficients.  gamma_0 is never a free
    variable, so the normalization survives the solve by construction.
    """
    if modes < 4:
        raise ValueError("need at least 4 multiplier modes")
    if max_moment < modes + 2:
        raise ValueError("moment count must exceed mode count by >= 2")
    if curve.n < 8 * (modes + max_moment):
        raise ValueError(
            f"curve resolution {curve.n} too coarse for modes={modes}, "
            f"max_moment={max_moment}")
    g_phys, h_phys = stationarity_integrands(surface, curve)
    s = curve.s
    zhat = curve.z2 / s
    dzhat = curve.dz2 / s
    weight_g = (g_phys / s) * dzhat
    weight_h = (h_phys / s ** 2) * dzhat
    powers = zhat[None, :] ** np.arange(max_moment + 1)[:, None]
    dt = curve.period / curve.n

    basis = np.empty((2 * modes, curve.n))
    for k in range(1, modes + 1):
        basis[k - 1] = 2.0 * np.cos(k * curve.t)
        basis[modes + k - 1] = -2.0 * np.sin(k * curve.t)

    def rows(cvals):
        return dt * np.concatenate([powers @ (cvals * weight_g),
                                    powers @ (cvals * weight_h)])

    base = rows(np.ones(curve.n))
    columns = np.stack([rows(b) for b in basis], axis=1)
    a_real = np.concatenate([columns.real, columns.imag])
    rhs = -np.concatenate([base.real, base.imag])
    coeffs, *_ = np.linalg.lstsq(a_real, rhs, rcond=None)
    condition = float(np.linalg.cond(a_real))
    final = base + columns @ coeffs
    residual = float(np.sqrt(np.mean(np.abs(final) ** 2)))

    gamma = {0: 1.0 + 0.0j}
    for k in range(1, modes + 1):
        gamma[k] = complex(coeffs[k - 1], coeffs[modes + k - 1])
        gamma[-k] = gamma[k].conjugate()
    report = StationarityReport(
        s=s, residual=residual, gamma=gamma, c_min=0.0, modes=modes,
        max_moment=max_moment, n=curve.n, condition=condition)
    report.c_min = float(np.min(report.multiplier(curve.t)))
    return report


def fourier_coeffs(samples):
    """Discrete Fourier coefficients {k: gamma_k} with gamma_0 = mean.

    Indices run over the symmetric range of the sample count; for real
    input gamma_{-k} is the conjugate of gamma_k to rounding.
    """
    samples = np.asarray(samples)
    n = samples.size
    c = np.fft.fft(samples) / n
    return {k: complex(c[k % n]) for k in range(-(n // 2), (n + 1) // 2)}


# ---------------------------------------------------------------------
# Family-wide obstruction scan
# ---------------------------------------------------------------------


@dataclass
class ObstructionRun:
    """Residuals of one coefficient value across the s-grid.

    slope is the log-log fit of residual against s over the usable
    sub-grid (points safely above the numerical floor measured by the
    spherical baseline); amplitude is the geometric mean of
    residual / s^4 there, i.e. the constant C in residual ~ C s^4 with
    the theoretical order pinned, which makes amplitudes comparable
    across coefficient values.  reports holds the per-s multiplier
    solves (None where the pipeline failed).
    """

    a: float
    s_values: list
    residuals: list
    reports: list
    errors: list
    usable: list
    slope: float | None = None
    amplitude: float | None = None


@dataclass
class ObstructionResult:
    """Baseline (a = 0) plus per-coefficient obstruction runs."""

    baseline: ObstructionRun
    runs: list

    def run_for(self, a):
        for run in self.runs:
            if run.a == a:
                return run
        raise KeyError(f"no run for a={a}")

    def amplitude_ratio(self, a_num, a_den):
        return self.run_for(a_num).amplitude / self.run_for(a_den).amplitude


def _residual_entry(payload):
    """Worker: one (a, s) cell of the obstruction scan; module-level so
    payloads pickle into subprocesses."""
    (a, s, seed, modes, max_moment, n_curve, rtol, atol) = payload
    try:
        surface = Hypersurface.model(a)
        ham = make_hamiltonian("full", surface=surface)
        chi = solve_initial_chi(ham, s, seed)
        traj = integrate_chain(ham, seed.phase_point(s, chi),
                               (0.0, 2.5 * math.pi), rtol=rtol, atol=atol,
                               samples=257)
        detect_period(traj)
        curve = SurfaceCurve.from_trajectory(traj, surface, n=n_curve)
        report = stationarity_residual(surface, curve, modes=modes,
                                       max_moment=max_moment)
        return report, None
    except Exception as exc:
        return None, f"{type(exc).__name__}: {exc}"


NOISE_SEPARATION = 100.0


def obstruction_scan(a_values, s_grid, seed=None, modes=8, max_moment=16,
                     n_curve=512, rtol=1e-12, atol=1e-12, jobs=None):
    """Residual-versus-s scan demonstrating the stationarity obstruction.

    Runs the spherical baseline a = 0 plus every requested coefficient
    value; for each a the chains of the model surface are integrated
    with the exact Hamiltonian, traced onto the surface, and scored by
    stationarity_residual.  Grid points whose residual is not at least
    NOISE_SEPARATION times the baseline at the same s are excluded from
    the fits (reported in ``usable``); slope and amplitude come from the
    remaining points when at least three survive.
    """
    s_values = [float(s) for s in s_grid]
    if len(s_values) < 5:
        raise ValueError("obstruction scans need at least 5 values of s")
    if seed is None:
        seed = FamilySeed()
    requested = [float(a) for a in a_values]
    all_a = [0.0] + [a for a in requested if a != 0.0]
    payloads = [(a, s, seed, modes, max_moment, n_curve, rtol, atol)
                for a in all_a for s in s_values]
    if jobs is not None and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_residual_entry, payloads))
    else:
        outcomes = [_residual_entry(p) for p in payloads]

    runs = {}
    for idx, (a, s, *_rest) in enumerate(payloads):
        report, error = outcomes[idx]
        run = runs.setdefault(a, ObstructionRun(
            a=a, s_values=[], residuals=[], reports=[], errors=[],
            usable=[]))
        run.s_values.append(s)
        run.residuals.append(math.nan if report is None else report.residual)
        run.reports.append(report)
        run.errors.append(error)

    baseline = runs[0.0]
    baseline.usable = [False] * len(s_values)
    floor = {s: r for s, r in zip(baseline.s_values, baseline.residuals)}
    for a, run in runs.items():
        if a == 0.0:
            continue
        run.usable = [
            err is None and math.isfinite(r) and math.isfinite(floor[s])
            and r >= NOISE_SEPARATION * floor[s]
            for s, r, err in zip(run.s_values, run.residuals, run.errors)]
        picked_s = [s for s, u in zip(run.s_values, run.usable) if u]
        picked_r = [r for r, u in zip(run.residuals, run.usable) if u]
        if len(picked_s) >= 3:
            logs = np.log(np.asarray(picked_s))
            logr = np.log(np.asarray(picked_r))
            run.slope = float(np.polyfit(logs, logr, 1)[0])
            run.amplitude = float(np.exp(np.mean(logr - 4.0 * logs)))
    return ObstructionResult(
        baseline=baseline,
        runs=[runs[a] for a in all_a if a != 0.0])


# ---------------------------------------------------------------------
# Sphere stationary-disc fixture
# ---------------------------------------------------------------------


@dataclass
class DiscReport:
    """Checks of the explicit stationary disc attached to the sphere."""

    attachment_defect: float
    g_moment_max: float
    h_moment_max: float
    moments_checked: int
    ok: bool


def verify_sphere_disc(n_samples=256, max_moment=32):
    """Verify the explicit disc zeta -> (1 - zeta, 1 - zeta) on the
    sphere: boundary attachment is an algebraic identity, and with a
    constant positive multiplier both lift kernels pass every moment
    condition (they are polynomials in zeta).
    """
    sphere = Hypersurface.sphere()
    t = np.arange(n_samples) * (TWO_PI / n_samples)
    zeta = np.exp(1j * t)
    w = 1.0 - zeta
    z2 = 1.0 - zeta
    attachment = float(np.max(np.abs(2.0 * w.real - np.abs(z2) ** 2)))
    rz1 = sphere.rho_partial_series((1, 0, 0, 0)).evaluate(w.imag, z2)
    rz2 = sphere.rho_partial_series((0, 0, 1, 0)).evaluate(w.imag, z2)
    g_kernel = zeta * rz1
    h_kernel = zeta * rz2
    dzeta = 1j * zeta * (TWO_PI / n_samples)
    powers = zeta[None, :] ** np.arange(max_moment + 1)[:, None]
    g_moments = np.abs(powers @ (g_kernel * dzeta))
    h_moments = np.abs(powers @ (h_kernel * dzeta))
    report = DiscReport(
        attachment_defect=attachment,
        g_moment_max=float(g_moments.max()),
        h_moment_max=float(h_moments.max()),
        moments_checked=max_moment + 1,
        ok=bool(attachment <= 1e-14
                and g_moments.max() <= 1e-12
                and h_moments.max() <= 1e-12),
    )
    return report
