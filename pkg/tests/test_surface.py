"""Surface geometry tests against an independent symbolic oracle.

The oracle rebuilds rho = 2 Re z1 - F in four independent ambient
symbols with sympy, differentiates it symbolically, and evaluates at
random points; the package's series-based partials and the bordered
Monge-Ampere determinant must agree to rounding.
"""

import math

import numpy as np
import pytest
import sympy as sp

from chainlab.series import WeightedSeries
from chainlab.surface import (
    Hypersurface,
    MongeAmpereApprox,
    SurfacePoint,
    TaylorJet,
    approx_ma_solutions,
    det3,
    monge_ampere,
)

A_TEST = 0.3
ETA_TEST = {(0, 3, 3): 0.4, (1, 2, 2): 0.25}
DELTA_TEST = {(0, 4, 3): 0.1 + 0.05j, (0, 3, 4): 0.1 - 0.05j}


def make_test_surface():
    return Hypersurface(A_TEST,
                        eta=WeightedSeries(ETA_TEST),
                        delta=WeightedSeries(DELTA_TEST))


def sympy_rho(surface):
    """rho as a sympy expression in independent (z1, zb1, z2, zb2)."""
    z1, zb1, z2, zb2 = sp.symbols("z1 zb1 z2 zb2")
    y1 = (z1 - zb1) / (2 * sp.I)
    f = sp.Integer(0)
    for (k, al, be), c in surface.F.coeffs.items():
        f += sp.nsimplify(c, rational=True) * y1 ** k * z2 ** al * zb2 ** be
    return (z1, zb1, z2, zb2), z1 + zb1 - f


def ambient_subs(symbols, x1, y1, w):
    z1, zb1, z2, zb2 = symbols
    return {z1: x1 + sp.I * y1, zb1: x1 - sp.I * y1,
            z2: w, zb2: np.conjugate(w)}


def all_indices(max_order):
    out = []
    for j in range(max_order + 1):
        for k in range(max_order + 1 - j):
            for m in range(max_order + 1 - j - k):
                for n in range(max_order + 1 - j - k - m):
                    if 1 <= j + k + m + n:
                        out.append((j, k, m, n))
    return out


def test_rho_partials_match_symbolic_oracle():
    surface = make_test_surface()
    symbols, rho = sympy_rho(surface)
    rng = np.random.default_rng(42)
    points = [(rng.normal(0, 0.3), rng.normal(0, 0.3),
               complex(rng.normal(0, 0.4), rng.normal(0, 0.4)))
              for _ in range(3)]
    for idx in all_indices(4):
        d = sp.diff(rho, *[s for s, n in zip(symbols, idx) for _ in range(n)])
        for x1, y1, w in points:
            want = complex(d.subs(ambient_subs(symbols, x1, y1, w)).evalf())
            got = surface.rho_partial((x1, y1, w), idx)
            assert abs(got - want) <= 1e-10 * (1 + abs(want)), (idx, x1, y1, w)


def test_rho_partial_validation():
    surface = make_test_surface()
    pt = (0.1, 0.2, 0.3 + 0.1j)
    with pytest.raises(ValueError):
        surface.rho_partial(pt, (2, 2, 1, 0))  # order 5
    with pytest.raises(ValueError):
        surface.rho_partial(pt, (1, -1, 0, 0))
    with pytest.raises(ValueError):
        surface.rho_partial_series((0, 0, 0, 0))
    # order zero through rho_partial is rho itself
    assert surface.rho_partial(pt, (0, 0, 0, 0)) == surface.rho(pt)


def test_rho_vanishes_on_surface_and_grows_off_it():
    surface = make_test_surface()
    rng = np.random.default_rng(1)
    for _ in range(10):
        y1 = rng.normal(0, 0.3)
        w = complex(rng.normal(0, 0.3), rng.normal(0, 0.3))
        p = SurfacePoint(y1, w)
        assert abs(surface.rho(p)) <= 1e-14
        assert abs(surface.rho((y1, w))) <= 1e-14
        x1 = surface.x1_on_surface(y1, w)
        assert abs(surface.rho((x1 + 0.25, y1, w)) - 0.5) <= 1e-14


def test_conjugation_symmetry_of_partials():
    # rho real: d^(j,k,m,n) rho = conj(d^(k,j,n,m) rho)
    surface = make_test_surface()
    pt = (0.15, -0.2, 0.3 - 0.25j)
    for idx in all_indices(4):
        j, k, m, n = idx
        a = surface.rho_partial(pt, idx)
        b = surface.rho_partial(pt, (k, j, n, m))
        assert abs(a - b.conjugate()) <= 1e-12 * (1 + abs(a))


def test_monge_ampere_matches_symbolic_oracle():
    surface = make_test_surface()
    symbols, rho = sympy_rho(surface)
    z1, zb1, z2, zb2 = symbols
    det = sp.Matrix([
        [rho, sp.diff(rho, zb1), sp.diff(rho, zb2)],
        [sp.diff(rho, z1), sp.diff(rho, z1, zb1), sp.diff(rho, z1, zb2)],
        [sp.diff(rho, z2), sp.diff(rho, z2, zb1), sp.diff(rho, z2, zb2)],
    ]).det()
    rng = np.random.default_rng(8)
    for _ in range(4):
        x1 = rng.normal(0, 0.3)
        y1 = rng.normal(0, 0.3)
        w = complex(rng.normal(0, 0.4), rng.normal(0, 0.4))
        want = complex(det.subs(ambient_subs(symbols, x1, y1, w)).evalf())
        got = monge_ampere(surface, (x1, y1, w))
        assert abs(got - want) <= 1e-10 * (1 + abs(want))


def test_monge_ampere_real_on_surface():
    surface = make_test_surface()
    rng = np.random.default_rng(17)
    for _ in range(10):
        p = SurfacePoint(rng.normal(0, 0.3),
                         complex(rng.normal(0, 0.3), rng.normal(0, 0.3)))
        j = monge_ampere(surface, p)
        assert abs(j.imag) <= 1e-12 * (1 + abs(j))


def test_sphere_monge_ampere_is_exactly_one():
    sphere = Hypersurface.sphere()
    rng = np.random.default_rng(2)
    for _ in range(5):
        pt = (rng.normal(), rng.normal(), complex(rng.normal(), rng.normal()))
        assert abs(monge_ampere(sphere, pt) - 1.0) <= 1e-14
    # hence both improved defining functions coincide with rho
    rho1, rho2 = approx_ma_solutions(sphere)
    pt = (0.7, -0.3, 0.2 + 0.4j)
    assert abs(rho1(pt) - sphere.rho(pt)) <= 1e-13
    assert abs(rho2(pt) - sphere.rho(pt)) <= 1e-13


def test_surface_validation():
    with pytest.raises(ValueError):  # eta weight 4 < 6
        Hypersurface(0.1, eta=WeightedSeries({(0, 2, 2): 1.0}))
    with pytest.raises(ValueError):  # delta weight 6 < 7
        Hypersurface(0.1, delta=WeightedSeries({(0, 3, 3): 1.0}))
    with pytest.raises(ValueError):  # delta must not involve y1
        Hypersurface(0.1, delta=WeightedSeries({(1, 4, 3): 1.0,
                                                (1, 3, 4): 1.0}))
    with pytest.raises(ValueError):  # not real-valued
        Hypersurface(0.1, eta=WeightedSeries({(0, 4, 2): 1.0}))
    with pytest.raises(ValueError):  # truncated series rejected
        Hypersurface(0.1, eta=WeightedSeries({(0, 3, 3): 1.0},
                                             truncation_order=8))


def test_rigidity_flag():
    assert Hypersurface.model(0.5).is_rigid()
    assert not make_test_surface().is_rigid()
    rigid = Hypersurface(0.2, delta=WeightedSeries(DELTA_TEST))
    assert rigid.is_rigid()


def test_json_round_trip():
    surface = make_test_surface()
    doc = surface.to_json_dict()
    back = Hypersurface.from_json(doc)
    assert back.a == surface.a
    assert back.F.coeffs == surface.F.coeffs
    with pytest.raises(ValueError):
        Hypersurface.from_json({"eta": []})


def test_graph_height_model():
    surface = Hypersurface.model(0.5)
    w = 0.3 + 0.2j
    want = abs(w) ** 2 + 2 * 0.5 * abs(w) ** 4 * (w ** 2).real
    assert abs(surface.graph_height(0.7, w) - want) <= 1e-14


# -- Taylor jets and the Monge-Ampere iteration --------------------------


def test_taylor_jet_partials_and_powers():
    # jet of (1 + u)^(-1/3) times its cube times (1+u) must be 1
    coeffs = {(0, 0, 0, 0): 2.0, (1, 0, 0, 0): 0.5, (0, 0, 1, 1): -0.3,
              (0, 1, 0, 0): 0.25j}
    jet = TaylorJet(coeffs, 4)
    root = jet.pow_real(-1.0 / 3.0)
    prod = root * root * root * jet
    assert abs(prod.value - 1.0) <= 1e-12
    for key, c in prod.coeffs.items():
        if sum(key) > 0:
            assert abs(c) <= 1e-12, key
    # partial_value returns derivatives, not raw coefficients
    q = TaylorJet({(2, 0, 1, 0): 3.0}, 4)
    assert q.partial_value((2, 0, 1, 0)) == 6.0
    sub = q.partial_jet((1, 0, 0, 0), 2)
    assert sub.coeffs == {(1, 0, 1, 0): 6.0}
    with pytest.raises(ValueError):
        q.partial_jet((2, 0, 1, 0), 3)  # 3 + 3 > 4


def test_det3_matches_numpy():
    rng = np.random.default_rng(4)
    for _ in range(10):
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        got = det3([[m[r, c] for c in range(3)] for r in range(3)])
        assert abs(got - np.linalg.det(m)) <= 1e-12 * (1 + abs(got))


def test_ma_iterates_on_surface_values():
    surface = Hypersurface.model(0.5)
    ma = MongeAmpereApprox(surface)
    p = SurfacePoint(0.0, 0.4 + 0.25j)
    # both iterates are defining functions: zero on the surface, and J of
    # each equals 1 there
    assert abs(ma.rho1(p)) <= 1e-13
    assert abs(ma.rho2(p)) <= 1e-13
    assert abs(ma.j_rho1(p) - 1.0) <= 1e-10
    assert abs(ma.j_rho2(p) - 1.0) <= 1e-10


def test_ma_first_iterate_linear_coefficient():
    # The leading coefficient of J(rho1) - 1 along the x1 line through
    # (y1, z2) = (0, 0.4 + 0.25i) on the a = 0.5 model was computed
    # independently with exact rational arithmetic: 0.67441898...
    surface = Hypersurface.model(0.5)
    ma = MongeAmpereApprox(surface)
    y1, w = 0.0, 0.4 + 0.25j
    x1 = surface.x1_on_surface(y1, w)
    tau = 1e-4
    coeff = (ma.j_rho1((x1 + tau, y1, w)).real - 1.0) / tau
    assert abs(coeff - 0.674419) <= 5e-3 * 0.674419


def test_ma_improvement_orders_off_surface():
    # Measured decay of the iterates off the surface: J(rho1) - 1 is
    # first order in the transverse distance and J(rho2) - 1 is second
    # order (each step of the iteration gains exactly one order).
    surface = Hypersurface.model(0.5)
    ma = MongeAmpereApprox(surface)
    y1, w = 0.0, 0.4 + 0.25j
    x1 = surface.x1_on_surface(y1, w)
    taus = (1e-2, 1e-3)
    j1 = [abs(ma.j_rho1((x1 + t, y1, w)).real - 1.0) for t in taus]
    j2 = [abs(ma.j_rho2((x1 + t, y1, w)).real - 1.0) for t in taus]
    slope1 = math.log(j1[0] / j1[1]) / math.log(taus[0] / taus[1])
    slope2 = math.log(j2[0] / j2[1]) / math.log(taus[0] / taus[1])
    assert 0.9 <= slope1 <= 1.2
    assert 1.8 <= slope2 <= 2.2


def test_ma_rejects_nonpositive_determinant():
    # delta term strong enough to kill the Levi form at moderate |z2|
    surface = Hypersurface(0.0, delta=WeightedSeries({(0, 4, 4): -1.0}))
    ma = MongeAmpereApprox(surface)
    with pytest.raises(ValueError):
        ma.rho1(SurfacePoint(0.0, 0.8 + 0.0j))
