import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.spatial import ConvexHull

from seprange.analytic import (ProductAngles, _minkowski_semi_axes, all_volume_product_2q,
                               elliptic_E, elliptic_K, hoeffding_bound, min_ratio_product_2q,
                               minkowski_area, named_instances, product_observables,
                               projection_bound_2d, projection_bound_conjecture, ratio_product_2q,
                               sep_volume_product_2q, separable_ball_bound,
                               solids_of_revolution_ratios)
from seprange.errors import DegenerateBody, DomainError
from seprange.rangegeom import build_body, ratio_bracket, support_all_batch, volume_bracket
from seprange.septools import SeesawConfig, SeparableOracle

PI = math.pi
angle = st.floats(0, PI)


def quad_K(m):
    return integrate.quad(lambda t: 1 / math.sqrt(1 - m * math.sin(t) ** 2), 0, PI / 2,
                          epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def quad_E(m):
    return integrate.quad(lambda t: math.sqrt(1 - m * math.sin(t) ** 2), 0, PI / 2,
                          epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def hull_area_sep(a, b, n=1500):
    """Separable range as the hull of real product-state points, which is
    enough because both observables only involve X and Z."""
    al = np.linspace(0, 2 * PI, n, endpoint=False)
    ca, cb = np.meshgrid(al, al, indexing="ij")
    pts = np.column_stack([(np.cos(ca) * np.cos(cb)).ravel(),
                           (np.cos(ca - a) * np.cos(cb - b)).ravel()])
    return ConvexHull(pts).volume


def hull_area_all(obs, n=4000):
    phi = np.linspace(0, 2 * PI, n, endpoint=False)
    pts = []
    for p in phi:
        m = math.cos(p) * obs[0] + math.sin(p) * obs[1]
        v = np.linalg.eigh(m)[1][:, -1]
        pts.append([np.real(v.conj() @ obs[0] @ v), np.real(v.conj() @ obs[1] @ v)])
    return ConvexHull(np.array(pts)).volume


# ---------------------------------------------------------------------------
# elliptic integrals
# ---------------------------------------------------------------------------

def test_elliptic_special_values():
    assert elliptic_K(0) == pytest.approx(PI / 2, abs=1e-15)
    assert elliptic_E(0) == pytest.approx(PI / 2, abs=1e-15)
    assert elliptic_E(1) == 1.0


@pytest.mark.parametrize("m", [0.5, 0.1, 0.9, 0.999, -3.0])
def test_elliptic_against_quadrature(m):
    assert elliptic_K(m) == pytest.approx(quad_K(m), abs=1e-10)
    assert elliptic_E(m) == pytest.approx(quad_E(m), abs=1e-10)


def test_elliptic_vectorized():
    ms = np.array([0.0, 0.3, 0.7])
    assert np.allclose(elliptic_K(ms), [elliptic_K(float(m)) for m in ms], atol=1e-15)
    assert np.allclose(elliptic_E(ms), [elliptic_E(float(m)) for m in ms], atol=1e-15)


def test_elliptic_domain():
    for bad in (1.0, 1.5, float("nan")):
        with pytest.raises(DomainError):
            elliptic_K(bad)
    with pytest.raises(DomainError):
        elliptic_E(1.01)


@given(st.floats(0, 0.999))
def test_elliptic_E_below_K(m):
    assert elliptic_E(m) <= elliptic_K(m) + 1e-15


@pytest.mark.parametrize("m", [0.2, 0.5, 0.8])
def test_elliptic_derivatives_match_quadrature_differences(m):
    h = 1e-4
    dk = (quad_K(m + h) - quad_K(m - h)) / (2 * h)
    de = (quad_E(m + h) - quad_E(m - h)) / (2 * h)
    K, E = elliptic_K(m), elliptic_E(m)
    assert (E - (1 - m) * K) / (2 * m * (1 - m)) == pytest.approx(dk, abs=1e-6)
    assert (E - K) / (2 * m) == pytest.approx(de, abs=1e-6)


# ---------------------------------------------------------------------------
# product-pair areas
# ---------------------------------------------------------------------------

def test_product_angles_domain():
    with pytest.raises(DomainError):
        ProductAngles(-0.1, 1.0)
    with pytest.raises(DomainError):
        ProductAngles(1.0, 3.2)
    ang = ProductAngles(2.0, 0.5)
    assert ang.theta_minus == pytest.approx(1.5) and ang.theta_plus == pytest.approx(2.5)


def test_sep_area_orthogonal_pair_is_diamond():
    assert sep_volume_product_2q(ProductAngles(PI / 2, PI / 2)) == pytest.approx(2, abs=1e-10)


def test_sep_area_coincident_observables_is_zero():
    assert sep_volume_product_2q(ProductAngles(0, 0)) == pytest.approx(0, abs=1e-12)


def test_sep_area_matches_product_hull():
    a, b = 3 * PI / 4, PI / 3
    assert sep_volume_product_2q(ProductAngles(a, b)) == pytest.approx(hull_area_sep(a, b), abs=1e-4)


@pytest.mark.parametrize("a,b", [(0.3, 0.4), (2.9, 0.2), (1.1, 2.7), (2.5, 2.8), (0.7, 1.9)])
def test_closed_form_matches_minkowski_quadrature(a, b):
    # one point per (theta_-, theta_+) quadrant pattern
    ang = ProductAngles(a, b)
    assert sep_volume_product_2q(ang) == pytest.approx(
        minkowski_area(_minkowski_semi_axes(ang)), abs=1e-10)


def support_quadrature_area(axes):
    """Area from the support function, ``1/2 int (h^2 - h'^2) dphi``."""
    def integrand(phi):
        c, s = math.cos(phi), math.sin(phi)
        h = sum(math.hypot(a * c, b * s) for a, b in axes)
        dh = sum((b * b - a * a) * c * s / math.hypot(a * c, b * s) for a, b in axes)
        return h * h - dh * dh
    pts = sorted({math.atan2(a, b) for a, b in axes})
    return 2 * integrate.quad(integrand, 0, PI / 2, points=pts, limit=400,
                              epsabs=1e-13, epsrel=1e-13)[0]


@given(st.lists(st.tuples(st.floats(0.05, 1), st.floats(0.05, 1)), min_size=1, max_size=3))
def test_minkowski_area_against_support_quadrature(axes):
    assert minkowski_area(axes) == pytest.approx(support_quadrature_area(axes), abs=1e-9)


def test_minkowski_area_thin_ellipses():
    # two identical needles add up to a needle of twice the size
    a, b = 0.7, 3e-10
    assert minkowski_area([(a, b), (a, b)]) == pytest.approx(4 * PI * a * b, rel=1e-12)
    # a segment plus a disc is a stadium
    assert minkowski_area([(1.0, 0.0), (0.5, 0.5)]) == pytest.approx(PI * 0.25 + 2 * 1.0, abs=1e-12)


def test_ratio_tends_to_one_when_first_factor_is_x():
    # A_1 and A_2 share the factor X on the first qubit: both ranges are the same ellipse
    for b in (1e-9, 1e-3, 0.5, 1.5):
        assert ratio_product_2q(ProductAngles(0, b)) == pytest.approx(1, abs=1e-9)
        assert ratio_product_2q(ProductAngles(PI, PI - b)) == pytest.approx(1, abs=1e-6)


def test_minkowski_area_single_ellipse():
    assert minkowski_area([(1.0, 0.5)]) == pytest.approx(PI * 0.5, abs=1e-12)
    # disc plus disc is a disc of summed radius
    assert minkowski_area([(0.3, 0.3), (0.2, 0.2)]) == pytest.approx(PI * 0.25, abs=1e-12)


def test_all_area_examples():
    assert all_volume_product_2q(ProductAngles(PI / 2, PI / 2)) == pytest.approx(4, abs=1e-12)
    assert all_volume_product_2q(ProductAngles(0, PI / 2)) == pytest.approx(PI, abs=1e-12)
    assert all_volume_product_2q(ProductAngles(0, 0)) == 0.0


@pytest.mark.parametrize("a,b", [(3 * PI / 4, PI / 3), (1.0, 2.0), (0.4, 0.4)])
def test_all_area_matches_numeric_hull(a, b):
    ang = ProductAngles(a, b)
    assert all_volume_product_2q(ang) == pytest.approx(
        hull_area_all(product_observables(ang)), abs=1e-3)


def test_ratio_examples():
    assert ratio_product_2q(ProductAngles(PI / 2, PI / 2)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DegenerateBody):
        ratio_product_2q(ProductAngles(0, PI))


def test_ratio_symmetric_case_against_numeric_bracket():
    ang = ProductAngles(1.2, 1.2)
    obs = product_observables(ang)
    sep = build_body(obs, SeparableOracle(SeesawConfig(restarts=16)), 360)
    full = build_body(obs, support_all_batch, 360)
    rb = ratio_bracket(volume_bracket(sep, 20000), volume_bracket(full, 20000, seed=1))
    assert rb.estimate == pytest.approx(ratio_product_2q(ang), abs=1e-3)
    assert rb.lower - 1e-9 <= ratio_product_2q(ang) <= rb.upper + 1e-9


def test_minimal_ratio_is_one_half():
    v, arg = min_ratio_product_2q()
    assert v == pytest.approx(0.5, abs=1e-3)
    assert ratio_product_2q(arg) == pytest.approx(v, abs=1e-12)


@given(angle, angle)
def test_ratio_swap_and_reflection_symmetry(a, b):
    try:
        r = ratio_product_2q(ProductAngles(a, b))
    except DegenerateBody:
        return
    assert ratio_product_2q(ProductAngles(b, a)) == pytest.approx(r, abs=1e-9)
    assert ratio_product_2q(ProductAngles(PI - a, PI - b)) == pytest.approx(r, abs=1e-9)


@given(angle, angle)
def test_sep_area_below_all_area(a, b):
    ang = ProductAngles(a, b)
    assert sep_volume_product_2q(ang) <= all_volume_product_2q(ang) + 1e-9


def test_ratio_above_ball_bound_on_grid():
    bound = separable_ball_bound((2, 2), 2).value
    ts = (np.arange(64) + 0.5) * PI / 64
    worst = min(ratio_product_2q(ProductAngles(a, b)) for a in ts for b in ts)
    assert worst >= bound
    assert worst >= 0.5 - 1e-9


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def test_ball_bound_examples():
    r = separable_ball_bound((2, 2), 1)
    assert r.value == pytest.approx(1 / 3) and r.formula_id == "bipartite"
    assert separable_ball_bound((2, 2), 3).value == pytest.approx(1 / 27)
    assert separable_ball_bound((3, 3), 1).value == pytest.approx(1 / 8)


def test_ball_bound_general_branch():
    # b = 1 for two qubits: the general formula alone gives 1/4
    b2 = 4 ** 2 / (7 ** 0 * 15 + 1)
    assert math.sqrt(b2) / 4 * math.sqrt(3 / (4 - b2)) == pytest.approx(0.25)
    r = separable_ball_bound((2, 2, 2), 1)
    assert r.formula_id == "general" and 0 < r.value < 1
    with pytest.raises(DomainError):
        separable_ball_bound((2, 2), 0)


@given(st.integers(1, 6))
def test_ball_bound_decreasing_in_k(k):
    assert separable_ball_bound((2, 2), k + 1).value < separable_ball_bound((2, 2), k).value


def test_hoeffding_examples():
    assert hoeffding_bound(1000, 0.05) == pytest.approx(2 * math.exp(-5), rel=1e-12)
    assert hoeffding_bound(1000, 1e3) == 0.0
    t, m, k = 0.03, 2000, 3
    assert hoeffding_bound(m, [t] * k) == pytest.approx(1 - (1 - 2 * math.exp(-2 * m * t * t)) ** k)
    # widths rescale the deviation
    assert hoeffding_bound(1000, 0.1, [2.0]) == pytest.approx(hoeffding_bound(1000, 0.05))
    with pytest.raises(DomainError):
        hoeffding_bound(0, 0.1)


@given(st.integers(1, 5000), st.floats(0.001, 0.5))
def test_hoeffding_monotone(m, t):
    assert hoeffding_bound(m + 1, t) <= hoeffding_bound(m, t)
    assert hoeffding_bound(m, [t * 1.1, t]) <= hoeffding_bound(m, [t, t])


def test_projection_bound_2d_examples():
    assert projection_bound_2d(0.75) == pytest.approx(0.5)
    assert projection_bound_2d(1) == 1
    assert projection_bound_2d(0) == 0
    with pytest.raises(DomainError):
        projection_bound_2d(1.5)


@given(st.floats(0, 1))
def test_conjecture_k2_equals_2d(r):
    assert projection_bound_conjecture(r, 2) == pytest.approx(projection_bound_2d(r), abs=1e-10)


def test_conjecture_fixed_point_and_limit():
    for k in (2, 3, 7):
        assert projection_bound_conjecture(1.0, k) == pytest.approx(1, abs=1e-12)
    c = projection_bound_conjecture(0.3, 10 ** 9)
    assert c * (1 - math.log(c)) == pytest.approx(0.3, abs=1e-8)
    with pytest.raises(DomainError):
        projection_bound_conjecture(0.5, 1)


@given(st.floats(0, 0.99), st.integers(2, 8))
def test_conjecture_monotone_in_ratio(r, k):
    assert projection_bound_conjecture(r + 0.01, k) >= projection_bound_conjecture(r, k)


# ---------------------------------------------------------------------------
# named instances
# ---------------------------------------------------------------------------

def test_named_instance_catalog():
    got = {i.name: i for i in named_instances()}
    assert got["bell-projector"].expected_ratio == 0.5
    assert got["pauli-block-xy"].expected_ratio == 0.25
    assert got["pauli-block-xyz"].expected_ratio == pytest.approx(1 / 5)
    assert got["xx-xy-zz"].expected_ratio == pytest.approx(1 / 3)
    assert got["xx-xy-zz-yz"].expected_ratio == pytest.approx(1 / 6)
    assert got["xx-xy-zz-yz"].analytic_only and got["xx-xy-zz-yz"].observables.k == 4
    pair = got["product-pair"]
    assert pair.expected_ratio == pytest.approx(ratio_product_2q(ProductAngles(3 * PI / 4, PI / 3)))


def test_solids_of_revolution():
    three, four = solids_of_revolution_ratios()
    assert three == pytest.approx(1 / 3, abs=1e-15)
    assert four == pytest.approx(1 / 6, abs=1e-15)


def test_four_observable_separable_volume_by_quadrature():
    # region r + R <= 1 in two discs: int 2 pi R dR * int r dr dphi over r <= 1 - R
    inner = lambda R: integrate.dblquad(lambda r, phi: r, 0, 2 * PI, 0, 1 - R,  # noqa: E731
                                        epsabs=1e-13, epsrel=1e-13)[0]
    vol = integrate.quad(lambda R: 2 * PI * R * inner(R), 0, 1, epsabs=1e-13, epsrel=1e-13)[0]
    assert vol == pytest.approx(PI ** 2 / 6, abs=1e-10)
