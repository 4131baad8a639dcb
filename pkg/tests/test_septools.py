import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize

from conftest import random_hermitian
from seprange.errors import ShapeError
from seprange.qlinalg import (PHI_PLUS, X, Y, Z, ObservableSet, ProductState, direct_sum, ket,
                              kron, projector, sample_goe)
from seprange.rangegeom import support_all_batch
from seprange.septools import (SeesawConfig, SeparableOracle, abs_sep_extremum,
                               certified_sep_support_2qubit, certified_sep_support_batch,
                               goe_ratio_statistic, is_absolutely_separable,
                               min_separable_expectation, ppt_check, ppt_fraction, seesaw_batch,
                               seesaw_product_extremum, sep_support_oracle)

I2 = np.eye(2)
BELL = projector(PHI_PLUS)
SMALL = SeesawConfig(restarts=16, seed=1)


def brute_product_max(x, dims):
    """Independent oracle: maximize lambda_max of the conditional operator over
    the first factor, parameterized by angles, with many local starts."""
    da, db = dims
    xt = x.reshape(da, db, da, db)

    def neg(p):
        v = np.empty(da, dtype=complex)
        re, im = p[:da], p[da:]
        v = re + 1j * im
        v /= np.linalg.norm(v)
        cond = np.einsum("i,ijkl,k->jl", v.conj(), xt, v)
        return -np.linalg.eigvalsh((cond + cond.conj().T) / 2)[-1]

    rng = np.random.default_rng(7)
    best = -np.inf
    for _ in range(40):
        res = minimize(neg, rng.standard_normal(2 * da), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
        best = max(best, -res.fun)
    return best


# ---------------------------------------------------------------------------
# seesaw
# ---------------------------------------------------------------------------

def test_seesaw_xx_min_is_minus_one():
    res = seesaw_product_extremum(kron(X, X), (2, 2), "min", SMALL)
    assert res.value == pytest.approx(-1, abs=1e-12)
    assert res.state.expectation(kron(X, X)) == pytest.approx(-1, abs=1e-12)
    assert res.converged


def test_seesaw_bell_overlap_max_half():
    res = seesaw_product_extremum(BELL, (2, 2), "max", SMALL)
    assert res.value == pytest.approx(0.5, abs=1e-12)


def test_seesaw_bell_overlap_min_zero():
    res = seesaw_product_extremum(BELL, (2, 2), "min", SMALL)
    assert res.value == pytest.approx(0, abs=1e-12)
    # |01> is one such minimizer
    assert ProductState((ket(0), ket(1))).expectation(BELL) == pytest.approx(0)


def test_seesaw_value_is_achieved(rng):
    x = random_hermitian(rng, 6)
    res = seesaw_product_extremum(x, (2, 3), "max", SMALL)
    assert res.state.expectation(x) == pytest.approx(res.value, abs=1e-10)


def test_seesaw_trace_monotone(rng):
    x = random_hermitian(rng, 9)
    res = seesaw_product_extremum(x, (3, 3), "max", SeesawConfig(restarts=8, seed=3))
    assert np.all(np.diff(res.trace, axis=0) >= -1e-10)
    res = seesaw_product_extremum(x, (3, 3), "min", SeesawConfig(restarts=8, seed=3))
    assert np.all(np.diff(res.trace, axis=0) <= 1e-10)


def test_seesaw_matches_brute_force_qubit_qutrit(rng):
    for _ in range(3):
        x = random_hermitian(rng, 6)
        got = seesaw_product_extremum(x, (2, 3), "max", SeesawConfig(restarts=32, seed=0)).value
        assert got == pytest.approx(brute_product_max(x, (2, 3)), abs=1e-7)


def test_seesaw_tripartite_ghz():
    ghz = (ket(0, 0, 0) + ket(1, 1, 1)) / math.sqrt(2)
    res = seesaw_product_extremum(projector(ghz), (2, 2, 2), "max", SMALL)
    assert res.value == pytest.approx(0.5, abs=1e-10)


def test_seesaw_degenerate_local_operator_converges():
    # the conditional operator on the first qubit is proportional to identity
    x = kron(I2, Z)
    res = seesaw_product_extremum(x, (2, 2), "max", SMALL)
    assert res.value == pytest.approx(1)
    assert res.converged


def test_seesaw_one_dimensional_factors():
    vals, factors, conv, _ = seesaw_batch(np.array([[2.5]]), (1, 1), restarts=3)
    assert vals[0] == pytest.approx(2.5)
    assert conv[0]


def test_seesaw_profile_mismatch():
    with pytest.raises(ShapeError):
        seesaw_batch(np.eye(5), (2, 2))


def test_seesaw_config_validation():
    with pytest.raises(ValueError):
        SeesawConfig(restarts=0)
    with pytest.raises(ValueError):
        SeesawConfig(tol=0)


@given(st.integers(0, 2**31), st.sampled_from([(2, 2), (2, 3), (3, 3)]))
def test_seesaw_min_bounded_by_lambda_min(seed, dims):
    rng = np.random.default_rng(seed)
    x = random_hermitian(rng, dims[0] * dims[1])
    v = seesaw_product_extremum(x, dims, "min", SeesawConfig(restarts=4, seed=seed)).value
    assert v >= np.linalg.eigvalsh(x)[0] - 1e-10


@given(st.integers(0, 2**31))
def test_seesaw_min_equals_lambda_min_for_product_eigenvector(seed):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(rng, 2), random_hermitian(rng, 3)
    x = kron(a, np.eye(3)) + kron(np.eye(2), b) + 0.1 * kron(a, b)
    v = seesaw_product_extremum(x, (2, 3), "min", SeesawConfig(restarts=8, seed=seed)).value
    assert v == pytest.approx(np.linalg.eigvalsh(x)[0], abs=1e-9)


# ---------------------------------------------------------------------------
# certified two-qubit bounds
# ---------------------------------------------------------------------------

def test_certified_bell():
    gaps = []
    for n in (16, 32, 64):
        cb = certified_sep_support_2qubit(BELL, n)
        assert cb.certified_upper >= 0.5
        assert cb.heuristic_value == pytest.approx(0.5, abs=1e-12)
        gaps.append(cb.gap)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3


def test_certified_zz():
    cb = certified_sep_support_2qubit(kron(Z, Z), 64)
    assert cb.heuristic_value == pytest.approx(1)
    assert cb.certified_upper == pytest.approx(1, abs=1e-12)


def test_certified_witness_pair():
    cb = certified_sep_support_2qubit((kron(X, X) + kron(Z, Z)) / math.sqrt(2), 64)
    assert cb.heuristic_value == pytest.approx(1 / math.sqrt(2), abs=1e-10)
    assert 1 / math.sqrt(2) <= cb.certified_upper < 1 / math.sqrt(2) + 2e-3


def test_certified_rejects_bad_input():
    with pytest.raises(ValueError):
        certified_sep_support_2qubit(BELL, 4)
    with pytest.raises(ShapeError):
        certified_sep_support_batch(np.eye(6), 16)


@given(st.integers(0, 2**31))
def test_certified_monotone_under_grid_doubling(seed):
    rng = np.random.default_rng(seed)
    mats = np.stack([random_hermitian(rng, 4) for _ in range(4)])
    prev_h, prev_c = -np.inf, np.inf
    for n in (8, 16, 32):
        h, c, _, _ = certified_sep_support_batch(mats, n)
        assert np.all(h <= c + 1e-12)
        assert np.all(h >= prev_h - 1e-12)
        assert np.all(c <= prev_c + 1e-12)
        prev_h, prev_c = h, c


def test_certified_upper_is_sound(rng):
    for _ in range(5):
        x = random_hermitian(rng, 4)
        truth = brute_product_max(x, (2, 2))
        coarse = certified_sep_support_2qubit(x, 16)
        assert coarse.certified_upper >= truth - 1e-9
        assert coarse.heuristic_value <= truth + 1e-9
        fine = certified_sep_support_2qubit(x, 64)
        assert fine.certified_upper >= truth - 1e-9
        assert fine.heuristic_value == pytest.approx(truth, abs=1e-8)


# ---------------------------------------------------------------------------
# separable support oracle
# ---------------------------------------------------------------------------

def test_oracle_pauli_block_radius():
    zero = np.zeros((1, 1))
    obs = ObservableSet.of(direct_sum([zero, X, zero]), direct_sum([zero, Y, zero]), dims=(2, 2))
    rng = np.random.default_rng(0)
    for _ in range(4):
        u = rng.standard_normal(2)
        u /= np.linalg.norm(u)
        s = sep_support_oracle(obs, u, SMALL)
        assert s.certified
        assert 0.5 - 1e-10 <= s.support_value < 0.5 + 2e-3
        assert u @ s.support_point == pytest.approx(0.5, abs=1e-10)


def test_oracle_single_product_direction():
    obs = ObservableSet.of(kron(X, X), kron(Z, Z), dims=(2, 2))
    s = sep_support_oracle(obs, [1.0, 0.0], SMALL)
    assert s.support_value == pytest.approx(1, abs=1e-12)


def test_oracle_witness_direction():
    obs = ObservableSet.of(kron(X, X), kron(Z, Z), dims=(2, 2))
    s = sep_support_oracle(obs, np.array([1.0, 1.0]) / math.sqrt(2), SMALL)
    assert s.support_value == pytest.approx(1 / math.sqrt(2), abs=2e-3)
    assert s.support_value >= 1 / math.sqrt(2) - 1e-12


def test_oracle_uncertified_outside_two_qubits(rng):
    obs = ObservableSet.of(random_hermitian(rng, 6), random_hermitian(rng, 6), dims=(2, 3))
    batch = SeparableOracle(SMALL)(obs, np.eye(2))
    assert not np.any(batch.certified)
    assert np.allclose(np.einsum("bk,bk->b", batch.directions, batch.points), batch.values)


@given(st.integers(0, 2**31))
def test_oracle_below_all_states_support(seed):
    rng = np.random.default_rng(seed)
    obs = ObservableSet.of(*(random_hermitian(rng, 4) for _ in range(3)), dims=(2, 2))
    u = rng.standard_normal((6, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    sep = SeparableOracle(SeesawConfig(restarts=4, seed=seed), grid_per_axis=16)(obs, u)
    full = support_all_batch(obs, u)
    assert np.all(sep.values <= full.values + 1e-9)


# ---------------------------------------------------------------------------
# GOE statistic
# ---------------------------------------------------------------------------

def test_goe_ratios_in_unit_interval():
    stat = goe_ratio_statistic(2, 200, SMALL, seed=5)
    assert np.all(stat.ratios > 0) and np.all(stat.ratios <= 1 + 1e-10)
    assert stat.samples == 200
    assert stat.mean_ratio == pytest.approx(0.887, abs=0.03)


def test_goe_statistic_deterministic():
    a = goe_ratio_statistic(2, 20, SMALL, seed=9)
    b = goe_ratio_statistic(2, 20, SMALL, seed=9)
    assert np.array_equal(a.ratios, b.ratios)


def test_goe_ratio_one_for_product_ground_state():
    x = kron(Z, I2) + kron(I2, Z)
    lsep = min_separable_expectation(x[None], (2, 2), SMALL)[0]
    assert lsep / np.linalg.eigvalsh(x)[0] == pytest.approx(1)


@given(st.integers(0, 2**31), st.floats(0.1, 10))
def test_goe_ratio_scale_invariant_per_sample(seed, c):
    cfg = SeesawConfig(restarts=8, seed=seed)
    x = sample_goe(4, seed, size=5)
    r1 = min_separable_expectation(x, (2, 2), cfg) / np.linalg.eigvalsh(x)[:, 0]
    r2 = min_separable_expectation(c * x, (2, 2), cfg) / np.linalg.eigvalsh(c * x)[:, 0]
    assert np.allclose(r1, r2, atol=1e-8)


def test_goe_rejects_small_d():
    with pytest.raises(ShapeError):
        goe_ratio_statistic(1, 10)


# ---------------------------------------------------------------------------
# absolute separability and PPT
# ---------------------------------------------------------------------------

def lambda_family(a, b):
    delta = 1 - a - b
    gamma = math.sqrt(8 + delta ** 2)
    l1 = ((8 + delta) / gamma - 1) / 4
    l2 = (1 - delta / gamma) / 4
    return np.array([l1, l2, l2, 1 - l1 - 2 * l2])


def test_absolutely_separable_examples():
    assert is_absolutely_separable([0.25] * 4)
    assert not is_absolutely_separable([1, 0, 0, 0])
    lam = lambda_family(0.5, 0.5)
    assert (lam[0] - lam[2]) ** 2 == pytest.approx(4 * lam[1] * lam[3], abs=1e-12)
    assert is_absolutely_separable(lam)
    with pytest.raises(ShapeError):
        is_absolutely_separable([0.5, 0.5])


@given(st.floats(0, 1), st.floats(0, 1))
def test_lambda_family_on_boundary(a, b):
    lam = lambda_family(min(a, b), max(a, b))
    assert lam[3] >= -1e-15 and lam[0] >= lam[1] >= lam[3]
    assert (lam[0] - lam[2]) ** 2 == pytest.approx(4 * lam[1] * lam[3], abs=1e-12)


def test_abs_sep_extremum_examples():
    e = (1, 0.5, 0.5, 0)
    assert abs_sep_extremum(e, "max") == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    assert abs_sep_extremum(e, "min") == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-9)
    width = abs_sep_extremum(e, "max") - abs_sep_extremum(e, "min")
    assert width == pytest.approx(math.sqrt(2) - 1, abs=1e-9)
    for sense in ("max", "min"):
        assert abs_sep_extremum((1, 1, 1, 1), sense) == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        abs_sep_extremum(e, "median")


def test_abs_sep_extremum_against_sampling():
    # random absolutely separable spectra never beat the optimizer
    rng = np.random.default_rng(2)
    e = np.array([0.9, 0.4, -0.3, 0.1])
    best = abs_sep_extremum(e, "max")
    lam = np.sort(rng.dirichlet(np.ones(4), size=200_000), axis=1)[:, ::-1]
    ok = (lam[:, 0] - lam[:, 2]) ** 2 <= 4 * lam[:, 1] * lam[:, 3]
    sampled = (lam[ok] @ np.sort(e)[::-1]).max()
    assert sampled <= best + 1e-12
    assert sampled > best - 1e-2


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.permutations(range(4)))
def test_abs_sep_extremum_permutation_invariant(e, perm):
    e = np.array(e)
    for sense in ("max", "min"):
        assert abs_sep_extremum(e[list(perm)], sense) == pytest.approx(
            abs_sep_extremum(e, sense), abs=1e-9)


def test_ppt_examples():
    assert not ppt_check(BELL, (2, 2))
    prod = ProductState.normalized([np.array([1, 1j]), np.array([2, -1])]).density()
    assert ppt_check(prod, (2, 2))
    eps = 1 / 3
    werner = (1 - eps) * np.eye(4) / 4 + eps * BELL
    # partial transpose spectrum: (1 - eps)/4 - eps/2 once, (1 + eps)/4 three times
    from seprange.qlinalg import partial_transpose
    lmin = np.linalg.eigvalsh(partial_transpose(werner, (2, 2)))[0]
    assert lmin == pytest.approx((1 - eps) / 4 - eps / 2, abs=1e-15)
    assert abs(lmin) <= 1e-10
    assert ppt_check(werner, (2, 2))
    assert not ppt_check((1 - 0.34) * np.eye(4) / 4 + 0.34 * BELL, (2, 2))


def test_ppt_fraction_small_run_deterministic():
    a, b = ppt_fraction(4000, seed=3), ppt_fraction(4000, seed=3)
    assert a == b
    assert a == pytest.approx(0.2424, abs=0.03)


@given(st.integers(0, 2**31))
def test_random_product_states_are_ppt(seed):
    rng = np.random.default_rng(seed)
    facs = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in (2, 3)]
    assert ppt_check(ProductState.normalized(facs).density(), (2, 3))


def test_all_spectrum_permutations_agree():
    e = (0.3, -1.0, 0.7, 0.2)
    vals = {round(abs_sep_extremum(p, "max"), 10) for p in itertools.permutations(e)}
    assert len(vals) == 1
