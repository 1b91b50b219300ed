import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from ofdmascale.bounds import (brute_force_c_star, cantelli_factor, dense_bracket, draw_snr,
                               exhaustive_rate, extended_bracket,
                               extended_interference_constant, max_statistic_sandwich,
                               mc_bounds, scaling_table, simplex_grid, theorem1_terms,
                               trial_generators)
from ofdmascale.errors import BudgetExceeded, DomainError, FamilyMismatch
from ofdmascale.fading import LogNormal, Nakagami, Rayleigh, Weibull
from ofdmascale.geometry import build_dense_layout, build_hex_layout
from ofdmascale.snr_model import ChannelParams

PAR = ChannelParams(alpha=1.5, beta=1.0, r0=0.1, Pcon=1.0)


def _terms_by_loops(g, Pc):
    B, K, N = g.shape
    lo = up = 0.0
    for i in range(B):
        for n in range(N):
            k = max(range(K), key=lambda kk: (g[i, kk, n], -kk))
            interf = sum(g[j, k, n] for j in range(B) if j != i)
            lo += math.log(1 + Pc * g[i, k, n]) / (N + Pc * interf)
            up += math.log(1 + Pc * max(g[i, :, n]))
    jen = N * sum(math.log(1 + Pc / N * g[i].max()) for i in range(B))
    return lo, up, jen


def test_single_link_unit_snr():
    lo, up, jen = theorem1_terms(np.ones((1, 1, 1)), 1.0)
    assert lo == pytest.approx(math.log(2)) and up == pytest.approx(math.log(2))
    assert jen == pytest.approx(math.log(2))


tensors = st.tuples(st.integers(1, 3), st.integers(1, 4), st.integers(1, 3)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.floats(0, 1e3)))


@given(tensors, st.floats(0.01, 10))
def test_terms_match_loop_oracle(g, Pc):
    got = theorem1_terms(g, Pc)
    want = _terms_by_loops(g, Pc)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)
    # per realisation the lower form never exceeds the upper form
    assert got[0] <= got[1] + 1e-12


def test_argmax_tie_goes_to_smallest_index():
    g = np.zeros((2, 3, 1))
    g[0, :, 0] = [5.0, 5.0, 1.0]
    g[1, :, 0] = [0.0, 9.0, 0.0]
    # TX 0 picks user 0, which sees no interference from TX 1
    lo, _, _ = theorem1_terms(g, 1.0)
    want = math.log(6.0) + math.log(10.0) / (1 + 5.0)
    assert lo == pytest.approx(want)


def test_colocated_txs_strict_gap():
    lay = build_dense_layout(2, 1.0, 0.3, 0.1, placement=[(0.1, 0.1), (0.1, 0.1)])
    r = mc_bounds(lay, PAR, 10, 1, 50, seed=3)
    assert r.upper > r.lower


def test_regression_fixture():
    lay = build_dense_layout(3, 1.0, 0.3, 0.1, seed=0)
    r = mc_bounds(lay, PAR, 50, 2, 500, seed=2024)
    assert r.lower == pytest.approx(2.116143028750751, rel=1e-9)
    assert r.upper == pytest.approx(36.33379468008551, rel=1e-9)
    assert r.upper_jensen == pytest.approx(34.72786358645975, rel=1e-9)
    assert r.lower < r.upper


def test_sandwich_invariant_and_jensen():
    for seed, (B, K, N) in enumerate([(1, 5, 1), (2, 20, 2), (3, 8, 3)]):
        lay = build_dense_layout(B, 1.0, 0.3, 0.1, seed=seed)
        r = mc_bounds(lay, PAR, K, N, 200, seed=seed)
        se = math.hypot(r.std_error_lower, r.std_error_upper)
        assert r.lower <= min(r.upper, r.upper_jensen) + 3 * se
        if N == 1:
            assert r.upper_jensen == pytest.approx(r.upper)
        else:
            assert r.upper_jensen <= r.upper + 3 * math.hypot(r.std_error_upper,
                                                                r.std_error_jensen)


def test_threads_do_not_change_results():
    lay = build_dense_layout(2, 1.0, 0.3, 0.1, seed=0)
    a = mc_bounds(lay, PAR, 30, 2, 40, seed=9, threads=1)
    b = mc_bounds(lay, PAR, 30, 2, 40, seed=9, threads=4)
    assert a == b


# ---------------------------------------------------------------- asymptotic brackets

def test_cantelli_unit_example():
    unit = ChannelParams(alpha=1.5, beta=1.0, r0=1.0, Pcon=1.0)
    assert cantelli_factor(1.0, 1, 1, unit.Pcon, unit.peak_gain) == pytest.approx(1 / 6)


def test_cantelli_uses_mean_and_sd():
    # Nakagami(2, 3): mu = 3, sigma = sqrt(4.5)
    f = cantelli_factor(2.0, 3, 2, 1.0, 1.0, 3.0, math.sqrt(4.5))
    assert f == pytest.approx(4 / (5 * (2 + (3 + 2 * math.sqrt(4.5)) * 3)))
    with pytest.raises(DomainError):
        cantelli_factor(0.0, 1, 1, 1.0, 1.0)


@given(st.integers(1, 20), st.integers(1, 20), st.floats(0.05, 5), st.integers(1000, 10 ** 8))
def test_dense_ratio_is_inverse_factor(B, N, r, K):
    b = dense_bracket(PAR, K, B, N, 1.0, r)
    assert b.lo <= b.hi
    assert b.hi / b.lo == pytest.approx(1 / b.f_lo, rel=1e-12)
    assert b.asymptotic_only


def test_dense_ratio_K_free():
    r1 = dense_bracket(PAR, 1e4, 2, 2, 1.0)
    r2 = dense_bracket(PAR, 1e7, 2, 2, 1.0)
    assert r1.hi / r1.lo == pytest.approx(r2.hi / r2.lo)


def test_dense_bracket_contains_mc():
    lay = build_dense_layout(2, 1.0, 0.3, 0.1, seed=0)
    r = mc_bounds(lay, PAR, 10_000, 2, 200, seed=1)
    b = dense_bracket(PAR, 10_000, 2, 2, 1.0, 1.0)
    for v in (r.lower, r.upper):
        assert 0.5 * b.lo <= v <= 2 * b.hi


def test_dense_bracket_rejects_other_families_and_warns():
    with pytest.raises(FamilyMismatch):
        dense_bracket(ChannelParams(fading=Nakagami(2, 1)), 1e4, 2, 2, 1.0)
    with pytest.warns(UserWarning):
        dense_bracket(PAR, 500, 2, 2, 1.0)


def test_extended_constant_example():
    unit = ChannelParams(alpha=1.5, beta=1.0, r0=1.0, Pcon=1.0)
    assert extended_interference_constant(unit, 1.0) == pytest.approx(4 + math.pi / math.sqrt(3))
    assert extended_interference_constant(unit, 1.0) == pytest.approx(5.8138, abs=1e-4)


def test_extended_factor_structure():
    fs = [extended_bracket(PAR, 1e5, 7, N, 0.3).f_lo for N in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(fs, fs[1:]))
    assert extended_bracket(PAR, 1e5, 7, 2, 0.3).f_lo == extended_bracket(PAR, 1e6, 70, 2,
                                                                          0.3).f_lo
    with pytest.raises(FamilyMismatch):
        extended_bracket(ChannelParams(fading=Weibull(1, 1)), 1e5, 7, 1, 0.3)


def test_extended_bracket_contains_per_cell_mc():
    lay = build_hex_layout(7, 0.3, 0.1)
    r = mc_bounds(lay, PAR, 7000, 1, 100, seed=5, users="per_cell")
    b = extended_bracket(PAR, 7000, 7, 1, 0.3)
    for v in (r.lower, r.upper):
        assert 0.5 * b.lo <= v <= 2 * b.hi


# ---------------------------------------------------------------- scaling table

def test_scaling_table_rayleigh_dense():
    law = scaling_table(Rayleigh(), "dense")
    assert law.upper(1e4, 2, 3) == pytest.approx(6 * math.log(math.log(1e4)))
    assert law.lower(1e4, 2, 3) == pytest.approx(2 * math.log(math.log(1e4)))


def test_scaling_table_weibull_t2_is_rayleigh():
    w, r = scaling_table(Weibull(1, 2), "dense"), scaling_table(Rayleigh(), "dense")
    for K in (1e2, 1e4, 1e6):
        assert w.upper(K, 3, 2) == pytest.approx(r.upper(K, 3, 2))


def test_scaling_table_lognormal_extended():
    law = scaling_table(LogNormal(0, 0.2), "extended")
    assert law.upper(1e4, 4, 3) == pytest.approx(12 * math.sqrt(math.log(2500)))
    assert law.lower(1e4, 4, 3) == pytest.approx(4 * math.sqrt(math.log(2500)))


# ---------------------------------------------------------------- brute force

def test_simplex_grid_contains_vertices_and_equal_split():
    g = simplex_grid(2, 5, 1.0)
    pts = {tuple(np.round(r, 12)) for r in g}
    for v in [(0, 0), (1, 0), (0, 1), (0.5, 0.5)]:
        assert v in pts
    assert np.all(g.sum(axis=1) <= 1 + 1e-12) and np.all(g >= 0)
    assert len(g) == 15


def _rate_loops(g, P):
    B, K, N = g.shape
    best = -math.inf
    for umap in itertools.product(range(K), repeat=B * N):
        u = np.array(umap).reshape(B, N)
        for p in P:
            tot = 0.0
            for i in range(B):
                for n in range(N):
                    k = u[i, n]
                    interf = sum(p[j, n] * g[j, k, n] for j in range(B) if j != i)
                    tot += math.log(1 + p[i, n] * g[i, k, n] / (1 + interf))
            best = max(best, tot)
    return best


def test_exhaustive_rate_matches_loops():
    rng = np.random.default_rng(0)
    g = rng.exponential(3.0, (2, 3, 2))
    grid = simplex_grid(2, 3, 1.0)
    combos = np.array([np.stack(c) for c in itertools.product(grid, repeat=2)])
    assert exhaustive_rate(g, combos) == pytest.approx(_rate_loops(g, combos), rel=1e-12)


def test_brute_single_link():
    lay = build_dense_layout(1, 1.0, 0.3, 0.1, seed=0)
    bf = brute_force_c_star(lay, PAR, 1, 1, 5, 30, seed=4)
    vals = [math.log1p(PAR.Pcon * draw_snr(lay, PAR, 1, 1, g)[0, 0, 0])
            for g in trial_generators(4, 30)]
    assert bf.mean == pytest.approx(np.mean(vals), rel=1e-12)


def test_brute_beats_equal_split():
    lay = build_dense_layout(1, 1.0, 0.3, 0.1, seed=0)
    bf = brute_force_c_star(lay, PAR, 2, 2, 5, 30, seed=6)
    eq = []
    for g in trial_generators(6, 30):
        s = draw_snr(lay, PAR, 2, 2, g)
        eq.append(np.log1p(0.5 * s[0].max(axis=0)).sum())
    assert np.all(bf.per_trial >= np.array(eq) - 1e-12)


def test_brute_bracketed_by_bounds():
    lay = build_dense_layout(2, 1.0, 0.3, 0.1, seed=8)
    mb = mc_bounds(lay, PAR, 3, 1, 200, seed=10)
    bf = brute_force_c_star(lay, PAR, 3, 1, 5, 200, seed=10)
    assert mb.lower - 3 * mb.std_error_lower <= bf.mean <= mb.upper + 3 * mb.std_error_upper
    # the upper form dominates every realised rate
    ups = [theorem1_terms(draw_snr(lay, PAR, 3, 1, g), PAR.Pcon)[1]
           for g in trial_generators(10, 200)]
    assert np.all(bf.per_trial <= np.array(ups) + 1e-12)


def test_brute_budget():
    lay = build_dense_layout(2, 1.0, 0.3, 0.1, seed=8)
    with pytest.raises(BudgetExceeded):
        brute_force_c_star(lay, PAR, 10, 2, 9, 1, seed=0)


# ---------------------------------------------------------------- order-statistic sandwich

def test_max_sandwich_exponential():
    res = max_statistic_sandwich(stats.expon(), 32, 1.0, 20_000, seed=1)
    # E max of 32 unit exponentials is the harmonic number H_32
    H = sum(1 / k for k in range(1, 33))
    assert res.lower == pytest.approx((1 - math.exp(-1)) * math.log1p(math.log(32)))
    assert res.lower <= res.mc_mean <= res.jensen_upper
    assert res.jensen_upper == pytest.approx(math.log1p(H), rel=0.01)


def test_max_sandwich_domain():
    with pytest.raises(DomainError):
        max_statistic_sandwich(stats.expon(), 4, 5.0, 10, seed=0)
