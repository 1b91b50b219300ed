"""Sum-rate bounds: Monte Carlo evaluation, asymptotic brackets and a brute-force oracle.

All rates are in nats per channel use.
"""
from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BudgetExceeded, DomainError, FamilyMismatch, InvalidParam
from .fading import FadingModel, LogNormal, Nakagami, Rayleigh, Weibull
from .geometry import (LayoutKind, NetworkLayout, sample_users_disc,
                       sample_users_per_cell)
from .snr_model import ChannelParams, scaling_point, snr_from_gains

BRUTE_FORCE_BUDGET = 10 ** 7


@dataclass(frozen=True)
class BoundsResult:
    lower: float
    upper: float
    upper_jensen: float
    trials: int
    std_error_lower: float
    std_error_upper: float
    std_error_jensen: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    l_K: float
    # the O(1) additive terms of the asymptotic brackets are set to zero
    asymptotic_only: bool = True


def trial_generators(seed, trials: int) -> list[np.random.Generator]:
    """Independent per-trial generators; results do not depend on execution order."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def draw_snr(layout: NetworkLayout, params: ChannelParams, K: int, N: int,
             rng: np.random.Generator, users: str = "disc") -> np.ndarray:
    """One Monte Carlo draw of the (B, K, N) SNR tensor.

    ``users="per_cell"`` places ``K // B`` users in each hexagonal cell.
    """
    if users == "disc":
        us = sample_users_disc(layout, K, rng)
    elif users == "per_cell":
        if K % layout.B:
            raise InvalidParam("per-cell sampling needs K divisible by B")
        us = sample_users_per_cell(layout, K // layout.B, rng)
    else:
        raise InvalidParam(f"unknown user sampler {users!r}")
    gains = params.fading.sample(rng, (layout.B, us.K, N))
    return snr_from_gains(layout, us, params, gains).values


def theorem1_terms(snr: np.ndarray, Pcon: float) -> tuple[float, float, float]:
    """(lower, upper, jensen-upper) for one realized SNR tensor of shape (B, K, N)."""
    snr = np.asarray(snr, dtype=float)
    B, K, N = snr.shape
    kstar = np.argmax(snr, axis=1)                      # (B, N); ties -> smallest k
    # at_kstar[j, i, n] = snr[j, kstar[i, n], n]
    at_kstar = np.take_along_axis(snr, kstar[None, :, :].repeat(B, 0), axis=1)
    own = at_kstar[np.arange(B), np.arange(B)]          # (B, N)
    interf = at_kstar.sum(axis=0) - own
    lower = np.sum(np.log1p(Pcon * own) / (N + Pcon * interf))
    best = snr.max(axis=1)
    upper = np.sum(np.log1p(Pcon * best))
    jensen = N * np.sum(np.log1p(Pcon / N * best.max(axis=1)))
    return float(lower), float(upper), float(jensen)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _map_trials(fn, gens, threads: int = 1):
    if threads == 1:
        return [fn(g) for g in gens]
    with ThreadPoolExecutor(max_workers=None if threads == 0 else threads) as ex:
        return list(ex.map(fn, gens))


def mc_bounds(layout: NetworkLayout, params: ChannelParams, K: int, N: int, trials: int,
              seed, users: str = "disc", threads: int = 1) -> BoundsResult:
    """Monte Carlo estimate of the general lower/upper sum-rate bounds."""
    if trials < 1:
        raise InvalidParam("trials must be >= 1")

    def one(rng):
        return theorem1_terms(draw_snr(layout, params, K, N, rng, users), params.Pcon)

    vals = np.array(_map_trials(one, trial_generators(seed, trials), threads))
    lo, se_lo = _mean_se(vals[:, 0])
    up, se_up = _mean_se(vals[:, 1])
    jn, se_jn = _mean_se(vals[:, 2])
    return BoundsResult(lo, up, jn, trials, se_lo, se_up, se_jn)


def cantelli_factor(r: float, B: int, N: int, Pcon: float, peak: float,
                    mu: float = 1.0, sigma: float = 1.0) -> float:
    """r^2 / ((1 + r^2)(N + Pcon * peak * (mu + r sigma) * B))."""
    if r <= 0:
        raise DomainError("r must be > 0")
    return r * r / ((1 + r * r) * (N + Pcon * peak * (mu + r * sigma) * B))


def dense_bracket(params: ChannelParams, K: int, B: int, N: int, p: float,
                  r: float = 1.0) -> Bracket:
    """Asymptotic bracket on the expected sum-rate of a dense Rayleigh network."""
    if not isinstance(params.fading, Rayleigh):
        raise FamilyMismatch("dense_bracket is Rayleigh-only; see scaling_table")
    if K < 1000:
        warnings.warn("dense_bracket is an asymptotic statement; K < 1000", stacklevel=2)
    mu, sigma = params.fading.moments()
    f = cantelli_factor(r, B, N, params.Pcon, params.peak_gain, mu, sigma)
    lK = scaling_point(params.fading, K, p, params.r0, params.alpha, params.beta)
    hi = B * N * math.log1p(params.Pcon * lK)
    return Bracket(f * hi, hi, f, lK)


def extended_interference_constant(params: ChannelParams, R: float) -> float:
    a = params.alpha
    return (params.Pcon * params.beta ** 2 * params.r0 ** (2 - 2 * a) / R ** 2
            * (4 + math.pi / (math.sqrt(3) * (2 * a - 2))))


def extended_bracket(params: ChannelParams, K: int, B: int, N: int, R: float,
                     r: float = 1.0) -> Bracket:
    """Asymptotic bracket for a regular extended (hex) Rayleigh network, p^2 ~ R^2 B."""
    if not isinstance(params.fading, Rayleigh):
        raise FamilyMismatch("extended_bracket is Rayleigh-only; see scaling_table")
    if r <= 0:
        raise DomainError("r must be > 0")
    c0 = extended_interference_constant(params, R)
    f = r * r / ((1 + r * r) * (N + (1 + r) * c0))
    lK = scaling_point(params.fading, K, R * math.sqrt(B), params.r0, params.alpha,
                       params.beta)
    hi = B * N * math.log1p(params.Pcon * lK)
    return Bracket(f * hi, hi, f, lK)


@dataclass(frozen=True)
class ScalingLaw:
    upper: Callable[[float, float, float], float]
    lower: Callable[[float, float, float], float]
    description: str


def scaling_table(family: FadingModel, regime: str) -> ScalingLaw:
    """Order-of-growth laws of the expected sum-rate, as evaluatable functions of (K, B, N)."""
    regime = regime.lower()
    if regime not in ("dense", "extended"):
        raise InvalidParam(f"unknown regime {regime!r}")
    dense = regime == "dense"

    def users(K, B):
        return K if dense else K / B

    if isinstance(family, (Rayleigh, Nakagami)):
        def growth(x):
            return math.log(math.log(x))
        tag = "log log"
    elif isinstance(family, Weibull):
        t = family.t

        def growth(x):
            return math.log(math.log(x) ** (2.0 / t))
        tag = f"log log^(2/{t:g})"
    elif isinstance(family, LogNormal):
        def growth(x):
            return math.sqrt(math.log(x))
        tag = "sqrt(log"
    else:
        raise InvalidParam(f"unsupported family {family!r}")

    arg = "K" if dense else "K/B"
    desc_g = f"{tag} {arg}" + (")" if tag.startswith("sqrt") else "")
    if dense:
        return ScalingLaw(lambda K, B, N: B * N * growth(users(K, B)),
                          lambda K, B, N: min(B, N) * growth(users(K, B)),
                          f"upper O(BN {desc_g}), lower Omega(min(B,N) {desc_g})")
    return ScalingLaw(lambda K, B, N: B * N * growth(users(K, B)),
                      lambda K, B, N: B * growth(users(K, B)),
                      f"upper O(BN {desc_g}), lower Omega(B {desc_g})")


def simplex_grid(N: int, points_per_axis: int, total: float) -> np.ndarray:
    """All power vectors ``total * k / (g - 1)`` with nonnegative integer k, sum(k) <= g - 1."""
    g = points_per_axis - 1
    if g < 1:
        raise InvalidParam("power grid needs at least 2 points per axis")
    pts = [c for c in itertools.product(range(g + 1), repeat=N) if sum(c) <= g]
    return total * np.array(pts, dtype=float) / g


@dataclass(frozen=True)
class BruteForceResult:
    mean: float
    std_error: float
    per_trial: np.ndarray


def exhaustive_rate(snr: np.ndarray, power_sets: np.ndarray) -> float:
    """Max over all user maps and all given power allocations of the sum-rate.

    ``power_sets`` has shape (P, B, N).
    """
    B, K, N = snr.shape
    best = -np.inf
    for umap in itertools.product(range(K), repeat=B * N):
        u = np.array(umap).reshape(B, N)
        # g[j, i, n] = snr[j, u[i, n], n]
        g = snr[:, u, np.arange(N)[None, :]]
        sig = power_sets * g[np.arange(B), np.arange(B)][None]          # (P, B, N)
        tot = np.einsum("pjn,jin->pin", power_sets, g)
        rate = np.log1p(sig / (1.0 + tot - sig)).sum(axis=(1, 2))
        best = max(best, float(rate.max()))
    return best


def brute_force_c_star(layout: NetworkLayout, params: ChannelParams, K: int, N: int,
                       power_grid_size: int, trials: int, seed,
                       users: str = "disc") -> BruteForceResult:
    """Exhaustive maximisation of the instantaneous sum-rate, averaged over trials.

    Enumerates every user map and every point of a per-TX simplex power grid.
    Draws share the per-trial generators of :func:`mc_bounds`, so the two are
    directly comparable trial by trial.
    """
    B = layout.B
    cost = K ** (B * N) * power_grid_size ** (B * N)
    if cost > BRUTE_FORCE_BUDGET:
        raise BudgetExceeded(f"enumeration size {cost} exceeds {BRUTE_FORCE_BUDGET}")
    grid = simplex_grid(N, power_grid_size, params.Pcon)
    combos = np.array([np.stack(c) for c in itertools.product(grid, repeat=B)])
    vals = np.array([exhaustive_rate(draw_snr(layout, params, K, N, rng, users), combos)
                     for rng in trial_generators(seed, trials)])
    m, se = _mean_se(vals)
    return BruteForceResult(m, se, vals)


@dataclass(frozen=True)
class MaxSandwich:
    lower: float
    mc_mean: float
    mc_std_error: float
    jensen_upper: float


def max_statistic_sandwich(dist, T: int, S1: float, samples: int, seed,
                           V: Callable[[np.ndarray], np.ndarray] = np.log1p) -> MaxSandwich:
    """Bracket E V(max of T i.i.d. draws) for nondecreasing concave V.

    ``dist`` is a frozen scipy distribution.  The lower end is
    ``(1 - e^{-S1}) V(l)`` with ``F(l) = 1 - S1/T``; the upper end is
    ``V(E max)``, here with both expectations estimated from the same draws.
    """
    if not (0 < S1 <= T):
        raise DomainError("need 0 < S1 <= T")
    level = float(dist.ppf(1.0 - S1 / T))
    lower = -math.expm1(-S1) * float(V(np.asarray(level)))
    draws = dist.rvs(size=(samples, T), random_state=np.random.default_rng(seed))
    mx = draws.max(axis=1)
    vals = V(mx)
    m, se = _mean_se(vals)
    return MaxSandwich(lower, m, se, float(V(np.asarray(mx.mean()))))
