"""Network-design rules as scalar numeric procedures.

The user density rho = K / B is the decision variable of the revenue
tradeoffs.  With unit channel constants the per-TX throughput of an extended
network behaves like c ln(1 + ln rho).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

from .errors import DomainError, Infeasible, InvalidParam, NoSolution

RHO_CAP = 1e9


@dataclass(frozen=True)
class DesignPoint:
    rho: float
    lam: float
    sbar_over_c: float
    feasible: bool


def principle1_required_resources(K: float) -> float:
    """Necessary order of B*N for the sum-rate to scale with K: K / ln ln K."""
    if K < 16:
        raise DomainError("K must be >= 16")
    return K / math.log(math.log(K))


@dataclass(frozen=True)
class RoiCheck:
    roi_ok: bool
    throughput_ok: bool
    roi_value: float
    throughput_value: float


def principle2_feasible(K: float, B: float, N: float, sbar: float, c_N: float,
                        shat: float) -> RoiCheck:
    """Return-on-investment and per-user throughput checks with unit channel constants."""
    arg = math.log(K * N / B) / N
    if arg <= 1:
        return RoiCheck(False, False, -math.inf, -math.inf)
    lg = math.log(arg)
    roi = B * N / (B + c_N * N) * lg
    thr = B * N / K * lg
    return RoiCheck(roi > sbar, thr > shat, roi, thr)


def _grow_until(fn, start: float, cap: float = RHO_CAP) -> float:
    """Smallest start * 2^j with fn(.) <= 0, or cap."""
    hi = start
    while fn(hi) > 0:
        if hi >= cap:
            return cap
        hi = min(2 * hi, cap)
    return hi


def principle3_feasible_range(c_over_sbar: float) -> tuple[float, float]:
    """Interval of rho >= 1 where (c/sbar) ln(1 + ln rho) >= rho.

    The upper end is capped at ``RHO_CAP`` when the constraint is that slack.
    """
    a = float(c_over_sbar)
    if not a > 0:
        raise InvalidParam("c_over_sbar must be > 0")

    def g(r):
        return a * math.log1p(math.log(r)) - r

    # g is concave; its peak solves rho (1 + ln rho) = a
    if a <= 1:
        raise Infeasible("constraint curve never reaches the identity line")
    peak = optimize.brentq(lambda r: r * (1 + math.log(r)) - a, 1.0, a, xtol=1e-14)
    if g(peak) < 0:
        raise Infeasible(f"no feasible user density for c/sbar = {a:g}")
    lo = optimize.brentq(g, 1.0, peak, xtol=1e-12)
    hi_end = _grow_until(g, peak)
    if hi_end >= RHO_CAP and g(RHO_CAP) > 0:
        return lo, RHO_CAP
    return lo, optimize.brentq(g, peak, hi_end, xtol=1e-12)


def _kkt_root(target: float) -> float:
    # rho (1 + ln rho) is increasing from 1 at rho = 1
    if target <= 1:
        return 1.0
    return optimize.brentq(lambda r: r * (1 + math.log(r)) - target, 1.0, target,
                           xtol=1e-14)


def principle3_lambda_threshold(c_over_sbar: float = 10.0) -> float:
    """Smallest multiplier for which the KKT root stays inside the feasible range."""
    _, rmax = principle3_feasible_range(c_over_sbar)
    return c_over_sbar / (rmax * (1 + math.log(rmax)) - c_over_sbar)


def principle3_kkt_rho(lam: float, c_over_sbar: float = 10.0) -> float:
    """Optimal density from the KKT condition rho (1 + ln rho) = (c/sbar)(1 + 1/lambda).

    ``lam = math.inf`` is handled as the limit.  A root left of the feasible
    range is moved to its lower end; a root right of it raises NoSolution.
    """
    if lam <= 0:
        raise NoSolution("lambda must be > 0")
    target = c_over_sbar if math.isinf(lam) else c_over_sbar * (1.0 + 1.0 / lam)
    rmin, rmax = principle3_feasible_range(c_over_sbar)
    rho = _kkt_root(target)
    if rho > rmax:
        raise NoSolution(f"KKT root {rho:.4g} exceeds the feasible range end {rmax:.4g}")
    return max(rho, rmin)


def p4_curve(rho):
    """ln(1 + ln rho) / rho."""
    rho = np.asarray(rho, dtype=float)
    return np.log1p(np.log(rho)) / rho


@lru_cache(maxsize=None)
def principle4_threshold() -> tuple[float, float]:
    """(max value, argmax) of ln(1 + ln rho)/rho over rho >= 1, by golden-section search."""
    res = optimize.minimize_scalar(lambda r: -float(p4_curve(r)), bracket=(1.0, 2.0, 10.0),
                                   method="golden", tol=1e-10)
    return -float(res.fun), float(res.x)


def principle4_rho_star(sbar_over_c: float) -> float:
    """Largest rho with ln(1 + ln rho)/rho >= sbar_over_c."""
    fmax, rpeak = principle4_threshold()
    s = float(sbar_over_c)
    if not s > 0:
        raise DomainError("sbar_over_c must be > 0")
    if s > fmax + 1e-12:
        raise Infeasible(f"sbar/c = {s:g} exceeds the threshold {fmax:.6f}")
    if s >= fmax:
        return rpeak

    def h(r):
        return float(p4_curve(r)) - s

    hi = _grow_until(h, rpeak)
    if h(hi) > 0:
        return RHO_CAP
    return optimize.brentq(h, rpeak, hi, xtol=1e-12)


def rho_grid(start: float = 1.0, stop: float = 20.0, step: float = 0.01) -> np.ndarray:
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


def principle3_curves(c_over_sbar: float = 10.0, lambdas: Sequence[float] = (0.1, 1.0, math.inf),
                      rho: np.ndarray | None = None) -> list[tuple]:
    """Rows (lambda, rho, lhs, rhs, constraint) of the KKT tradeoff figure."""
    rho = rho_grid() if rho is None else np.asarray(rho, dtype=float)
    cons = c_over_sbar * np.log1p(np.log(rho))
    rows = []
    for lam in lambdas:
        mult = 1.0 if math.isinf(lam) else (lam + 1.0) / lam
        rhs = mult * c_over_sbar / (1.0 + np.log(rho))
        rows.extend((lam, r, r, v, cv) for r, v, cv in zip(rho, rhs, cons))
    return rows


def principle3_rho_star_curve(lambdas: Iterable[float], c_over_sbar: float = 10.0) -> list[tuple]:
    """Rows (lambda, rho_star) with NaN where no solution exists."""
    out = []
    for lam in lambdas:
        try:
            out.append((lam, principle3_kkt_rho(lam, c_over_sbar)))
        except NoSolution:
            out.append((lam, math.nan))
    return out


def principle4_curves(sbar_over_c: Sequence[float] = (0.1, 0.2, 0.2644),
                      rho: np.ndarray | None = None) -> list[tuple]:
    """Rows (sbar_over_c, rho, lhs, rhs) of the flat-rate tradeoff figure."""
    rho = rho_grid() if rho is None else np.asarray(rho, dtype=float)
    rhs = p4_curve(rho)
    return [(s, r, s, v) for s in sbar_over_c for r, v in zip(rho, rhs)]
