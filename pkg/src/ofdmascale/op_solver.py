"""The deterministic power optimisation OP(c, h(K)).

For every transmitter i and block n the SNR proxy x[i, n] is the positive root of

    ln(r0^2 hK / p^2) = x / h0 + sum_{j != i} ln(1 + p[j, n] x / C),

with h0 = beta^2 r0^(-2 alpha) and C = (c / r0)^(2 alpha).  The objective is
sum log(1 + p[i, n] x[i, n]) over per-transmitter power simplices.

Internally the solver works on *virtual* transmitters grouped into physical
ones; the SISO problem uses one virtual TX per physical TX and the MISO
extension uses one per beam.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidParam, NoRoot
from .snr_model import ChannelParams

EULER_GAMMA = 0.5772156649
_XTOL = 1e-12


@dataclass(frozen=True)
class PowerAllocation:
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float, ndmin=2)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def feasible(self, Pcon: float, tol: float = 1e-12) -> bool:
        per_tx = self.p.reshape(self.p.shape[0], -1).sum(axis=1)
        return bool(np.all(self.p >= 0) and np.all(per_tx <= Pcon + tol))


@dataclass(frozen=True)
class OpInstance:
    c: float
    hK: float
    B: int
    N: int
    params: ChannelParams = field(default_factory=ChannelParams)
    p_radius: float = 1.0

    def __post_init__(self):
        if self.B < 1 or self.N < 1:
            raise InvalidParam("B and N must be >= 1")
        if self.c < self.params.r0:
            raise InvalidParam(f"need c >= r0, got c={self.c}, r0={self.params.r0}")
        if self.log_level <= 0:
            raise NoRoot("r0^2 hK / p^2 must exceed 1")

    @property
    def log_level(self) -> float:
        """ln(r0^2 hK / p^2)."""
        return math.log(self.hK) + 2 * math.log(self.params.r0 / self.p_radius)

    @property
    def h0(self) -> float:
        return self.params.peak_gain

    @property
    def C(self) -> float:
        return (self.c / self.params.r0) ** (2 * self.params.alpha)

    def to_dict(self) -> dict:
        return {"c": self.c, "hK": self.hK, "B": self.B, "N": self.N,
                "params": self.params.to_dict(), "p_radius": self.p_radius}

    @classmethod
    def from_dict(cls, d: dict) -> "OpInstance":
        d = dict(d)
        params = ChannelParams.from_dict(d.pop("params", {}))
        return cls(params=params, **d)


@dataclass(frozen=True)
class OpSolution:
    powers: PowerAllocation
    x: np.ndarray
    objective: float
    converged: bool
    iterations: int

    def to_dict(self) -> dict:
        return {"powers": self.powers.p.tolist(), "x": np.asarray(self.x).tolist(),
                "objective": self.objective, "converged": self.converged,
                "iterations": self.iterations}


def _solve_fixed_point(P: np.ndarray, lnL: float, h0: float, C: float) -> np.ndarray:
    """Roots x[v, n] for virtual powers P (V x N); interference from all u != v."""
    P = np.asarray(P, dtype=float)
    V = P.shape[0]
    mask = 1.0 - np.eye(V)
    q = P / C                                               # (V, N)
    x = np.zeros_like(P)
    hi = np.full_like(P, h0 * lnL)
    # f is concave increasing in x, so Newton from x = 0 increases monotonically to the root
    for _ in range(200):
        t = 1.0 + q[None, :, :] * x[:, None, :]               # (v, u, n)
        f = x / h0 + np.einsum("vu,vun->vn", mask, np.log(t)) - lnL
        fp = 1.0 / h0 + np.einsum("vu,vun->vn", mask, q[None, :, :] / t)
        step = -f / fp
        x_new = np.minimum(x + step, hi)
        done = np.abs(x_new - x) <= _XTOL * np.maximum(x_new, 1e-300)
        x = x_new
        if np.all(done):
            return x
    return _bisect_fixed_point(P, lnL, h0, C)


def _bisect_fixed_point(P, lnL, h0, C):
    V = P.shape[0]
    mask = 1.0 - np.eye(V)
    q = P / C
    lo = np.zeros_like(P)
    hi = np.full_like(P, h0 * lnL)

    def f(x):
        return x / h0 + np.einsum("vu,vun->vn", mask, np.log1p(q[None] * x[:, None])) - lnL

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        pos = f(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= _XTOL * hi):
            break
    return 0.5 * (lo + hi)


def solve_x(powers, inst: OpInstance) -> np.ndarray:
    """Fixed-point SNR proxies x[i, n] for the given power allocation."""
    P = _as_array(powers)
    _check_shape(P, inst.B, inst.N)
    return _solve_fixed_point(P, inst.log_level, inst.h0, inst.C)


def fixed_point_residual(powers, x, inst: OpInstance) -> np.ndarray:
    """Relative residual of the defining equation at (powers, x)."""
    P = _as_array(powers)
    V = P.shape[0]
    mask = 1.0 - np.eye(V)
    rhs = x / inst.h0 + np.einsum("vu,vun->vn", mask, np.log1p(P[None] / inst.C * x[:, None]))
    return np.abs(rhs - inst.log_level) / inst.log_level


def op_objective(powers, inst: OpInstance) -> float:
    P = _as_array(powers)
    return float(np.sum(np.log1p(P * solve_x(P, inst))))


def _as_array(powers) -> np.ndarray:
    if isinstance(powers, PowerAllocation):
        return powers.p
    return np.array(powers, dtype=float, ndmin=2)


def _check_shape(P, V, N):
    if P.shape != (V, N):
        raise InvalidParam(f"powers must have shape {(V, N)}, got {P.shape}")


def project_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of v onto {p >= 0, sum(p) <= total}."""
    v = np.asarray(v, dtype=float)
    w = np.maximum(v, 0.0)
    if w.sum() <= total:
        return w
    # projection onto the face sum(p) = total
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, v.size + 1)
    k = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[k] / (k + 1)
    return np.maximum(v - tau, 0.0)


class _Problem:
    """OP over virtual transmitters; ``groups[v]`` is the physical TX of virtual TX v."""

    def __init__(self, lnL: float, h0: float, C: float, groups: np.ndarray, N: int,
                 Pcon: float):
        self.lnL, self.h0, self.C = lnL, h0, C
        self.groups = np.asarray(groups)
        self.V, self.N, self.Pcon = self.groups.size, N, Pcon
        self.blocks = [np.nonzero(self.groups == g)[0] for g in np.unique(self.groups)]
        self.mask = 1.0 - np.eye(self.V)

    def x(self, P):
        return _solve_fixed_point(P, self.lnL, self.h0, self.C)

    def value(self, P, x=None):
        if x is None:
            x = self.x(P)
        return float(np.sum(np.log1p(P * x)))

    def grad(self, P, x=None):
        """Exact gradient through the implicit fixed point."""
        if x is None:
            x = self.x(P)
        q = P / self.C
        t = 1.0 + q[None, :, :] * x[:, None, :]              # (v, u, n)
        fp = 1.0 / self.h0 + np.einsum("vu,vun->vn", self.mask, q[None] / t)
        a = P / ((1.0 + P * x) * fp)                          # (v, n)
        # dx[v, n] / dp[u, n] = -(x[v, n]/C) / t[v, u, n] / fp[v, n] for u != v
        cross = np.einsum("vu,vn,vun->un", self.mask, a * x / self.C, 1.0 / t)
        return x / (1.0 + P * x) - cross

    def project(self, P):
        out = np.empty_like(P)
        for b in self.blocks:
            out[b] = project_simplex(P[b].ravel(), self.Pcon).reshape(len(b), self.N)
        return out


def _ascend(prob: _Problem, P0: np.ndarray, max_sweeps: int, tol: float):
    """Block-coordinate projected gradient ascent with Armijo backtracking."""
    P = prob.project(np.array(P0, dtype=float))
    x = prob.x(P)
    F = prob.value(P, x)
    steps = [prob.Pcon] * len(prob.blocks)
    for sweep in range(1, max_sweeps + 1):
        F_start = F
        for bi, b in enumerate(prob.blocks):
            for _ in range(10):
                g = prob.grad(P, x)
                t = steps[bi]
                improved = False
                while t > 1e-14 * prob.Pcon:
                    Q = P.copy()
                    Q[b] = P[b] + t * g[b]
                    Q = prob.project(Q)
                    d = Q - P
                    if not np.any(d):
                        break
                    xq = prob.x(Q)
                    Fq = prob.value(Q, xq)
                    if Fq >= F + 1e-4 * float(np.sum(g * d)) and Fq > F:
                        P, x, F = Q, xq, Fq
                        improved = True
                        break
                    t *= 0.5
                steps[bi] = min(2.0 * t, 1e3 * prob.Pcon)
                if not improved:
                    break
        if F - F_start < tol * max(1.0, abs(F)):
            return P, x, F, True, sweep
    return P, x, F, False, max_sweeps


def _starts(prob: _Problem, n_random: int, seed, warm: Sequence[np.ndarray]):
    V, N, Pc = prob.V, prob.N, prob.Pcon
    starts = [np.asarray(w, dtype=float).reshape(V, N) for w in warm]
    eq = np.empty((V, N))
    for b in prob.blocks:
        eq[b] = Pc / (len(b) * N)
    starts.append(eq)
    # all power of every TX on one block, for each block
    for n in range(N):
        s = np.zeros((V, N))
        for b in prob.blocks:
            s[b, n] = Pc / len(b)
        starts.append(s)
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        s = np.empty((V, N))
        for b in prob.blocks:
            s[b] = Pc * rng.dirichlet(np.ones(len(b) * N)).reshape(len(b), N)
        starts.append(s)
    return starts


def _solve(prob: _Problem, n_random: int, seed, warm, max_sweeps: int, tol: float):
    best = None
    total_iters = 0
    for s in _starts(prob, n_random, seed, warm):
        P, x, F, conv, it = _ascend(prob, s, max_sweeps, tol)
        total_iters += it
        if best is None or F > best[2]:
            best = (P, x, F, conv)
    P, x, F, conv = best
    return OpSolution(PowerAllocation(P), x, F, conv, total_iters)


def solve_op(inst: OpInstance, n_random: int = 4, seed=0,
             warm_starts: Sequence[np.ndarray] = (), max_sweeps: int = 500,
             tol: float = 1e-9) -> OpSolution:
    """Heuristic maximisation of OP by multistart block-coordinate ascent.

    Starts are the given warm starts, equal power, the per-block vertices and
    ``n_random`` Dirichlet draws.  The returned objective is never below the
    objective of any start.
    """
    prob = _Problem(inst.log_level, inst.h0, inst.C, np.arange(inst.B), inst.N,
                    inst.params.Pcon)
    return _solve(prob, n_random, seed, warm_starts, max_sweeps, tol)


def solve_grouped(inst: OpInstance, groups: np.ndarray, n_random: int = 4, seed=0,
                  warm_starts: Sequence[np.ndarray] = (), max_sweeps: int = 500,
                  tol: float = 1e-9) -> OpSolution:
    """OP over virtual transmitters sharing the per-physical-TX power budget."""
    prob = _Problem(inst.log_level, inst.h0, inst.C, groups, inst.N, inst.params.Pcon)
    return _solve(prob, n_random, seed, warm_starts, max_sweeps, tol)


def lbar(c: float, K: float, inst: OpInstance) -> float:
    """Fixed-point level with every interferer at full power Pcon."""
    level = math.log(K) + 2 * math.log(inst.params.r0 / inst.p_radius)
    if level <= 0:
        raise NoRoot("r0^2 K / p^2 must exceed 1")
    C = (c / inst.params.r0) ** (2 * inst.params.alpha)
    P = np.full((inst.B, 1), inst.params.Pcon)
    return float(_solve_fixed_point(P, level, inst.h0, C)[0, 0])


@dataclass(frozen=True)
class RateBracket:
    lo: float
    hi: float
    lo_prefactor: float
    hi_prefactor: float
    op_lo: float
    op_hi: float


def theorem3_bracket(K: float, S1: float, inst_r0: OpInstance, inst_2p: OpInstance,
                     **solver_kw) -> RateBracket:
    """Lower and upper ends of the OP sandwich on the achievable expected sum-rate."""
    if not (0 < S1 <= K):
        raise DomainError("need 0 < S1 <= K")
    sol_lo = solve_op(replace(inst_r0, hK=K / S1), **solver_kw)
    # OP is monotone in (c, hK), so warm-starting the upper problem keeps lo <= hi
    kw = dict(solver_kw)
    kw["warm_starts"] = list(kw.get("warm_starts", ())) + [sol_lo.powers.p]
    sol_hi = solve_op(replace(inst_2p, hK=K), **kw)
    pre_lo = -math.expm1(-S1)
    pre_hi = 1.0 + inst_2p.h0 * EULER_GAMMA / lbar(inst_2p.c, K, inst_2p)
    return RateBracket(pre_lo * sol_lo.objective, pre_hi * sol_hi.objective,
                           pre_lo, pre_hi, sol_lo.objective, sol_hi.objective)


def op_ratio_check(c1: float, c2: float, hK: float, inst: OpInstance,
                   max_rounds: int = 20, **solver_kw) -> float:
    """OP(c2) / OP(c1), solved with mutual warm starts.

    Each problem is re-solved from the other's optimum until neither improves,
    which makes the solved ratio respect 1 <= ratio <= (c2/c1)^(2 alpha).
    """
    if not (0 < c1 <= c2):
        raise DomainError("need 0 < c1 <= c2")
    i1 = replace(inst, c=c1, hK=hK)
    i2 = replace(inst, c=c2, hK=hK)
    warm = list(solver_kw.pop("warm_starts", ()))
    s1 = solve_op(i1, warm_starts=warm, **solver_kw)
    s2 = solve_op(i2, warm_starts=warm + [s1.powers.p], **solver_kw)
    for _ in range(max_rounds):
        s1n = solve_op(i1, warm_starts=[s2.powers.p, s1.powers.p], n_random=0,
                       **{k: v for k, v in solver_kw.items() if k != "n_random"})
        if s1n.objective <= s1.objective:
            break
        s1 = s1n
        s2 = solve_op(i2, warm_starts=[s1.powers.p, s2.powers.p], n_random=0,
                      **{k: v for k, v in solver_kw.items() if k != "n_random"})
    return s2.objective / s1.objective


def fixed_power_x(P_bar: float, c: float, hK: float, inst: OpInstance) -> float:
    """Leading-order proxy under equal fixed power P_bar on every (TX, block)."""
    r0, alpha = inst.params.r0, inst.params.alpha
    L = r0 * r0 * hK / inst.p_radius ** 2
    if L <= 1:
        raise NoRoot("r0^2 hK / p^2 must exceed 1")
    first = inst.h0 * math.log(L)
    if inst.B == 1:
        return first
    second = (c / r0) ** (2 * alpha) / P_bar * L ** (1.0 / (inst.B - 1))
    return min(first, second)
