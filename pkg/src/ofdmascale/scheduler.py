"""Distributed max-SINR scheduling and the peer-to-peer scaling comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bounds import _map_trials, _mean_se, draw_snr, trial_generators
from .errors import DimensionMismatch, DomainError, InvalidParam
from .geometry import NetworkLayout
from .op_solver import PowerAllocation
from .snr_model import ChannelParams, SnrTensor


@dataclass(frozen=True)
class Assignment:
    """``user_of[i, n]``: zero-based index of the user served by TX i on block n."""

    user_of: np.ndarray


def _quotients(P: np.ndarray, snr: np.ndarray) -> np.ndarray:
    """q[i, k, n] = P[i,n] g[i,k,n] / (1 + sum_{j != i} P[j,n] g[j,k,n])."""
    rx = P[:, None, :] * snr                                # (B, K, N)
    return rx / (1.0 + rx.sum(axis=0, keepdims=True) - rx)


def schedule_users(powers, snr) -> Assignment:
    """Per (TX, block), the user maximising its SINR quotient; ties go to the smallest index."""
    g = snr.values if isinstance(snr, SnrTensor) else np.asarray(snr, dtype=float)
    P = powers.p if isinstance(powers, PowerAllocation) else np.asarray(powers, dtype=float)
    if g.ndim != 3 or P.shape != (g.shape[0], g.shape[2]):
        raise DimensionMismatch(f"powers {P.shape} do not match SNR tensor {g.shape}")
    return Assignment(np.argmax(_quotients(P, g), axis=1))


def scheduled_sinr(powers, snr, assignment: Assignment) -> np.ndarray:
    """Realised SINR of the scheduled user on every (TX, block)."""
    g = snr.values if isinstance(snr, SnrTensor) else np.asarray(snr, dtype=float)
    P = powers.p if isinstance(powers, PowerAllocation) else np.asarray(powers, dtype=float)
    q = _quotients(P, g)
    return np.take_along_axis(q, assignment.user_of[:, None, :], axis=1)[:, 0, :]


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    std_error: float
    trials: int


def achieved_sum_rate(layout: NetworkLayout, params: ChannelParams, K: int, N: int,
                      powers, trials: int, seed, users: str = "disc",
                      threads: int = 1) -> RateEstimate:
    """Monte Carlo sum-rate of max-SINR scheduling under fixed powers."""
    P = powers.p if isinstance(powers, PowerAllocation) else np.asarray(powers, dtype=float)
    if P.shape != (layout.B, N):
        raise DimensionMismatch(f"powers must have shape {(layout.B, N)}")
    if np.any(P < 0) or np.any(P.sum(axis=1) > params.Pcon + 1e-12):
        raise InvalidParam("powers violate the per-TX budget")

    def one(rng):
        g = draw_snr(layout, params, K, N, rng, users)
        a = schedule_users(P, g)
        return float(np.log1p(scheduled_sinr(P, g, a)).sum())

    vals = np.array(_map_trials(one, trial_generators(seed, trials), threads))
    m, se = _mean_se(vals)
    return RateEstimate(m, se, trials)


class P2PRegime(str, Enum):
    LINEAR = "linear"            # BN ln ln K is the smaller branch
    SATURATED = "saturated"      # N ln K is the smaller branch


@dataclass(frozen=True)
class P2PScaling:
    regime: P2PRegime
    predicted_rate_scale: float
    gain_over_single_tx: float
    gain_branch: str


def p2p_scaling(K: float, B: int, N: int, P_bar: float = 1.0,
                params: ChannelParams | None = None, p: float = 1.0) -> P2PScaling:
    """Leading-order sum-rate scale min(BN ln ln K, N ln K) and the gain over a single TX.

    The single-TX reference transmits with ``B * P_bar`` per block; at leading
    order neither ``P_bar`` nor the channel constants enter.
    """
    if K < 16:
        raise DomainError("K must be >= 16")
    if B < 1 or N < 1:
        raise InvalidParam("B and N must be >= 1")
    lnK = math.log(K)
    lnlnK = math.log(lnK)
    lin = B * N * lnlnK
    sat = N * lnK
    regime = P2PRegime.LINEAR if lin <= sat else P2PRegime.SATURATED
    if B <= lnK / lnlnK:
        gain, branch = float(B), "B"
    elif B <= lnK:
        gain, branch = lnK / lnlnK, "lnK/lnlnK"
    else:
        gain, branch = lnK / math.log(B), "lnK/lnB"
    return P2PScaling(regime, min(lin, sat), gain, branch)
