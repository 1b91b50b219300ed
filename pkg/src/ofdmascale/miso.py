"""Opportunistic random beamforming with M antennas per transmitter.

Each transmitter forms M orthonormal random beams; every (TX, beam) pair acts
as a virtual transmitter, while the power budget stays per physical TX.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParam
from .geometry import NetworkLayout, UserSet, distance_matrix
from .op_solver import OpInstance, OpSolution, PowerAllocation, solve_grouped
from .snr_model import ChannelParams


@dataclass(frozen=True)
class BeamSet:
    """``beams[:, m]`` is the m-th unit-norm beam."""

    beams: np.ndarray

    @property
    def M(self) -> int:
        return self.beams.shape[1]

    def unitarity_residual(self) -> float:
        G = self.beams.conj().T @ self.beams
        return float(np.max(np.abs(G - np.eye(self.M))))


def _mgs(A: np.ndarray, eps: float = 1e-8):
    Q = np.array(A, dtype=complex)
    for j in range(Q.shape[1]):
        for i in range(j):
            Q[:, j] -= (Q[:, i].conj() @ Q[:, j]) * Q[:, i]
        nrm = np.linalg.norm(Q[:, j])
        if nrm < eps:
            return None
        Q[:, j] /= nrm
    return Q


def random_orthonormal_beams(M: int, seed) -> BeamSet:
    """Modified Gram-Schmidt on an M x M matrix of standard complex Gaussians."""
    if M < 1:
        raise InvalidParam("M must be >= 1")
    rng = np.random.default_rng(seed)
    while True:
        A = (rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))) / np.sqrt(2)
        Q = _mgs(A)
        if Q is not None:                     # degenerate draws have probability zero
            return BeamSet(Q)


def miso_sinr(powers3, gains, i: int, k: int, n: int, m: int,
              intra_beam_indexed: bool = False) -> float:
    """SINR of user k on (TX i, block n, beam m).

    ``powers3[i, n, m]`` and ``gains[i, k, n, m]``.  By default the intra-cell
    term weights the other beams' powers by the beam-m gain; with
    ``intra_beam_indexed`` each other beam uses its own gain instead.
    """
    P = np.asarray(powers3, dtype=float)
    g = np.asarray(gains, dtype=float)
    own = P[i, n, m] * g[i, k, n, m]
    others = np.delete(np.arange(P.shape[2]), m)
    if intra_beam_indexed:
        intra = float(P[i, n, others] @ g[i, k, n, others])
    else:
        intra = float(P[i, n, others].sum() * g[i, k, n, m])
    inter = float(np.einsum("jm,jm->", P[:, n, :], g[:, k, n, :]) - P[i, n] @ g[i, k, n])
    return float(own / (1.0 + intra + inter))


def miso_gains(layout: NetworkLayout, users: UserSet, params: ChannelParams, N: int,
               beams: Sequence[BeamSet], seed) -> np.ndarray:
    """Per-beam SNRs gamma[i, k, n, m] = path loss * |h phi_m|^2 for Rayleigh vector channels."""
    M = beams[0].M
    if len(beams) != layout.B:
        raise InvalidParam("need one BeamSet per transmitter")
    rng = np.random.default_rng(seed)
    B, K = layout.B, users.K
    h = (rng.standard_normal((B, K, N, M)) + 1j * rng.standard_normal((B, K, N, M))) / np.sqrt(2)
    proj = np.stack([h[i] @ beams[i].beams for i in range(B)])
    pl = params.beta ** 2 * distance_matrix(layout, users) ** (-2.0 * params.alpha)
    return pl[:, :, None, None] * np.abs(proj) ** 2


def solve_op_miso(inst: OpInstance, M: int, n_random: int = 4, seed=0,
                  warm_starts: Sequence[np.ndarray] = (), max_sweeps: int = 500,
                  tol: float = 1e-9) -> OpSolution:
    """OP with B*M virtual transmitters; powers and proxies are returned as (B, N, M).

    With M = 1 this runs exactly the same computation as ``solve_op``.
    """
    if M < 1:
        raise InvalidParam("M must be >= 1")
    B, N = inst.B, inst.N
    groups = np.repeat(np.arange(B), M)           # virtual index v = i * M + m
    warm = [np.asarray(w, dtype=float).reshape(B, N, M).transpose(0, 2, 1).reshape(B * M, N)
            for w in warm_starts]
    sol = solve_grouped(inst, groups, n_random=n_random, seed=seed, warm_starts=warm,
                        max_sweeps=max_sweeps, tol=tol)

    def to3(a):
        return np.asarray(a).reshape(B, M, N).transpose(0, 2, 1)

    return OpSolution(PowerAllocation(to3(sol.powers.p)), to3(sol.x), sol.objective,
                      sol.converged, sol.iterations)
