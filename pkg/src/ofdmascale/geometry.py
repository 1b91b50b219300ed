"""Transmitter layouts, user placement and truncated distances.

Two deployment kinds are supported: a *dense* network, where B transmitters sit
inside a disc of radius ``p - R``, and a *hex-extended* network, where
transmitters occupy sites of a hexagonal lattice with neighbour spacing ``2R``.
Users are either uniform on the radius-``p`` disc or uniform inside each
transmitter's hexagonal cell.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import ConstraintViolation, KindMismatch

_TOL = 1e-12


class LayoutKind(str, Enum):
    DENSE = "dense"
    HEX_EXTENDED = "hex_extended"


@dataclass(frozen=True)
class NetworkLayout:
    """Transmitter coordinates and the geometry constants of the deployment."""

    tx_positions: np.ndarray
    network_radius_p: float
    cell_radius_R: float
    truncation_r0: float
    kind: LayoutKind = LayoutKind.DENSE

    def __post_init__(self):
        tx = np.atleast_2d(np.asarray(self.tx_positions, dtype=float))
        if tx.shape[1] != 2:
            raise ConstraintViolation("tx_positions must be an (B, 2) array")
        tx.setflags(write=False)
        object.__setattr__(self, "tx_positions", tx)
        object.__setattr__(self, "kind", LayoutKind(self.kind))

    @property
    def B(self) -> int:
        return self.tx_positions.shape[0]

    @property
    def p(self) -> float:
        return self.network_radius_p

    @property
    def R(self) -> float:
        return self.cell_radius_R

    @property
    def r0(self) -> float:
        return self.truncation_r0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "p": self.p,
            "R": self.R,
            "r0": self.r0,
            "tx": self.tx_positions.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkLayout":
        return cls(np.asarray(d["tx"], dtype=float), float(d["p"]), float(d["R"]),
                   float(d["r0"]), LayoutKind(d["kind"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "NetworkLayout":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class UserSet:
    positions: np.ndarray
    cell_of_user: Optional[np.ndarray] = field(default=None)

    @property
    def K(self) -> int:
        return self.positions.shape[0]


def _uniform_disc(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    # inverse transform on the radius: exact uniformity without rejection
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def build_dense_layout(B: int, p: float, R: float, r0: float,
                       placement: str | Sequence = "uniform",
                       seed: int = 0) -> NetworkLayout:
    """Dense deployment: B transmitters inside the disc of radius ``p - R``.

    ``placement`` is either ``"uniform"`` (random, uniform on the disc) or an
    explicit sequence of B coordinates.
    """
    if B < 1:
        raise ConstraintViolation("B must be >= 1")
    if not (0 < r0 < R < p):
        raise ConstraintViolation(f"need 0 < r0 < R < p, got r0={r0}, R={R}, p={p}")
    if isinstance(placement, str):
        if placement != "uniform":
            raise ConstraintViolation(f"unknown placement {placement!r}")
        tx = _uniform_disc(np.random.default_rng(seed), B, p - R)
    else:
        tx = np.asarray(placement, dtype=float).reshape(-1, 2)
        if tx.shape[0] != B:
            raise ConstraintViolation(f"expected {B} positions, got {tx.shape[0]}")
        dist = np.hypot(tx[:, 0], tx[:, 1])
        bad = np.nonzero(dist > (p - R) * (1 + _TOL))[0]
        if bad.size:
            i = int(bad[0])
            raise ConstraintViolation(
                f"TX {i} at {tuple(tx[i])} lies outside radius p-R={p - R:g}")
    return NetworkLayout(tx, p, R, r0, LayoutKind.DENSE)


def hex_sites(B: int, spacing: float) -> np.ndarray:
    """First B hexagonal-lattice sites in spiral order (centre, then rings CCW from angle 0)."""
    sites = [(0.0, 0.0)]
    k = 1
    while len(sites) < B:
        x, y = k * spacing, 0.0
        for side in range(6):
            ang = math.radians(120 + 60 * side)
            dx, dy = spacing * math.cos(ang), spacing * math.sin(ang)
            for _ in range(k):
                sites.append((x, y))
                x, y = x + dx, y + dy
        k += 1
    return np.array(sites[:B])


def hex_network_radius(B: int, R: float) -> float:
    return R * math.sqrt(3.0 * B / math.pi)


def build_hex_layout(B: int, R: float, r0: float) -> NetworkLayout:
    """Regular extended network: B sites of a hex lattice with spacing 2R."""
    if B < 1:
        raise ConstraintViolation("B must be >= 1")
    if not (0 < r0 < R):
        raise ConstraintViolation(f"need 0 < r0 < R, got r0={r0}, R={R}")
    tx = hex_sites(B, 2.0 * R)
    return NetworkLayout(tx, hex_network_radius(B, R), R, r0, LayoutKind.HEX_EXTENDED)


def sample_users_disc(layout: NetworkLayout, K: int, seed: int | np.random.Generator) -> UserSet:
    """K users i.i.d. uniform on the disc of radius p."""
    if K < 1:
        raise ConstraintViolation("K must be >= 1")
    rng = np.random.default_rng(seed)
    return UserSet(_uniform_disc(rng, K, layout.p))


def _hex_vertices(R: float) -> np.ndarray:
    # cell with apothem R whose flat sides face the lattice neighbours (angles 0, 60, ...)
    circ = 2.0 * R / math.sqrt(3.0)
    angs = np.radians(30.0 + 60.0 * np.arange(6))
    return circ * np.column_stack([np.cos(angs), np.sin(angs)])


def sample_users_per_cell(layout: NetworkLayout, rho: int,
                          seed: int | np.random.Generator) -> UserSet:
    """Exactly ``rho`` users uniform inside each hexagonal cell."""
    if layout.kind is not LayoutKind.HEX_EXTENDED:
        raise KindMismatch("per-cell sampling needs a hex_extended layout")
    if rho < 1:
        raise ConstraintViolation("rho must be >= 1")
    rng = np.random.default_rng(seed)
    n = layout.B * rho
    verts = _hex_vertices(layout.R)
    tri = rng.integers(0, 6, n)
    u, v = rng.random(n), rng.random(n)
    flip = u + v > 1.0
    u[flip], v[flip] = 1.0 - u[flip], 1.0 - v[flip]
    a, b = verts[tri], verts[(tri + 1) % 6]
    local = u[:, None] * a + v[:, None] * b
    cell = np.repeat(np.arange(layout.B), rho)
    return UserSet(local + layout.tx_positions[cell], cell)


def point_in_hex(pt: np.ndarray, center: np.ndarray, R: float) -> np.ndarray:
    """True where points lie inside the hexagon of apothem R around ``center``."""
    rel = np.atleast_2d(pt) - center
    normals = np.column_stack([np.cos(np.radians(60.0 * np.arange(6))),
                               np.sin(np.radians(60.0 * np.arange(6)))])
    return np.all(rel @ normals.T <= R * (1 + 1e-12), axis=1)


def truncated_distance(tx, user, r0: float):
    """``max(r0, |tx - user|)``; broadcasts over leading dimensions."""
    tx = np.asarray(tx, dtype=float)
    user = np.asarray(user, dtype=float)
    d = np.hypot(tx[..., 0] - user[..., 0], tx[..., 1] - user[..., 1])
    out = np.maximum(r0, d)
    return float(out) if out.ndim == 0 else out


def distance_matrix(layout: NetworkLayout, users: UserSet) -> np.ndarray:
    """(B, K) matrix of truncated TX-user distances."""
    return truncated_distance(layout.tx_positions[:, None, :],
                              users.positions[None, :, :], layout.r0)
