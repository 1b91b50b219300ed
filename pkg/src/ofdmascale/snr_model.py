"""Channel SNRs under truncated path loss, and their extreme-value behaviour.

The composite SNR of a (TX, user, block) triple is
``gamma = beta^2 * max(r0, dist)^(-2 alpha) * |nu|^2`` with the user uniform on the
radius-``p`` disc and the TX at distance ``d`` from the disc centre.  This module
evaluates its distribution (exactly by quadrature, or through the large-SNR tail),
the scaling point ``l_K`` where the tail probability equals ``1/K``, the growth
function ``(1 - F)/f`` and the concentration band around ``l_K``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .errors import (BracketFailure, DimensionMismatch, DomainError, InvalidParam,
                     QuadratureFailure)
from .fading import FadingModel, LogNormal, Nakagami, Rayleigh, Weibull
from .geometry import NetworkLayout, UserSet, distance_matrix

QUAD_ABS_TOL = 1e-8


@dataclass(frozen=True)
class ChannelParams:
    alpha: float = 1.5
    beta: float = 1.0
    r0: float = 0.1
    Pcon: float = 1.0
    fading: FadingModel = field(default_factory=Rayleigh)

    def __post_init__(self):
        if not self.alpha > 1:
            raise InvalidParam(f"alpha must be > 1, got {self.alpha}")
        if not (self.beta > 0 and self.r0 > 0 and self.Pcon > 0):
            raise InvalidParam("beta, r0 and Pcon must be positive")

    @property
    def peak_gain(self) -> float:
        """Path-loss gain at the truncation distance, beta^2 r0^(-2 alpha)."""
        return peak_gain(self.r0, self.alpha, self.beta)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "r0": self.r0,
                "Pcon": self.Pcon, "fading": self.fading.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelParams":
        d = dict(d)
        fading = FadingModel.from_dict(d.pop("fading", {"family": "rayleigh"}))
        return cls(fading=fading, **d)


def peak_gain(r0: float, alpha: float, beta: float) -> float:
    return beta ** 2 * r0 ** (-2.0 * alpha)


@dataclass(frozen=True)
class SnrTensor:
    """Realized SNRs gamma[i, k, n] (B x K x N), linear scale, unit noise."""

    values: np.ndarray

    @property
    def shape(self):
        return self.values.shape

    def to_csv(self, path) -> None:
        B, K, N = self.values.shape
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "k", "n", "gamma"])
            for (i, k, n), v in np.ndenumerate(self.values):
                w.writerow([i, k, n, repr(float(v))])

    def to_binary(self, path) -> None:
        """Raw little-endian float64 in C order; the shape is not stored."""
        np.ascontiguousarray(self.values, dtype="<f8").tofile(path)

    @classmethod
    def from_binary(cls, path, shape) -> "SnrTensor":
        return cls(np.fromfile(path, dtype="<f8").reshape(shape))


def snr_from_gains(layout: NetworkLayout, users: UserSet, params: ChannelParams,
                   gains: np.ndarray) -> SnrTensor:
    """Combine path loss with given fading power gains of shape (B, K, N)."""
    gains = np.asarray(gains, dtype=float)
    B, K = layout.B, users.K
    if gains.ndim != 3 or gains.shape[:2] != (B, K):
        raise DimensionMismatch(f"gains shape {gains.shape} does not match (B={B}, K={K}, N)")
    dist = np.maximum(distance_matrix(layout, users), params.r0)
    path = params.beta ** 2 * dist ** (-2.0 * params.alpha)
    return SnrTensor(path[:, :, None] * gains)


def compute_snr_tensor(layout: NetworkLayout, users: UserSet, params: ChannelParams,
                       N: int, seed) -> SnrTensor:
    if N < 1:
        raise DimensionMismatch("N must be >= 1")
    rng = np.random.default_rng(seed)
    gains = params.fading.sample(rng, (layout.B, users.K, N))
    return snr_from_gains(layout, users, params, gains)


# ---------------------------------------------------------------------------
# geometry of the path-loss gain G = beta^2 max(r0, dist)^(-2 alpha)
# ---------------------------------------------------------------------------

def _gain_to_radius(g, alpha, beta):
    return (np.asarray(g, dtype=float) / beta ** 2) ** (-1.0 / (2.0 * alpha))


def disc_overlap_fraction(rho, d: float, p: float):
    """Fraction of the radius-p disc within distance ``rho`` of a point at distance d.

    Equals Pr(dist <= rho) for a user uniform on the disc.  Uses the concentric
    law ``min(1, rho^2/p^2)`` when ``d == 0``.
    """
    rho = np.asarray(rho, dtype=float)
    if d == 0:
        return np.clip(rho ** 2 / p ** 2, 0.0, 1.0)
    out = np.where(rho <= p - d, np.maximum(rho, 0.0) ** 2 / p ** 2, 1.0)
    lens = (rho > p - d) & (rho < p + d)
    if np.any(lens):
        r = rho[lens] if rho.ndim else rho
        c1 = np.clip((d * d + r * r - p * p) / (2 * d * r), -1.0, 1.0)
        c2 = np.clip((d * d + p * p - r * r) / (2 * d * p), -1.0, 1.0)
        prod = (p + d - r) * (p + r - d) * (d + r - p) * (d + p + r)
        area = r * r * np.arccos(c1) + p * p * np.arccos(c2) - 0.5 * np.sqrt(np.maximum(prod, 0.0))
        frac = area / (math.pi * p * p)
        if rho.ndim:
            out = out.copy()
            out[lens] = frac
        else:
            out = frac
    return out


def lens_fraction(g, d: float, p: float, alpha: float, beta: float):
    """Normalised circle-circle intersection area s(g) = Pr(G > g) on the lens branch.

    The radius ``(g/beta^2)^(-1/(2 alpha))`` must lie in ``[p - d, p + d]``.
    """
    rho = _gain_to_radius(g, alpha, beta)
    if d < 0:
        raise DomainError("d must be >= 0")
    if d > 0:
        eps = 1e-12 * p
        if np.any(rho < p - d - eps) or np.any(rho > p + d + eps):
            raise DomainError(f"radius outside lens window [{p - d}, {p + d}]")
    out = disc_overlap_fraction(rho, d, p)
    return float(out) if np.ndim(out) == 0 else out


def gain_cdf(g, d: float, p: float, r0: float, alpha: float, beta: float):
    """CDF of the path-loss gain G for a TX at distance d from the centre."""
    if not d < p - r0:
        raise DomainError(f"need d < p - r0, got d={d}, p={p}, r0={r0}")
    g = np.asarray(g, dtype=float)
    top = peak_gain(r0, alpha, beta)
    with np.errstate(divide="ignore"):
        rho = _gain_to_radius(np.maximum(g, 0.0), alpha, beta)
    F = 1.0 - disc_overlap_fraction(rho, d, p)
    F = np.where(g >= top, 1.0, np.where(g <= 0, 0.0, F))
    return float(F) if F.ndim == 0 else F


def _overlap_density(r, d, p):
    # d/dr of disc_overlap_fraction on the lens branch: arc length inside / (pi p^2)
    c = np.clip((d * d + r * r - p * p) / (2 * d * r), -1.0, 1.0)
    return 2.0 * r * np.arccos(c) / (math.pi * p * p)


def composite_snr_sf(model: FadingModel, gamma: float, d: float, p: float, r0: float,
                     alpha: float, beta: float) -> float:
    """Exact tail Pr(gamma_{i,k,n} > gamma) by quadrature over the user distance.

    Atom at the truncation radius, plus the annulus ``(r0, p - d]`` and the lens
    ``(p - d, p + d)`` integrated with respect to the distance distribution.
    """
    if not d < p - r0:
        raise DomainError(f"need d < p - r0, got d={d}, p={p}, r0={r0}")
    if gamma <= 0:
        return 1.0
    top = peak_gain(r0, alpha, beta)

    def sf_nu(x):
        return model.sf(x)

    def fade_tail(r):
        return float(sf_nu(gamma * r ** (2 * alpha) / beta ** 2))

    atom = (r0 / p) ** 2 * float(sf_nu(gamma / top))

    if isinstance(model, Rayleigh):
        # closed form of the annulus integral: incomplete gamma in t = gamma r^(2a)/beta^2
        s = 1.0 / alpha
        t1 = gamma * r0 ** (2 * alpha) / beta ** 2
        t2 = gamma * (p - d) ** (2 * alpha) / beta ** 2
        annulus = ((beta ** 2 / gamma) ** s * special.gamma(s + 1)
                   * (special.gammaincc(s, t1) - special.gammaincc(s, t2)) / p ** 2)
        err_a = 0.0
    else:
        annulus, err_a = integrate.quad(lambda r: fade_tail(r) * 2 * r / p ** 2, r0, p - d,
                                        epsabs=QUAD_ABS_TOL / 4, epsrel=1e-10, limit=200)
    if d > 0:
        lens, err_l = integrate.quad(lambda r: fade_tail(r) * _overlap_density(r, d, p),
                                     p - d, p + d, epsabs=QUAD_ABS_TOL / 4, epsrel=1e-10,
                                     limit=200)
    else:
        lens, err_l = 0.0, 0.0
    if err_a + err_l > QUAD_ABS_TOL:
        raise QuadratureFailure(f"quadrature error {err_a + err_l:.2e} above {QUAD_ABS_TOL}")
    return float(min(1.0, max(0.0, atom + annulus + lens)))


def rayleigh_snr_sf(gamma: float, d: float, p: float, r0: float, alpha: float,
                    beta: float) -> float:
    return composite_snr_sf(Rayleigh(), gamma, d, p, r0, alpha, beta)


def rayleigh_snr_cdf(gamma, d: float, p: float, r0: float, alpha: float, beta: float):
    """CDF of the Rayleigh composite SNR (vectorised over ``gamma``)."""
    g = np.asarray(gamma, dtype=float)
    out = np.array([0.0 if x <= 0 else 1.0 - rayleigh_snr_sf(x, d, p, r0, alpha, beta)
                    for x in g.ravel()]).reshape(g.shape)
    return float(out) if out.ndim == 0 else out


def sample_composite_snr(model: FadingModel, n: int, d: float, p: float, r0: float,
                         alpha: float, beta: float, seed) -> np.ndarray:
    """Monte Carlo draws of the composite SNR for a TX at (d, 0)."""
    rng = np.random.default_rng(seed)
    r = p * np.sqrt(rng.random(n))
    th = 2 * np.pi * rng.random(n)
    dist = np.hypot(r * np.cos(th) - d, r * np.sin(th))
    G = beta ** 2 * np.maximum(dist, r0) ** (-2 * alpha)
    return G * model.sample(rng, n)


def tail_approx_sf(model: FadingModel, gamma, p: float, r0: float, alpha: float,
                   beta: float):
    """Leading large-SNR term of Pr(gamma_{i,k,n} > gamma) (TX-position free)."""
    g = np.asarray(gamma, dtype=float)
    h0 = peak_gain(r0, alpha, beta)
    c = (r0 / p) ** 2
    if isinstance(model, Rayleigh):
        return c * np.exp(-g / h0)
    if isinstance(model, Nakagami):
        m, w = model.m, model.w
        z = m * g / (w * h0)
        return c * z ** (m - 1) * np.exp(-z) / math.gamma(m)
    if isinstance(model, Weibull):
        return c * np.exp(-((g / (h0 * model.lam ** 2)) ** (model.t / 2)))
    if isinstance(model, LogNormal):
        w = model.omega_w
        u = np.log(g / h0) - 2 * model.a
        return c * math.sqrt(2 * w / math.pi) * np.exp(-u * u / (8 * w)) / u
    raise InvalidParam(f"unsupported family {model!r}")


# ---------------------------------------------------------------------------
# extreme-value quantities
# ---------------------------------------------------------------------------

def scaling_point(family: FadingModel, K: float, p: float, r0: float, alpha: float,
                  beta: float) -> float:
    """Closed-form SNR level l_K with tail probability about 1/K."""
    ratio = K * r0 ** 2 / p ** 2
    if not ratio > 1:
        raise DomainError(f"need K r0^2/p^2 > 1, got {ratio}")
    h0 = peak_gain(r0, alpha, beta)
    L = math.log(ratio)
    if isinstance(family, Rayleigh):
        return h0 * L
    if isinstance(family, Nakagami):
        m, w = family.m, family.w
        arg = ratio * m ** (m - 1) / (math.gamma(m) * (w * h0) ** (m - 1))
        if not arg > 1:
            raise DomainError(f"Nakagami scaling-point log argument {arg} <= 1")
        return (w * h0 / m) * math.log(arg)
    if isinstance(family, Weibull):
        return h0 * family.lam ** 2 * L ** (2.0 / family.t)
    if isinstance(family, LogNormal):
        return h0 * math.exp(2 * family.a + math.sqrt(8 * family.omega_w * L))
    raise InvalidParam(f"unsupported family {family!r}")


def _bisect_increasing(fn: Callable[[float], float], lo: float, hi: float,
                       rtol: float, max_iter: int = 400) -> float:
    """Root of an increasing function by bisection on a valid bracket."""
    flo, fhi = fn(lo), fn(hi)
    if not (flo <= 0 <= fhi):
        raise BracketFailure(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * abs(hi):
            break
    return 0.5 * (lo + hi)


def numeric_scaling_point(family: FadingModel, K: float, d: float, p: float, r0: float,
                          alpha: float, beta: float, *,
                          cdf: Optional[Callable[[float], float]] = None,
                          method: str = "quad", samples: int = 2_000_000,
                          seed: int = 0, rtol: float = 1e-6) -> float:
    """Root of ``1 - F(l) = 1/K`` by bracketed bisection.

    ``method="quad"`` uses the exact composite distribution, ``method="mc"`` an
    empirical CDF of ``samples`` draws.  A custom ``cdf`` overrides both.
    """
    if K <= 1:
        raise DomainError("K must be > 1")
    target = 1.0 / K
    if cdf is not None:
        def sf(x):
            return 1.0 - cdf(x)
        scale = 1.0
    elif method == "mc":
        draws = np.sort(sample_composite_snr(family, samples, d, p, r0, alpha, beta, seed))
        n = draws.size

        def sf(x):
            return 1.0 - np.searchsorted(draws, x, side="right") / n
        scale = float(draws[-1])
    elif method == "quad":
        def sf(x):
            return composite_snr_sf(family, x, d, p, r0, alpha, beta)
        scale = peak_gain(r0, alpha, beta) * family.moments()[0]
    else:
        raise InvalidParam(f"unknown method {method!r}")

    hi = max(scale, 1e-12)
    for _ in range(200):
        if sf(hi) <= target:
            break
        hi *= 2.0
    else:
        raise BracketFailure("tail never drops below 1/K")
    return _bisect_increasing(lambda x: target - sf(x), 0.0, hi, rtol)


def growth_function(family: FadingModel, gamma_level: float, p: float, r0: float,
                    alpha: float, beta: float) -> float:
    """Asymptotic growth function h = (1 - F)/f of the composite SNR."""
    h0 = peak_gain(r0, alpha, beta)
    if isinstance(family, Rayleigh):
        return h0
    if isinstance(family, Nakagami):
        return family.w * h0 / family.m
    if isinstance(family, Weibull):
        t = family.t
        return 2.0 * (h0 * family.lam ** 2) ** (t / 2) / t * gamma_level ** (1 - t / 2)
    if isinstance(family, LogNormal):
        return 4.0 * family.omega_w * gamma_level / math.log(gamma_level)
    raise InvalidParam(f"unsupported family {family!r}")


def concentration_band(family: FadingModel, K: float, p: float, r0: float, alpha: float,
                       beta: float) -> tuple[float, float]:
    """``l_K -/+ h(l_K) log log K``: holds the max of K SNRs w.p. 1 - O(1/log K)."""
    if K < 16:
        raise DomainError("concentration band needs K >= 16")
    l = scaling_point(family, K, p, r0, alpha, beta)
    half = growth_function(family, l, p, r0, alpha, beta) * math.log(math.log(K))
    return l - half, l + half
