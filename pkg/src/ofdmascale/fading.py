"""Small-scale fading families for the power gain |nu|^2.

Rayleigh:            |nu|^2 ~ Exp(1)
Nakagami-(m, w):     |nu|^2 ~ Gamma(shape m, scale w/m)
Weibull-(lam, t):    |nu|^2 ~ Weibull(scale lam^2, shape t/2)
LogNormal-(a, w):    log|nu|^2 ~ Normal(2a, 4w)
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import ClassVar

import numpy as np
from scipy import special

from .errors import InvalidParam


@dataclass(frozen=True)
class FadingModel:
    family: ClassVar[str] = ""

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        """Survival function 1 - cdf, accurate deep in the tail."""
        return 1.0 - self.cdf(x)

    def moments(self) -> tuple[float, float]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, **asdict(self)}

    @staticmethod
    def from_dict(d: dict) -> "FadingModel":
        d = dict(d)
        fam = d.pop("family").lower()
        try:
            cls = _FAMILIES[fam]
        except KeyError:
            raise InvalidParam(f"unknown fading family {fam!r}") from None
        return cls(**d)


@dataclass(frozen=True)
class Rayleigh(FadingModel):
    family: ClassVar[str] = "rayleigh"

    def sample(self, rng, size):
        return rng.standard_exponential(size)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-np.maximum(x, 0)), 0.0)

    def sf(self, x):
        return np.exp(-np.maximum(np.asarray(x, dtype=float), 0.0))

    def moments(self):
        return 1.0, 1.0


@dataclass(frozen=True)
class Nakagami(FadingModel):
    m: float = 1.0
    w: float = 1.0
    family: ClassVar[str] = "nakagami"

    def __post_init__(self):
        if not self.m >= 0.5:
            raise InvalidParam(f"Nakagami m must be >= 0.5, got {self.m}")
        if not self.w > 0:
            raise InvalidParam(f"Nakagami w must be > 0, got {self.w}")

    def sample(self, rng, size):
        # numpy's standard_gamma is an exact acceptance sampler for any shape > 0
        return rng.standard_gamma(self.m, size) * (self.w / self.m)

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return special.gammainc(self.m, x * self.m / self.w)

    def sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return special.gammaincc(self.m, x * self.m / self.w)

    def moments(self):
        return self.w, self.w / math.sqrt(self.m)


@dataclass(frozen=True)
class Weibull(FadingModel):
    lam: float = 1.0
    t: float = 2.0
    family: ClassVar[str] = "weibull"

    def __post_init__(self):
        if not (self.lam > 0 and self.t > 0):
            raise InvalidParam(f"Weibull needs lam > 0 and t > 0, got {self.lam}, {self.t}")

    @property
    def scale(self) -> float:
        return self.lam ** 2

    @property
    def shape(self) -> float:
        return self.t / 2.0

    def sample(self, rng, size):
        return self.scale * rng.weibull(self.shape, size)

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -np.expm1(-((x / self.scale) ** self.shape))

    def sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return np.exp(-((x / self.scale) ** self.shape))

    def moments(self):
        k, s = self.shape, self.scale
        g1 = math.gamma(1 + 1 / k)
        g2 = math.gamma(1 + 2 / k)
        return s * g1, s * math.sqrt(g2 - g1 * g1)


@dataclass(frozen=True)
class LogNormal(FadingModel):
    a: float = 0.0
    omega_w: float = 0.25
    family: ClassVar[str] = "lognormal"

    def __post_init__(self):
        if not self.omega_w > 0:
            raise InvalidParam(f"LogNormal scale must be > 0, got {self.omega_w}")

    @property
    def log_mean(self) -> float:
        return 2.0 * self.a

    @property
    def log_var(self) -> float:
        return 4.0 * self.omega_w

    def sample(self, rng, size):
        return np.exp(rng.normal(self.log_mean, math.sqrt(self.log_var), size))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(x, 0.0)) - self.log_mean) / math.sqrt(2.0 * self.log_var)
        return 0.5 * special.erfc(-z)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(x, 0.0)) - self.log_mean) / math.sqrt(2.0 * self.log_var)
        return 0.5 * special.erfc(z)

    def moments(self):
        mu, s2 = self.log_mean, self.log_var
        mean = math.exp(mu + s2 / 2)
        var = math.expm1(s2) * math.exp(2 * mu + s2)
        return mean, math.sqrt(var)


_FAMILIES = {c.family: c for c in (Rayleigh, Nakagami, Weibull, LogNormal)}


def sample_power_gain(model: FadingModel, count, seed) -> np.ndarray:
    """I.i.d. draws of |nu|^2. ``count`` may be an int or a shape tuple."""
    if np.prod(count) < 1:
        raise InvalidParam("count must be >= 1")
    return model.sample(np.random.default_rng(seed), count)


def power_gain_moments(model: FadingModel) -> tuple[float, float]:
    """(mean, standard deviation) of |nu|^2."""
    return model.moments()


def power_gain_cdf(model: FadingModel, x):
    out = model.cdf(x)
    return float(out) if np.ndim(out) == 0 else out
