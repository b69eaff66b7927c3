"""Known-distribution measurement noise and the fixed-threshold binary sensor."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DomainError

__all__ = [
    "NoiseModel",
    "BinarySensor",
    "quantize",
    "pdf_extrema",
    "trial_rng",
    "FAMILIES",
]

FAMILIES = ("gaussian", "laplace", "uniform")


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean i.i.d. noise from a closed set of families.

    ``scale`` is the standard deviation for ``gaussian``, the diversity ``b`` for
    ``laplace`` (variance ``2 b**2``) and the half-width for ``uniform``.
    """

    family: str
    scale: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown noise family {self.family!r}; expected one of {FAMILIES}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise DomainError(f"noise scale must be positive and finite, got {self.scale}")
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def gaussian(cls, sigma: float | None = None, *, variance: float | None = None) -> "NoiseModel":
        if (sigma is None) == (variance is None):
            raise DomainError("give exactly one of sigma or variance")
        return cls("gaussian", math.sqrt(variance) if sigma is None else sigma)

    @classmethod
    def laplace(cls, scale: float) -> "NoiseModel":
        return cls("laplace", scale)

    @classmethod
    def uniform(cls, half_width: float) -> "NoiseModel":
        return cls("uniform", half_width)

    @property
    def variance(self) -> float:
        s = self.scale
        return {"gaussian": s * s, "laplace": 2 * s * s, "uniform": s * s / 3}[self.family]

    @property
    def mode(self) -> float:
        return 0.0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.scale
        if self.family == "gaussian":
            return special.ndtr(x / s)
        if self.family == "laplace":
            tail = 0.5 * np.exp(-np.abs(x) / s)
            return np.where(x < 0, tail, 1.0 - tail)
        return np.clip((x + s) / (2 * s), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.scale
        if self.family == "gaussian":
            return np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi))
        if self.family == "laplace":
            return np.exp(-np.abs(x) / s) / (2 * s)
        return np.where(np.abs(x) <= s, 1.0 / (2 * s), 0.0)

    def sample(self, rng: np.random.Generator, size=None):
        s = self.scale
        if self.family == "gaussian":
            return rng.normal(0.0, s, size)
        if self.family == "laplace":
            return rng.laplace(0.0, s, size)
        return rng.uniform(-s, s, size)

    def to_dict(self) -> dict:
        key = {"gaussian": "sigma", "laplace": "scale", "uniform": "half_width"}[self.family]
        return {"family": self.family, key: self.scale}


def quantize(z, threshold: float):
    """Binary sensor output ``1{z <= threshold}``; NaN inputs are rejected."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(np.isnan(z_arr)):
        raise DomainError("cannot quantize NaN")
    out = (z_arr <= threshold).astype(np.int8)
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BinarySensor:
    threshold: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise DomainError("sensor threshold must be finite")

    def __call__(self, z):
        return quantize(z, self.threshold)


def pdf_extrema(noise: NoiseModel, lo: float, hi: float, *, method: str = "auto") -> tuple[float, float]:
    """Minimum and maximum of the noise density on the closed interval ``[lo, hi]``.

    All built-in families are unimodal, so ``method="auto"`` evaluates the density at
    the endpoints and (when inside) the mode. ``method="numeric"`` runs a grid scan
    followed by bounded golden-section/Brent refinement and is kept as a cross-check
    for the closed form.

    Returns
    -------
    (f_m, f_M)
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise DomainError(f"invalid interval [{lo}, {hi}]")
    if method == "auto":
        ends = noise.pdf(np.array([lo, hi]))
        f_m = float(ends.min())
        f_M = float(ends.max())
        if lo <= noise.mode <= hi:
            f_M = max(f_M, float(noise.pdf(noise.mode)))
        return f_m, f_M
    if method == "numeric":
        return _numeric_extrema(noise.pdf, lo, hi)
    raise DomainError(f"unknown method {method!r}")


def _numeric_extrema(f, lo: float, hi: float, grid: int = 513) -> tuple[float, float]:
    if lo == hi:
        v = float(f(lo))
        return v, v
    xs = np.linspace(lo, hi, grid)
    step = xs[1] - xs[0]

    def refined_min(g) -> float:
        vals = g(xs)
        i = int(np.argmin(vals))
        res = optimize.minimize_scalar(
            lambda x: float(g(x)),
            bounds=(max(lo, xs[i] - step), min(hi, xs[i] + step)),
            method="bounded",
            options={"xatol": 1e-9},
        )
        return min(float(vals[i]), float(res.fun))

    f_m = refined_min(f)
    f_M = -refined_min(lambda x: -f(x))
    return f_m, f_M


def trial_rng(master_seed: int, trial_index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one ``(master_seed, trial_index, stream)`` triple.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so trial
    ``i`` sees the same numbers no matter how trials are scheduled.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial_index), int(stream)))
    return np.random.Generator(np.random.PCG64(seq))
