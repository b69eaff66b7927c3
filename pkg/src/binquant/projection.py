"""Convex compact parameter domains and Euclidean projection onto them.

Only boxes and balls are supported; both have exact closed-form projections.
Functions accept a leading batch axis on ``x``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.stats import qmc

from .arma import companion_matrix, spectral_radius
from .errors import DomainError

__all__ = [
    "Box",
    "Ball",
    "ConvexSet",
    "StabilityReport",
    "project",
    "sup_norm_bound",
    "verify_stability_subset",
    "convex_set_from_dict",
]

# Relative slack that keeps ball projection exactly idempotent under rounding.
_BALL_RTOL = 1e-12


def _vec(values, name):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be a finite vector")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lo, "lo"), _vec(self.hi, "hi")
        if lo.shape != hi.shape:
            raise DomainError("box bounds differ in length")
        if np.any(lo > hi):
            raise DomainError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def project(self, x):
        return np.clip(x, self.lo, self.hi)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def vertices(self) -> np.ndarray:
        """All 2**n corners, one per row."""
        return np.array(list(itertools.product(*zip(self.lo, self.hi))), dtype=float)

    def sup_norm(self) -> float:
        # The norm is convex, so its maximum over the box sits at a corner; picking
        # the larger-magnitude bound per coordinate finds that corner directly.
        corner = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return float(np.linalg.norm(corner))

    def shrink(self, margin: float) -> "Box":
        """Closed box strictly inside an open one; ``margin`` is taken off every side."""
        if margin < 0:
            raise DomainError("margin must be nonnegative")
        return Box(self.lo + margin, self.hi - margin)

    def to_dict(self) -> dict:
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, "center"))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise DomainError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.size

    def project(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.center
        nrm = np.linalg.norm(d, axis=-1, keepdims=True)
        outside = nrm > self.radius * (1.0 + _BALL_RTOL)
        scale = np.where(outside, self.radius / np.where(outside, nrm, 1.0), 1.0)
        return np.where(outside, self.center + d * scale, x)

    def contains(self, x, tol: float = 0.0) -> bool:
        d = np.linalg.norm(np.asarray(x) - self.center, axis=-1)
        return bool(np.all(d <= self.radius * (1.0 + _BALL_RTOL) + tol))

    def sup_norm(self) -> float:
        return float(np.linalg.norm(self.center) + self.radius)

    def shrink(self, margin: float) -> "Ball":
        if margin < 0 or margin >= self.radius:
            raise DomainError("margin must lie in [0, radius)")
        return Ball(self.center, self.radius - margin)

    def to_dict(self) -> dict:
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


ConvexSet = Union[Box, Ball]


def project(x, domain: ConvexSet):
    """Euclidean projection of ``x`` (shape ``(..., n)``) onto ``domain``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (domain.dim,):
        raise DomainError(f"expected vectors of length {domain.dim}, got shape {x.shape}")
    return domain.project(x)


def sup_norm_bound(domain: ConvexSet) -> float:
    """``B = sup over the set of ||v||``."""
    return domain.sup_norm()


@dataclass(frozen=True)
class StabilityReport:
    ok: bool
    worst_rho: float
    witness: np.ndarray
    exact: bool


def _rho_of(a: np.ndarray) -> float:
    if a.size == 0 or not np.any(a):
        return 0.0
    return spectral_radius(companion_matrix(a))


def verify_stability_subset(
    domain: ConvexSet, p: int, h: float, samples: int = 1024, seed: int = 0
) -> StabilityReport:
    """Check that every member's AR part has companion spectral radius below ``h``.

    Boxes are checked at all corners plus ``samples`` scrambled-Sobol interior points;
    balls at axis extremes, random boundary points and interior points. For ``p <= 1``
    the spectral radius is ``|a_1|`` (convex), so the box corner check is exact; the
    verdict is otherwise advisory.
    """
    if not 0.0 < h < 1.0:
        raise DomainError("h must lie in (0, 1)")
    n = domain.dim
    if p == 0:
        return StabilityReport(True, 0.0, np.zeros(n), True)
    rng = np.random.default_rng(seed)
    if isinstance(domain, Box):
        pts = [domain.vertices()]
        if samples:
            sob = qmc.Sobol(n, scramble=True, seed=rng).random(samples)
            pts.append(domain.lo + sob * (domain.hi - domain.lo))
    else:
        eye = np.eye(n)
        pts = [domain.center + domain.radius * np.vstack([eye, -eye])]
        if samples:
            g = rng.standard_normal((samples, n))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            radii = rng.uniform(size=(samples, 1)) ** (1.0 / n)
            pts += [domain.center + domain.radius * g, domain.center + domain.radius * radii * g]
    pts = np.vstack(pts)
    rhos = np.array([_rho_of(v[:p]) for v in pts])
    i = int(np.argmax(rhos))
    worst = float(rhos[i])
    exact = p == 1 and isinstance(domain, Box)
    return StabilityReport(worst < h and worst < 1.0, worst, pts[i].copy(), exact)


def convex_set_from_dict(spec: dict) -> ConvexSet:
    """Build a set from ``{"type": "box", "lo": .., "hi": ..}`` or ``{"type": "ball", ..}``.

    An optional ``"shrink"`` entry realizes strict (open) bounds as a closed set.
    """
    kind = spec.get("type")
    if kind == "box":
        dom = Box(spec["lo"], spec["hi"])
    elif kind == "ball":
        dom = Ball(spec["center"], spec["radius"])
    else:
        raise DomainError(f"unknown set type {kind!r}")
    margin = float(spec.get("shrink", 0.0))
    return dom.shrink(margin) if margin else dom
