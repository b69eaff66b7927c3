"""
Numerical laboratory for perturbed linear recursions
====================================================

Simulates

    r_k = (1 - eta1/k) r_{k-1} + (eta2/k) sum_{i=2}^{k} h1**(i-1) r_{k-i} + c/k**2

and fits its decay exponent. The asymptotics are governed by the effective rate
``eta = eta1 - eta2 h1 / (1 - h1)``: no decay when ``eta <= 0``, ``k**-eta`` when
``0 < eta < 1`` and ``1/k`` when ``eta > 1``.

Also checks that a positive sequence and its N-term forward window average share
their ``O(n**-t)`` behaviour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "RecursionSpec",
    "AveragingVerdict",
    "iterate",
    "fit_rate",
    "loglog_slope",
    "characteristic_residual",
    "averaging_equivalence",
    "window_average",
    "is_bounded",
]


@dataclass(frozen=True)
class RecursionSpec:
    eta1: float
    eta2: float = 0.0
    h1: float = 0.5
    r0: float = 1.0
    horizon: int = 100_000
    c: float = 1.0

    def __post_init__(self):
        if not self.eta1 > 0:
            raise DomainError("eta1 must be positive")
        if self.eta2 < 0:
            raise DomainError("eta2 must be nonnegative")
        if not 0.0 < self.h1 < 1.0:
            raise DomainError("h1 must lie in (0, 1)")
        if not self.r0 > 0:
            raise DomainError("r0 must be positive")
        if self.c < 0:
            raise DomainError("forcing scale c must be nonnegative")
        if self.horizon <= self.start:
            raise DomainError(f"horizon must exceed the start index {self.start}")

    @property
    def eta(self) -> float:
        return self.eta1 - self.eta2 * self.h1 / (1.0 - self.h1)

    @property
    def start(self) -> int:
        """First index where ``1 - eta1/k`` stays positive for all later k."""
        return math.ceil(self.eta1) + 1


def iterate(spec: RecursionSpec) -> np.ndarray:
    """Return ``r`` with ``r[k] = r_k`` for ``k = 0..K``.

    Entries up to ``spec.start`` are held at ``r0``; the recursion runs from there.
    The convolution sum is carried incrementally via ``S_{k+1} = h1 (S_k + r_{k-1})``,
    so the cost is linear in K.
    """
    K, k0, h1 = spec.horizon, spec.start, spec.h1
    eta1, eta2, c = spec.eta1, spec.eta2, spec.c
    r = np.empty(K + 1)
    r[: k0 + 1] = spec.r0
    k = k0 + 1
    S = sum(h1 ** (i - 1) * r[k - i] for i in range(2, k + 1))
    vals = r.tolist()
    for k in range(k0 + 1, K + 1):
        nxt = (1.0 - eta1 / k) * vals[k - 1] + eta2 / k * S + c / (k * k)
        vals[k] = nxt if nxt > 0.0 else 0.0
        S = h1 * (S + vals[k - 1])
    return np.asarray(vals)


def loglog_slope(values, k, window: tuple[float, float], points: int | None = 200) -> float:
    """Least-squares slope of ``log(values)`` versus ``log(k)`` inside ``window``.

    With ``points`` set, only the samples nearest a log-spaced grid are used so that
    each decade carries equal weight.
    """
    values = np.asarray(values, dtype=float)
    k = np.asarray(k, dtype=float)
    lo, hi = window
    idx = np.flatnonzero((k >= lo) & (k <= hi))
    if idx.size < 2:
        raise DomainError(f"fewer than two samples in window {window}")
    if points is not None and idx.size > points:
        grid = np.geomspace(k[idx[0]], k[idx[-1]], points)
        idx = np.unique(idx[np.searchsorted(k[idx], grid).clip(0, idx.size - 1)])
    v = values[idx]
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise DomainError("values must be positive and finite on the fit window")
    slope, _ = np.polyfit(np.log(k[idx]), np.log(v), 1)
    return float(slope)


def fit_rate(seq, window: tuple[int, int] | None = None) -> float:
    """Decay exponent of ``seq`` (indexed by k, ``seq[k] = r_k``); default window is the last decade."""
    seq = np.asarray(seq, dtype=float)
    K = seq.size - 1
    if window is None:
        window = (max(1, K // 10), K)
    return loglog_slope(seq, np.arange(seq.size), window)


def characteristic_residual(r: np.ndarray, eta: float) -> np.ndarray:
    """``z_k = r_k - (1 - eta/k) r_{k-1}``; the first entry is NaN."""
    k = np.arange(r.size, dtype=float)
    z = np.full(r.size, np.nan)
    z[1:] = r[1:] - (1.0 - eta / k[1:]) * r[:-1]
    return z


@dataclass(frozen=True)
class AveragingVerdict:
    """Outcome of the sequence/window-average rate comparison.

    ``forward``: ``n**t x_n`` stays bounded, which bounds the window average.
    ``backward``: ``n**t avg_n`` stays bounded, which bounds ``x_n <= N avg_n``.
    The ``*_bound_ok`` flags confirm the two inequalities linking the sups.
    """

    forward: bool
    backward: bool
    sup_x: float
    sup_avg: float
    forward_bound_ok: bool
    backward_bound_ok: bool


def window_average(x, N: int) -> np.ndarray:
    """``(x_n + ... + x_{n+N-1}) / N`` for every full window."""
    x = np.asarray(x, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(x)])
    return (c[N:] - c[:-N]) / N


def is_bounded(a: np.ndarray, rtol: float = 0.05) -> bool:
    """Finite-horizon boundedness: the second half never exceeds the first-half max by more than ``rtol``."""
    a = np.asarray(a, dtype=float)
    half = a.size // 2
    if half == 0:
        return bool(np.all(np.isfinite(a)))
    return bool(np.max(a[half:]) <= (1.0 + rtol) * np.max(a[:half]))


def averaging_equivalence(seq, N: int, t: float, rtol: float = 0.05) -> AveragingVerdict:
    """Compare the ``O(n**-t)`` status of ``seq`` (``seq[0] = x_1``) and its N-window average."""
    x = np.asarray(seq, dtype=float)
    if N < 1:
        raise DomainError("N must be a positive integer")
    if t <= 0:
        raise DomainError("t must be positive")
    if x.size < 2 * N or np.any(x <= 0):
        raise DomainError("need a positive sequence of length >= 2N")
    n = np.arange(1, x.size + 1, dtype=float)
    avg = window_average(x, N)
    sx = n**t * x
    sa = n[: avg.size] ** t * avg
    sup_x, sup_avg = float(sx.max()), float(sa.max())
    slack = 1.0 + 1e-12
    return AveragingVerdict(
        forward=is_bounded(sx, rtol),
        backward=is_bounded(sa, rtol),
        sup_x=sup_x,
        sup_avg=sup_avg,
        forward_bound_ok=sup_avg <= sup_x * slack,
        backward_bound_ok=float(sx[: avg.size].max()) <= N * sup_avg * slack,
    )
