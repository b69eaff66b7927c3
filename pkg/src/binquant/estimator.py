"""Recursive projection estimator coupled with an output predictor.

At step k the estimator only sees the input ``u_k`` and the bit ``s_k``. The true
outputs never reach it, so the regressor is built from its own predictions::

    phi_k     = [yhat_{k-1}, ..., yhat_{k-p}, u_k, ..., u_{k-q+1}]
    theta_k   = Proj(theta_{k-1} + gamma/k * phi_k * (F(C - phi_k' theta_{k-1}) - s_k))
    yhat_k    = phi_k' theta_k            (timing="current", default)
    yhat_k    = phi_k' theta_{k-1}        (timing="lagged")
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arma import _dot, _push
from .errors import DomainError, StateError
from .noise import NoiseModel
from .projection import ConvexSet, project

__all__ = ["RecursiveProjectionEstimator", "TIMINGS"]

TIMINGS = ("current", "lagged")


@dataclass
class RecursiveProjectionEstimator:
    """Online estimate of ``theta = [a_1..a_p, b_1..b_q]`` from binary observations.

    Parameters
    ----------
    theta0 : array_like, shape (p + q,)
        Initial estimate; projected onto ``domain`` if it lies outside.
    p : int
        AR order (0 gives the FIR algorithm).
    domain : Box or Ball
        Convex compact set the estimate is confined to.
    gamma : float
        Step-size constant; the k-th step uses ``gamma / k``.
    noise : NoiseModel
        Known noise law; only its CDF is used.
    threshold : float
        Sensor threshold ``C``.
    timing : {"current", "lagged"}
        Which estimate the output prediction uses (see module docstring).
    batch : int, optional
        Number of independent trials advanced together. State arrays then carry a
        leading axis of this length and ``update`` takes arrays of inputs and bits.
    """

    theta0: np.ndarray
    p: int
    domain: ConvexSet
    gamma: float
    noise: NoiseModel
    threshold: float = 0.0
    timing: str = "current"
    batch: int | None = None

    theta_hat: np.ndarray = field(init=False)
    yhat_hist: np.ndarray = field(init=False)
    u_hist: np.ndarray = field(init=False)
    k: int = field(init=False, default=0)

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"step-size constant gamma must be positive, got {self.gamma}")
        if self.timing not in TIMINGS:
            raise DomainError(f"timing must be one of {TIMINGS}")
        theta0 = np.asarray(self.theta0, dtype=float)
        if theta0.shape != (self.domain.dim,):
            raise DomainError(f"theta0 must have length {self.domain.dim}")
        if not 0 <= self.p < self.domain.dim:
            raise DomainError("need 0 <= p < p + q")
        q = self.domain.dim - self.p
        lead = () if self.batch is None else (self.batch,)
        self.theta_hat = np.broadcast_to(project(theta0, self.domain), lead + theta0.shape).copy()
        self.yhat_hist = np.zeros(lead + (self.p,))
        self.u_hist = np.zeros(lead + (q - 1,))

    @property
    def q(self) -> int:
        return self.domain.dim - self.p

    def regressor(self, u_k) -> np.ndarray:
        """Estimated regressor ``phi_k``: newest prediction first, then current input first."""
        u_k = np.asarray(u_k, dtype=float)
        return np.concatenate([self.yhat_hist, u_k[..., None], self.u_hist], axis=-1)

    def update(self, u_k, s_k) -> np.ndarray:
        """Consume ``(u_k, s_k)`` and return the new estimate."""
        phi = self.regressor(u_k)
        prior = self.theta_hat
        pred = _dot(phi, prior)
        innovation = self.noise.cdf(self.threshold - pred) - s_k
        self.k += 1
        step = (self.gamma / self.k) * innovation
        self.theta_hat = self.domain.project(prior + phi * np.asarray(step)[..., None])
        yhat = pred if self.timing == "lagged" else _dot(phi, self.theta_hat)
        self._last_yhat = yhat
        _push(self.yhat_hist, yhat)
        _push(self.u_hist, u_k)
        return self.theta_hat

    def predict_output(self):
        """Most recent output prediction ``yhat_k``."""
        if self.k == 0:
            raise StateError("no prediction before the first update")
        return self._last_yhat

    def copy(self) -> "RecursiveProjectionEstimator":
        new = object.__new__(type(self))
        new.__dict__.update({key: (v.copy() if isinstance(v, np.ndarray) else v)
                             for key, v in self.__dict__.items()})
        return new
