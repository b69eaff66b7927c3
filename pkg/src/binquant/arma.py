"""
ARMA plant model
================

Parameter containers, companion-matrix stability tools and the true plant

    y_k = a_1 y_{k-1} + ... + a_p y_{k-p} + b_1 u_k + ... + b_q u_{k-q+1}
    z_k = y_k + d_k
    s_k = 1{z_k <= C}

The symbol ``M`` is overloaded in the literature: here ``u_max`` always denotes
the input amplitude bound and ``M_mat`` the transient constant in
``||A^k|| <= M_mat * h1**k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import DegenerateFir, DomainError, NumericalError, UnstableSystem

__all__ = [
    "ArmaParams",
    "ArmaPlant",
    "companion_matrix",
    "spectral_radius",
    "g_bound",
    "lemma1_constants",
    "margin_lemma1_constants",
    "plant_step",
    "simulate_output",
]


def _vector(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class ArmaParams:
    """True ARMA coefficients ``theta = [a_1..a_p, b_1..b_q]``.

    ``a`` may be empty, which selects the FIR mode (no autoregression).
    Construction rejects non-causal models (companion spectral radius >= 1).
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _vector(self.a, "a") if np.size(self.a) else np.zeros(0)
        b = _vector(self.b, "b")
        if b.size < 1:
            raise DomainError("b needs at least one coefficient (q >= 1)")
        if a.size and a[-1] == 0.0:
            raise DomainError("leading AR coefficient a_p must be nonzero; drop it to lower p")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.size and spectral_radius(companion_matrix(a)) >= 1.0:
            raise UnstableSystem("companion matrix spectral radius >= 1 (non-causal model)")

    @property
    def p(self) -> int:
        return int(self.a.size)

    @property
    def q(self) -> int:
        return int(self.b.size)

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.a, self.b])

    @property
    def is_fir(self) -> bool:
        return self.p == 0

    @classmethod
    def from_theta(cls, theta, p: int) -> "ArmaParams":
        theta = _vector(theta, "theta")
        return cls(a=theta[:p], b=theta[p:])

    def rho(self) -> float:
        """Spectral radius of the companion matrix (0 for FIR models)."""
        if self.is_fir:
            return 0.0
        return spectral_radius(companion_matrix(self.a))

    def check_margin(self, h: float) -> None:
        """Raise :class:`UnstableSystem` unless the spectral radius is below ``h``."""
        rho = self.rho()
        if not rho < h:
            raise UnstableSystem(f"spectral radius {rho:.6g} is not below the margin h={h}")


def companion_matrix(params) -> np.ndarray:
    """p-by-p companion matrix with first row ``a`` and ones on the subdiagonal.

    Accepts an :class:`ArmaParams` or a bare AR coefficient vector.
    """
    a = params.a if isinstance(params, ArmaParams) else np.atleast_1d(np.asarray(params, float))
    p = a.size
    if p == 0:
        raise DegenerateFir("FIR model (p = 0) has no companion matrix")
    A = np.zeros((p, p))
    A[0] = a
    A[np.arange(1, p), np.arange(p - 1)] = 1.0
    return A


def spectral_radius(A: np.ndarray) -> float:
    """Largest eigenvalue modulus of ``A``."""
    A = np.asarray(A, dtype=float)
    try:
        eig = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue solver did not converge: {exc}") from exc
    return float(np.max(np.abs(eig)))


def g_bound(h: float, p: int) -> float:
    """Bound on ``sum(a_i**2)`` for AR polynomials whose roots all have modulus below ``h``.

    Each ``|a_i|`` is an elementary symmetric function of the eigenvalues, hence at
    most ``C(p, i) h**i``; squaring and summing gives the bound.
    """
    if not 0.0 < h < 1.0:
        raise DomainError(f"stability margin h must lie in (0, 1), got {h}")
    if p < 0:
        raise DomainError("p must be nonnegative")
    return float(sum(math.comb(p, i) ** 2 * h ** (2 * i) for i in range(1, p + 1)))


def _lemma1_pair(p: int, rho: float, norm: float, epsilon: float) -> tuple[float, float]:
    M_mat = math.sqrt(p) * (1.0 + 2.0 / epsilon) ** (p - 1)
    return M_mat, rho + epsilon * norm


def lemma1_constants(A: np.ndarray, epsilon: float | None = None) -> tuple[float, float]:
    """Constants ``(M_mat, h1)`` with ``||A^k|| <= M_mat * h1**k`` for all k >= 0.

    Uses ``M_mat = sqrt(p) (1 + 2/eps)**(p-1)`` and ``h1 = rho(A) + eps ||A||``. The
    default ``eps = (1 - rho) / (2 ||A||)`` gives ``h1 = (1 + rho) / 2``.

    Raises
    ------
    UnstableSystem
        If ``rho(A) >= 1``.
    """
    A = np.asarray(A, dtype=float)
    p = A.shape[0]
    rho = spectral_radius(A)
    if rho >= 1.0:
        raise UnstableSystem(f"spectral radius {rho:.6g} >= 1")
    norm = float(np.linalg.norm(A, 2))
    if epsilon is None:
        epsilon = (1.0 - rho) / (2.0 * norm)
    if epsilon <= 0.0:
        raise DomainError("epsilon must be positive")
    return _lemma1_pair(p, rho, norm, epsilon)


def margin_lemma1_constants(h: float, p: int) -> tuple[float, float]:
    """Power-bound constants valid uniformly for every companion matrix with ``rho < h``.

    Only ``h`` and ``p`` are needed: ``rho < h`` and ``||A|| <= sqrt(1 + g(h))``, so
    ``eps = (1 - h) / (2 sqrt(1 + g(h)))`` yields ``h1 = (1 + h) / 2`` for all of them.
    """
    if p == 0:
        raise DegenerateFir("FIR model (p = 0) has no companion matrix")
    norm_bound = math.sqrt(1.0 + g_bound(h, p))
    epsilon = (1.0 - h) / (2.0 * norm_bound)
    return _lemma1_pair(p, h, norm_bound, epsilon)


@dataclass
class ArmaPlant:
    """Mutable plant state: last ``p`` outputs and last ``q - 1`` inputs.

    Every array carries an optional leading batch axis so that several independent
    trials advance in lockstep; ``batch=None`` gives scalar outputs.
    """

    params: ArmaParams
    batch: int | None = None
    y_hist: np.ndarray = field(init=False)
    u_hist: np.ndarray = field(init=False)
    k: int = field(init=False, default=0)

    def __post_init__(self):
        lead = () if self.batch is None else (self.batch,)
        self.y_hist = np.zeros(lead + (self.params.p,))
        self.u_hist = np.zeros(lead + (self.params.q - 1,))

    def regressor(self, u_k) -> np.ndarray:
        u_k = np.asarray(u_k, dtype=float)
        return np.concatenate([self.y_hist, u_k[..., None], self.u_hist], axis=-1)

    def step(self, u_k, d_k, threshold: float):
        """Advance one step; returns ``(y_k, z_k, s_k)``."""
        phi = self.regressor(u_k)
        y = _dot(phi, self.params.theta)
        z = y + d_k
        s = (z <= threshold).astype(np.int8) if np.ndim(z) else int(z <= threshold)
        _push(self.y_hist, y)
        _push(self.u_hist, u_k)
        self.k += 1
        return y, z, s


def plant_step(state: ArmaPlant, u_k: float, d_k: float, threshold: float):
    """Functional alias for :meth:`ArmaPlant.step`."""
    return state.step(u_k, d_k, threshold)


def simulate_output(params: ArmaParams, u) -> np.ndarray:
    """Noise-free output ``y_1..y_K`` for inputs ``u_1..u_K`` from zero initial state.

    ``u`` may carry leading batch axes; time runs along the last axis.
    """
    den = np.concatenate([[1.0], -params.a])
    return lfilter(params.b, den, np.asarray(u, dtype=float), axis=-1)


def _dot(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    # Fixed left-to-right accumulation keeps batched and single-trial runs bit-identical.
    acc = x[..., 0] * w[..., 0]
    for j in range(1, x.shape[-1]):
        acc = acc + x[..., j] * w[..., j]
    return acc


def _push(hist: np.ndarray, value) -> None:
    if hist.shape[-1] == 0:
        return
    hist[..., 1:] = hist[..., :-1]
    hist[..., 0] = value
