"""
Convergence-condition calculus
==============================

Assembles every constant entering the sufficient condition for mean-square
convergence of the recursive projection estimator,

    cond7 = f_m * delta - f_M * sqrt(g(h)) * M2 * M_mat * (M2 + 2 M1) / (1 - h1) > 0,

the rate constant ``eta = 2 gamma cond7`` (``eta > 1`` gives an O(1/k) mean-square
error) and the step-size threshold ``gamma_min = 1 / (2 cond7)``.

The persistent-excitation level ``delta`` of the true regressors has no
constructive formula, so it is measured on a noise-free simulation, as are
empirical regressor-norm bounds that complement the analytic ones.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .arma import g_bound, margin_lemma1_constants, simulate_output
from .config import ExperimentConfig, input_sequence
from .errors import ConditionViolated, DomainError
from .noise import pdf_extrema, trial_rng
from .projection import Box, sup_norm_bound

__all__ = [
    "ConvergenceReport",
    "RegressorBounds",
    "analyze",
    "check_persistent_excitation",
    "condition7",
    "estimate_delta",
    "eta",
    "lagged_matrix",
    "min_step_size",
    "regressor_bounds",
    "regressor_matrix",
    "window_min_eigenvalue",
]

# Stream id reserved for the analysis simulations (trials use 0 and 1).
_ANALYSIS_STREAM = 2


@dataclass(frozen=True)
class ConvergenceReport:
    h: float
    g_h: float
    M_mat: float
    h1: float
    u_max: float
    M1: float
    M2: float
    M1_analytic: float
    M2_analytic: float
    M1_empirical: float
    M2_empirical: float
    B: float
    f_m: float
    f_M: float
    delta1: float
    m: int
    delta: float
    N: int
    cond7: float
    gamma: float
    eta: float
    gamma_min: float | None

    @property
    def density_ratio(self) -> float:
        return self.f_M / self.f_m if self.f_m > 0 else float("inf")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["density_ratio"] = self.density_ratio
        out["condition_holds"] = self.cond7 > 0
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class RegressorBounds:
    M1: float
    M2: float
    M1_analytic: float
    M2_analytic: float
    M1_empirical: float
    M2_empirical: float


def lagged_matrix(x: np.ndarray, lags: int, start: int = 0) -> np.ndarray:
    """Rows ``[x_{t-start}, x_{t-start-1}, ..., x_{t-start-lags+1}]`` for every t; zero before time 1."""
    x = np.asarray(x, dtype=float)
    K = x.size
    padded = np.concatenate([np.zeros(lags + start), x])
    off = lags + start
    cols = [padded[off - j: off - j + K] for j in range(start, start + lags)]
    return np.stack(cols, axis=1) if cols else np.zeros((K, 0))


def regressor_matrix(y: np.ndarray, u: np.ndarray, p: int, q: int) -> np.ndarray:
    """Row k-1 is ``phi_k = [y_{k-1}..y_{k-p}, u_k..u_{k-q+1}]``."""
    return np.hstack([lagged_matrix(y, p, start=1), lagged_matrix(u, q)])


def window_min_eigenvalue(rows: np.ndarray, window: int) -> float:
    """``min_k lambda_min((1/window) sum_{i=k}^{k+window-1} r_i r_i^T)`` over all full windows."""
    rows = np.asarray(rows, dtype=float)
    K, n = rows.shape
    if window < 1 or K < window:
        raise DomainError(f"need at least {window} rows, got {K}")
    outer = rows[:, :, None] * rows[:, None, :]
    csum = np.concatenate([np.zeros((1, n, n)), np.cumsum(outer, axis=0)])
    grams = (csum[window:] - csum[:-window]) / window
    grams = 0.5 * (grams + grams.transpose(0, 2, 1))
    lam = np.linalg.eigvalsh(grams)[:, 0]
    return float(max(lam.min(), 0.0))


def check_persistent_excitation(inputs, m: int, p_plus_q: int) -> float:
    """Excitation level ``delta1`` of an input record.

    Windows of ``m`` consecutive vectors ``U_i = [u_i, ..., u_{i-p-q+1}]`` are formed
    with every ``U_i`` fully inside the record, and the smallest eigenvalue of the
    averaged Gram matrix is minimized over window positions.
    """
    u = np.asarray(inputs, dtype=float)
    if m < 1 or p_plus_q < 1:
        raise DomainError("m and p + q must be positive")
    if m < p_plus_q:
        raise DomainError(f"window m={m} cannot excite {p_plus_q} dimensions")
    if u.size < m + p_plus_q:
        raise DomainError(f"input record of length {u.size} too short for m={m}, p+q={p_plus_q}")
    U = lagged_matrix(u, p_plus_q)[p_plus_q - 1:]
    return window_min_eigenvalue(U, m)


def _analysis_inputs(config: ExperimentConfig, horizon: int | None = None) -> np.ndarray:
    s = config.analysis
    K = s.warmup + (s.horizon if horizon is None else horizon)
    return input_sequence(config.input_spec, K, trial_rng(config.master_seed, 0, _ANALYSIS_STREAM))


def estimate_delta(config: ExperimentConfig, horizon: int | None = None) -> tuple[float, int]:
    """Measured excitation level ``delta`` of the true regressors and its window ``N``.

    The true plant is run noise-free; the first ``warmup`` regressors are discarded.
    """
    N = config.delta_window
    u = _analysis_inputs(config, horizon)
    y = simulate_output(config.true_params, u)
    phi = regressor_matrix(y, u, config.p, config.q)[config.analysis.warmup:]
    return window_min_eigenvalue(phi, N), N


def _sup_b_l1(domain, p: int) -> float:
    if isinstance(domain, Box):
        return float(np.sum(np.maximum(np.abs(domain.lo[p:]), np.abs(domain.hi[p:]))))
    q = domain.dim - p
    return float(np.sum(np.abs(domain.center[p:])) + domain.radius * np.sqrt(q))


def _sweep_points(domain, theta) -> np.ndarray:
    if isinstance(domain, Box):
        pts = domain.vertices()
    else:
        eye = np.eye(domain.dim)
        pts = domain.center + domain.radius * np.vstack([eye, -eye])
    return np.vstack([pts, theta])


def _causal(a: np.ndarray) -> bool:
    return a.size == 0 or np.all(np.abs(np.roots(np.concatenate([[1.0], -a]))) < 1.0)


def regressor_bounds(config: ExperimentConfig, horizon: int | None = None) -> RegressorBounds:
    """Bounds ``M1`` on ``||phi_k||`` (true outputs) and ``M2`` (predicted outputs).

    Analytic: ``|y| <= M_mat u_max ||b||_1 / (1 - h1)`` with margin-uniform power-bound
    constants, using the true ``b`` for M1 and the worst ``b`` over the set for M2.
    Empirical: largest regressor norm on noise-free runs, of the true plant for M1 and
    of the plant frozen at every corner of the set (plus the truth) for M2.
    The reported ``M1``/``M2`` are the smaller of the two.
    """
    p, q = config.p, config.q
    u_max = config.input_spec.bound
    if p == 0:
        M1a = M2a = float(np.sqrt(q) * u_max)
    else:
        M_mat, h1 = margin_lemma1_constants(config.stability_margin, p)
        gain = M_mat * u_max / (1.0 - h1)
        y_max = gain * float(np.sum(np.abs(config.true_params.b)))
        yhat_max = gain * _sup_b_l1(config.domain, p)
        M1a = float(np.sqrt(p * y_max**2 + q * u_max**2))
        M2a = float(np.sqrt(p * yhat_max**2 + q * u_max**2))

    u = _analysis_inputs(config, horizon)
    y = simulate_output(config.true_params, u)
    M1e = float(np.max(np.linalg.norm(regressor_matrix(y, u, p, q), axis=1)))
    M2e = M1e
    for v in _sweep_points(config.domain, config.true_params.theta):
        a, b = v[:p], v[p:]
        if not _causal(a):
            continue
        yv = lfilter(b, np.concatenate([[1.0], -a]), u)
        M2e = max(M2e, float(np.max(np.linalg.norm(regressor_matrix(yv, u, p, q), axis=1))))
    return RegressorBounds(min(M1a, M1e), min(M2a, M2e), M1a, M2a, M1e, M2e)


def condition7(report: ConvergenceReport) -> float:
    """Left-hand side of the sufficient convergence condition (positive means it holds)."""
    r = report
    if r.g_h == 0.0 or r.M_mat == 0.0:
        coupling = 0.0
    else:
        coupling = r.f_M * np.sqrt(r.g_h) * r.M2 * r.M_mat * (r.M2 + 2.0 * r.M1) / (1.0 - r.h1)
    return float(r.f_m * r.delta - coupling)


def eta(gamma: float, report: ConvergenceReport) -> float:
    """Rate constant ``2 gamma cond7``; values above 1 give the O(1/k) regime."""
    if gamma < 0:
        raise DomainError("gamma must be nonnegative")
    return 2.0 * gamma * condition7(report)


def min_step_size(report: ConvergenceReport) -> float:
    """Smallest certified step constant ``1 / (2 cond7)``.

    Raises
    ------
    ConditionViolated
        When the condition does not hold.
    """
    c = condition7(report)
    if not c > 0:
        raise ConditionViolated(c)
    return 1.0 / (2.0 * c)


def analyze(config: ExperimentConfig, gamma: float | None = None, horizon: int | None = None) -> ConvergenceReport:
    """Full convergence report for ``config`` at step constant ``gamma`` (default: the config's)."""
    gamma = config.gamma if gamma is None else gamma
    p, n = config.p, config.true_params.n
    h = config.stability_margin
    g_h = g_bound(h, p)
    M_mat, h1 = margin_lemma1_constants(h, p) if p else (0.0, 0.0)

    m = config.pe_window
    u = _analysis_inputs(config, horizon)[config.analysis.warmup:]
    delta1 = check_persistent_excitation(u, m, n)
    delta, N = estimate_delta(config, horizon)
    bounds = regressor_bounds(config, horizon)

    B = sup_norm_bound(config.domain)
    half = B * max(bounds.M1, bounds.M2)
    C = config.threshold
    f_m, f_M = pdf_extrema(config.noise, C - half, C + half)

    report = ConvergenceReport(
        h=h, g_h=g_h, M_mat=M_mat, h1=h1, u_max=config.input_spec.bound,
        M1=bounds.M1, M2=bounds.M2,
        M1_analytic=bounds.M1_analytic, M2_analytic=bounds.M2_analytic,
        M1_empirical=bounds.M1_empirical, M2_empirical=bounds.M2_empirical,
        B=B, f_m=f_m, f_M=f_M, delta1=delta1, m=m, delta=delta, N=N,
        cond7=0.0, gamma=float(gamma), eta=0.0, gamma_min=None,
    )
    c7 = condition7(report)
    return replace(
        report,
        cond7=c7,
        eta=eta(gamma, report),
        gamma_min=1.0 / (2.0 * c7) if c7 > 0 else None,
    )
