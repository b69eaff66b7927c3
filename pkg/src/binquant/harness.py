"""Monte Carlo harness: lockstep plant/estimator simulation, aggregation and export."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arma import ArmaPlant, _dot
from .config import ExperimentConfig, input_sequence
from .errors import DomainError
from .estimator import RecursiveProjectionEstimator
from .noise import trial_rng

log = logging.getLogger(__name__)

__all__ = [
    "TrialResult",
    "MonteCarloResult",
    "run_trial",
    "run_monte_carlo",
    "fit_mse_slope",
    "export",
    "worker_count",
]

NOISE_STREAM, INPUT_STREAM = 0, 1


@dataclass
class TrialResult:
    """Decimated diagnostics of one trial; ``k`` holds the sampled step indices."""

    seed: tuple[int, int]
    k: np.ndarray
    e_sq: np.ndarray
    v_sq: np.ndarray
    theta_traj: np.ndarray
    s_freq: float


@dataclass
class MonteCarloResult:
    """Trial averages at full resolution plus the decimated per-trial records."""

    mean_e_sq: np.ndarray
    mean_v_sq: np.ndarray
    mean_theta: np.ndarray
    per_trial: list[TrialResult]
    step: int
    name: str = "experiment"

    @property
    def horizon(self) -> int:
        return self.mean_e_sq.size

    @property
    def k(self) -> np.ndarray:
        """Decimated step indices (``step, 2*step, ...``)."""
        return np.arange(self.step, self.horizon + 1, self.step)

    def at(self, k: int) -> float:
        """Trial-mean squared parameter error after step ``k``."""
        return float(self.mean_e_sq[k - 1])

    @property
    def final_theta(self) -> np.ndarray:
        return self.mean_theta[-1]


def _trial_streams(config: ExperimentConfig, idx: int):
    noise_rng = trial_rng(config.master_seed, idx, NOISE_STREAM)
    input_rng = trial_rng(config.master_seed, idx, INPUT_STREAM)
    d = config.noise.sample(noise_rng, config.horizon)
    u = input_sequence(config.input_spec, config.horizon, input_rng)
    return d, u


def _simulate(config: ExperimentConfig, indices: list[int]):
    """Advance all trials in ``indices`` together; each keeps its own random streams."""
    T, K, step = len(indices), config.horizon, config.step
    streams = [_trial_streams(config, i) for i in indices]
    d = np.stack([s[0] for s in streams])
    u = np.stack([s[1] for s in streams])
    theta = config.true_params.theta
    C = config.threshold

    plant = ArmaPlant(config.true_params, batch=T)
    est = RecursiveProjectionEstimator(
        np.asarray(config.theta0, float), config.p, config.domain, config.gamma,
        config.noise, C, config.predictor_timing, batch=T,
    )
    e_sq = np.empty((T, K))
    v_sq = np.empty((T, K))
    traj = np.empty((T, K // step, theta.size))
    hits = np.zeros(T)
    for j in range(K):
        y, _, s = plant.step(u[:, j], d[:, j], C)
        th = est.update(u[:, j], s)
        err = th - theta
        e_sq[:, j] = _dot(err, err)
        v_sq[:, j] = (est.predict_output() - y) ** 2
        hits += s
        if (j + 1) % step == 0:
            traj[:, (j + 1) // step - 1] = th
    ks = np.arange(step, K + 1, step)
    results = [
        TrialResult(
            seed=(config.master_seed, idx), k=ks,
            e_sq=e_sq[t, step - 1::step].copy(), v_sq=v_sq[t, step - 1::step].copy(),
            theta_traj=traj[t], s_freq=float(hits[t] / K),
        )
        for t, idx in enumerate(indices)
    ]
    return results, e_sq, v_sq


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialResult:
    """One trial, deterministic in ``(config, trial_index)``."""
    return _simulate(config, [trial_index])[0][0]


def worker_count(trials: int) -> int:
    """Worker processes to use; ``BINQUANT_THREADS`` overrides the default of 1."""
    raw = os.environ.get("BINQUANT_THREADS")
    n = int(raw) if raw else 1
    return max(1, min(n, trials))


def run_monte_carlo(config: ExperimentConfig, workers: int | None = None) -> MonteCarloResult:
    """Run ``config.trials`` trials and average them.

    Trials are split into contiguous chunks, one per worker; within a chunk they
    advance together in vectorized lockstep. Every trial draws from its own streams,
    and averages are taken over trials in index order, so the output does not depend
    on the number of workers.
    """
    indices = list(range(config.trials))
    workers = worker_count(config.trials) if workers is None else max(1, min(workers, config.trials))
    chunks = [c.tolist() for c in np.array_split(indices, workers)]
    if workers == 1:
        parts = [_simulate(config, chunks[0])]
    else:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_simulate, [config] * workers, chunks))
    per_trial = [r for part in parts for r in part[0]]
    e_sq = np.concatenate([part[1] for part in parts])
    v_sq = np.concatenate([part[2] for part in parts])
    theta = np.stack([r.theta_traj for r in per_trial])
    return MonteCarloResult(
        mean_e_sq=e_sq.mean(axis=0),
        mean_v_sq=v_sq.mean(axis=0),
        mean_theta=theta.mean(axis=0),
        per_trial=per_trial,
        step=config.step,
        name=config.name,
    )


def fit_mse_slope(series, window: tuple[int, int], k=None, points: int | None = 200) -> float:
    """Least-squares slope of ``log(series)`` against ``log(k)`` on ``window``.

    ``series[i]`` belongs to step ``k[i]`` (default ``k = 1..len(series)``). With
    ``points`` set, the fit uses the samples nearest to a log-spaced grid so that
    every decade carries equal weight.
    """
    series = np.asarray(series, dtype=float)
    k = np.arange(1, series.size + 1) if k is None else np.asarray(k, dtype=float)
    lo, hi = window
    mask = (k >= lo) & (k <= hi)
    idx = np.flatnonzero(mask)
    if idx.size < 2:
        raise DomainError(f"fewer than two samples in window {window}")
    if points is not None and idx.size > points:
        grid = np.geomspace(k[idx[0]], k[idx[-1]], points)
        idx = np.unique(idx[np.searchsorted(k[idx], grid).clip(0, idx.size - 1)])
    vals = series[idx]
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise DomainError("series must be positive and finite on the fit window")
    slope, _ = np.polyfit(np.log(k[idx]), np.log(vals), 1)
    return float(slope)


def _fmt(x: float) -> str:
    return repr(float(x))


def export(result: MonteCarloResult | None, fmt: str, path, report=None, config=None) -> Path:
    """Write the decimated aggregate as CSV or JSON; output bytes depend only on the inputs."""
    path = Path(path)
    if fmt not in ("csv", "json"):
        raise DomainError(f"unknown export format {fmt!r}")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        n = 0 if result is None else result.mean_theta.shape[-1]
        writer.writerow(["k", "mean_e_sq", "mean_v_sq"] + [f"theta_hat_{i + 1}" for i in range(n)])
        if result is not None:
            for row, k in enumerate(result.k):
                writer.writerow(
                    [str(int(k)), _fmt(result.mean_e_sq[k - 1]), _fmt(result.mean_v_sq[k - 1])]
                    + [_fmt(v) for v in result.mean_theta[row]]
                )
        text = buf.getvalue()
    else:
        doc = {"name": None if result is None else result.name}
        if config is not None:
            doc["config"] = config.to_dict()
        if result is not None:
            ks = result.k
            doc.update(
                step=result.step,
                k=ks.tolist(),
                mean_e_sq=result.mean_e_sq[ks - 1].tolist(),
                mean_v_sq=result.mean_v_sq[ks - 1].tolist(),
                mean_theta=result.mean_theta.tolist(),
                trials=[
                    {"seed": list(r.seed), "s_freq": r.s_freq, "final_theta": r.theta_traj[-1].tolist(),
                     "final_e_sq": float(r.e_sq[-1])}
                    for r in result.per_trial
                ],
            )
        if report is not None:
            doc["report"] = report.to_dict()
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path
