"""Experiment configuration: JSON ingestion, validation and input generators."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .arma import ArmaParams
from .errors import BinQuantError, ConfigError, DomainError, UnstableSystem
from .estimator import TIMINGS
from .noise import BinarySensor, NoiseModel
from .projection import ConvexSet, convex_set_from_dict, verify_stability_subset

log = logging.getLogger(__name__)

__all__ = [
    "InputSpec",
    "AnalysisSettings",
    "ExperimentConfig",
    "generate_input",
    "input_sequence",
    "load_config",
    "config_from_dict",
    "bundled_configs",
]

INPUT_KINDS = {
    "alternating": ("base", "jitter"),
    "constant_alternating": ("level",),
    "prbs": ("amplitude",),
    "iid_uniform": ("lo", "hi"),
}


@dataclass(frozen=True)
class InputSpec:
    """Input signal generator.

    ``alternating``           base + jitter * w_k on odd k (w_k ~ U[0, 1]), 0 on even k
    ``constant_alternating``  level on odd k, 0 on even k
    ``prbs``                  random binary sequence of +-amplitude
    ``iid_uniform``           i.i.d. U[lo, hi]
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in INPUT_KINDS:
            raise DomainError(f"unknown input kind {self.kind!r}")
        missing = [k for k in INPUT_KINDS[self.kind] if k not in self.params]
        if missing:
            raise DomainError(f"input kind {self.kind!r} needs {missing}")

    @property
    def bound(self) -> float:
        """Amplitude bound ``u_max`` with ``|u_k| <= u_max`` for every k."""
        P = self.params
        if self.kind == "alternating":
            return max(abs(P["base"]), abs(P["base"] + P["jitter"]))
        if self.kind == "constant_alternating":
            return abs(P["level"])
        if self.kind == "prbs":
            return abs(P["amplitude"])
        return max(abs(P["lo"]), abs(P["hi"]))

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def generate_input(spec: InputSpec, k: int, rng: np.random.Generator) -> float:
    """Single input value ``u_k`` (k >= 1)."""
    if k < 1:
        raise DomainError("input index starts at k = 1")
    P = spec.params
    odd = k % 2 == 1
    if spec.kind == "alternating":
        return P["base"] + P["jitter"] * rng.uniform() if odd else 0.0
    if spec.kind == "constant_alternating":
        return float(P["level"]) if odd else 0.0
    if spec.kind == "prbs":
        return float(P["amplitude"]) if rng.uniform() < 0.5 else -float(P["amplitude"])
    return float(rng.uniform(P["lo"], P["hi"]))


def input_sequence(spec: InputSpec, K: int, rng: np.random.Generator, batch: int | None = None) -> np.ndarray:
    """Inputs ``u_1..u_K`` as an array (time on the last axis)."""
    shape = (K,) if batch is None else (batch, K)
    P = spec.params
    odd = (np.arange(1, K + 1) % 2) == 1
    if spec.kind == "alternating":
        return np.where(odd, P["base"] + P["jitter"] * rng.uniform(size=shape), 0.0)
    if spec.kind == "constant_alternating":
        return np.broadcast_to(np.where(odd, float(P["level"]), 0.0), shape).copy()
    if spec.kind == "prbs":
        return np.where(rng.uniform(size=shape) < 0.5, 1.0, -1.0) * float(P["amplitude"])
    return rng.uniform(P["lo"], P["hi"], size=shape)


@dataclass(frozen=True)
class AnalysisSettings:
    """Knobs for the empirical constants in the convergence report.

    ``pe_window`` is the input excitation window m; ``delta_window`` the regressor
    window N (defaults to p + m).
    """

    pe_window: int | None = None
    delta_window: int | None = None
    warmup: int = 100
    horizon: int = 10_000


@dataclass(frozen=True)
class ExperimentConfig:
    true_params: ArmaParams
    domain: ConvexSet
    noise: NoiseModel
    sensor: BinarySensor
    input_spec: InputSpec
    gamma: float
    theta0: np.ndarray
    horizon: int
    trials: int
    master_seed: int
    stability_margin: float
    decimation: int | None = None
    predictor_timing: str = "current"
    analysis: AnalysisSettings = AnalysisSettings()
    name: str = "experiment"

    @property
    def p(self) -> int:
        return self.true_params.p

    @property
    def q(self) -> int:
        return self.true_params.q

    @property
    def threshold(self) -> float:
        return self.sensor.threshold

    @property
    def step(self) -> int:
        """Decimation stride for stored series (``ceil(K / 2000)`` unless set)."""
        return self.decimation or max(1, math.ceil(self.horizon / 2000))

    @property
    def pe_window(self) -> int:
        return self.analysis.pe_window or self.true_params.n

    @property
    def delta_window(self) -> int:
        return self.analysis.delta_window or (self.p + self.pe_window)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "true_params": {"a": self.true_params.a.tolist(), "b": self.true_params.b.tolist()},
            "theta_set": self.domain.to_dict(),
            "stability_margin": self.stability_margin,
            "noise": self.noise.to_dict(),
            "threshold": self.threshold,
            "input": self.input_spec.to_dict(),
            "gamma": self.gamma,
            "theta0": np.asarray(self.theta0).tolist(),
            "horizon": self.horizon,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "decimation": self.step,
            "predictor_timing": self.predictor_timing,
            "analysis": {
                "pe_window": self.pe_window,
                "delta_window": self.delta_window,
                "warmup": self.analysis.warmup,
                "horizon": self.analysis.horizon,
            },
        }


def _get(d: dict, key: str, path: str, default=...):
    if key in d:
        return d[key]
    if default is ...:
        raise ConfigError(f"{path}{key}", "missing required field")
    return default


def _int_field(raw: dict, key: str, default=...) -> int:
    val = _get(raw, key, "", default)
    if not isinstance(val, int) or isinstance(val, bool):
        raise ConfigError(key, f"expected an integer, got {val!r}")
    return val


def _noise_from(d: dict) -> NoiseModel:
    family = d.get("family", "gaussian")
    if family == "gaussian":
        if "variance" in d:
            return NoiseModel.gaussian(variance=float(d["variance"]))
        return NoiseModel.gaussian(float(d["sigma"]))
    if family == "laplace":
        return NoiseModel.laplace(float(d["scale"]))
    if family == "uniform":
        return NoiseModel.uniform(float(d["half_width"]))
    return NoiseModel(family, float(d.get("scale", 1.0)))


def config_from_dict(raw: dict, *, resolve_gamma: bool = True) -> ExperimentConfig:
    """Validate a parsed JSON document; errors name the offending field path."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")

    def guarded(path, fn, *args):
        try:
            return fn(*args)
        except ConfigError:
            raise
        except (BinQuantError, AttributeError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(path, str(exc)) from exc

    tp = _get(raw, "true_params", "")
    params = guarded("true_params", lambda: ArmaParams(np.asarray(tp.get("a", []), float), tp["b"]))
    domain = guarded("theta_set", convex_set_from_dict, _get(raw, "theta_set", ""))
    if domain.dim != params.n:
        raise ConfigError("theta_set", f"dimension {domain.dim} != p + q = {params.n}")
    noise = guarded("noise", _noise_from, _get(raw, "noise", ""))
    sensor = guarded("threshold", BinarySensor, float(raw.get("threshold", 0.0)))
    inp = _get(raw, "input", "")
    input_spec = guarded("input", lambda: InputSpec(inp["kind"], {k: float(v) for k, v in inp.items() if k != "kind"}))

    theta0 = np.asarray(_get(raw, "theta0", ""), dtype=float)
    if theta0.shape != (params.n,):
        raise ConfigError("theta0", f"expected {params.n} entries, got shape {theta0.shape}")

    h = raw.get("stability_margin")
    if h is None:
        h = min(0.999, max(params.rho(), verify_stability_subset(domain, params.p, 0.999).worst_rho) + 1e-6)
    h = float(h)
    if not 0.0 < h < 1.0:
        raise ConfigError("stability_margin", f"must lie in (0, 1), got {h}")
    try:
        params.check_margin(h)
    except UnstableSystem as exc:
        raise ConfigError("true_params", str(exc)) from exc
    if not domain.contains(params.theta, tol=1e-12):
        raise ConfigError("true_params", "true parameter lies outside theta_set")
    stab = verify_stability_subset(domain, params.p, h)
    if stab.worst_rho >= 1.0:
        raise ConfigError("theta_set", f"contains a non-causal point {stab.witness.tolist()} (rho={stab.worst_rho:.4g})")
    if not stab.ok:
        log.warning("theta_set reaches spectral radius %.4g >= margin h=%.4g at %s",
                    stab.worst_rho, h, stab.witness.tolist())

    an = raw.get("analysis", {})
    analysis = AnalysisSettings(
        pe_window=an.get("pe_window"),
        delta_window=an.get("delta_window"),
        warmup=int(an.get("warmup", 100)),
        horizon=int(an.get("horizon", 10_000)),
    )
    timing = raw.get("predictor_timing", "current")
    if timing not in TIMINGS:
        raise ConfigError("predictor_timing", f"must be one of {TIMINGS}")

    ints = {key: _int_field(raw, key, default) for key, default in
            (("horizon", ...), ("trials", 1), ("master_seed", 0))}
    if ints["horizon"] < 1:
        raise ConfigError("horizon", "must be >= 1")
    if ints["trials"] < 1:
        raise ConfigError("trials", "must be >= 1")
    decimation = raw.get("decimation")
    if decimation is not None and (not isinstance(decimation, int) or decimation < 1):
        raise ConfigError("decimation", "must be a positive integer")

    gamma_raw = raw.get("gamma", "auto")
    cfg = ExperimentConfig(
        true_params=params,
        domain=domain,
        noise=noise,
        sensor=sensor,
        input_spec=input_spec,
        gamma=1.0 if gamma_raw == "auto" else float(gamma_raw),
        theta0=theta0,
        horizon=ints["horizon"],
        trials=ints["trials"],
        master_seed=ints["master_seed"],
        stability_margin=h,
        decimation=decimation,
        predictor_timing=timing,
        analysis=analysis,
        name=str(raw.get("name", "experiment")),
    )
    if gamma_raw == "auto":
        if not resolve_gamma:
            return cfg
        from .analysis import analyze, min_step_size

        try:
            gamma = 1.1 * min_step_size(analyze(cfg))
        except BinQuantError as exc:
            raise ConfigError("gamma", f"'auto' cannot be resolved: {exc}") from exc
        cfg = cfg.with_(gamma=gamma)
    elif not cfg.gamma > 0:
        raise ConfigError("gamma", "must be positive or 'auto'")
    return cfg


def bundled_configs() -> list[str]:
    return sorted(p.name for p in resources.files("binquant.configs").iterdir() if p.name.endswith(".json"))


def load_config(path) -> ExperimentConfig:
    """Read a JSON config from ``path``; bare names of bundled configs also resolve."""
    path = Path(path)
    if path.exists():
        text = path.read_text()
    elif path.name in bundled_configs() and path.parent == Path("."):
        text = resources.files("binquant.configs").joinpath(path.name).read_text()
    else:
        raise ConfigError("<file>", f"no such config {str(path)!r}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"malformed JSON: {exc}") from exc
    return config_from_dict(raw)
