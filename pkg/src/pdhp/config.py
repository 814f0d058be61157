"""Flat ``key = value`` run configuration.

Lists are written as JSON arrays (``kernel_means = [3, 7, 11]``). An optional
``[pdhp]`` section header is accepted. Unknown keys are rejected.
"""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .datagen import GenerationSpec
from .errors import ConfigError
from .evaluation import SweepGrid
from .inference import FitConfig

SECTION = "pdhp"


@dataclass(frozen=True)
class RunConfig:
    # inference
    r: float = 1.0
    lambda0: float = 0.01
    alpha0: float = 1.0
    theta0_v: float = 10.0
    kernel_means: tuple = (3.0, 7.0, 11.0)
    kernel_bandwidths: tuple = ()
    kernel_horizon: float = 0.0
    n_particles: int = 8
    ess_threshold: float = 0.5
    n_candidates: int = 8
    candidate_scale: tuple = (0.1, 3.0)
    mode: str = "sample"
    n_threads: int = 1
    seed: int = 0
    # generation
    n_clusters: int = 2
    vocab_per_cluster: int = 1000
    words_per_doc: int = 20
    textual_overlap: float = 0.0
    intensity_overlap: float = 0.0
    decorrelation: float = 0.0
    horizon: float = 500.0
    base_rate: float = 0.2
    branching_ratio: float = 0.8
    true_weights: tuple = ()
    gen_kernel_means: tuple = (3.0, 7.0, 11.0)
    gen_kernel_bandwidth: float = 0.0
    # sweep
    sweep_r: tuple = (0.0, 0.5, 1.0, 2.0, 4.0)
    sweep_textual_overlap: tuple = (0.0, 0.3, 0.5, 0.7, 0.9)
    sweep_intensity_overlap: tuple = (0.0, 0.3, 0.5, 0.7, 0.9)
    sweep_decorrelation: tuple = (0.0,)
    sweep_seeds: int = 10
    sweep_workers: int = 1
    # evaluation and export
    nmi_normalization: str = "geometric"
    grid_step: float = 1.0
    top_words: int = 10
    # paths, overridable from the command line
    corpus: str = ""
    labels: str = ""
    assignments: str = ""
    out: str = ""

    def fit_config(self) -> FitConfig:
        return FitConfig(
            r=self.r, lambda0=self.lambda0, alpha0=self.alpha0, theta0_v=self.theta0_v,
            kernel_means=tuple(self.kernel_means),
            kernel_bandwidths=tuple(self.kernel_bandwidths) or None,
            kernel_horizon=self.kernel_horizon or None,
            n_particles=self.n_particles, ess_threshold=self.ess_threshold,
            n_candidates=self.n_candidates, candidate_scale=tuple(self.candidate_scale),
            seed=self.seed, mode=self.mode, n_threads=self.n_threads,
        )

    def generation_spec(self) -> GenerationSpec:
        return GenerationSpec(
            n_clusters=self.n_clusters, vocab_per_cluster=self.vocab_per_cluster,
            words_per_doc=self.words_per_doc, textual_overlap=self.textual_overlap,
            intensity_overlap=self.intensity_overlap, decorrelation=self.decorrelation,
            horizon=self.horizon, base_rate=self.base_rate, branching_ratio=self.branching_ratio,
            true_weights=tuple(tuple(w) for w in self.true_weights) or None,
            kernel_means=tuple(self.gen_kernel_means),
            kernel_bandwidth=self.gen_kernel_bandwidth or None, seed=self.seed,
        )

    def sweep_grid(self) -> SweepGrid:
        return SweepGrid(
            r=tuple(self.sweep_r), textual_overlap=tuple(self.sweep_textual_overlap),
            intensity_overlap=tuple(self.sweep_intensity_overlap),
            decorrelation=tuple(self.sweep_decorrelation),
            seeds=tuple(self.seed + i for i in range(self.sweep_seeds)),
        )

    def validate(self) -> "RunConfig":
        self.fit_config()
        self.generation_spec()
        if self.sweep_seeds < 1 or self.sweep_workers < 1:
            raise ConfigError("sweep_seeds and sweep_workers must be >= 1")
        if self.grid_step <= 0:
            raise ConfigError("grid_step must be > 0")
        return self


_FIELDS = {f.name: f for f in fields(RunConfig)}
_DEFAULTS = RunConfig()


def _to_tuple(value):
    return tuple(_to_tuple(v) if isinstance(v, list) else v for v in value)


def parse_value(key: str, raw: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    default = getattr(_DEFAULTS, key)
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            value = json.loads(raw)
            if not isinstance(value, list):
                value = [value]
            return _to_tuple(value)
        return raw
    except (ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None


def load_config(path=None, **overrides) -> RunConfig:
    values = {}
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        if not text.lstrip().startswith("["):
            text = f"[{SECTION}]\n" + text
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        extra = [s for s in parser.sections() if s != SECTION]
        if extra:
            raise ConfigError(f"{path}: unknown section(s) {extra}")
        if parser.has_section(SECTION):
            for key, raw in parser.items(SECTION):
                values[key] = parse_value(key, raw)
    for key, val in overrides.items():
        if val is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = val
    try:
        return replace(_DEFAULTS, **values).validate()
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for name in _FIELDS:
        v = getattr(cfg, name)
        lines.append(f"{name} = {json.dumps(v) if isinstance(v, tuple) else v}")
    return "\n".join(lines) + "\n"
