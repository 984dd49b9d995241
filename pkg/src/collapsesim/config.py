"""
Experiment configuration.

Config files are INI text read with :mod:`configparser`. Keys before the first
section header belong to ``[run]``. Sections and keys::

    [run]        mode seed dt steps samples workers hbar output_path output_format
    [apparatus]  particles local_dim cap layout propagator
    [coarse]     abar1 abar2 window1 window2
    [amplitudes] alpha_re alpha_im beta_re beta_im
    [bench]      n_min n_max dt steps window propagator repetitions coarse_repetitions m_values
                 r2_min min_ratio elasticity_min elasticity_max

Values given as command-line flags override the file. Unknown sections or
keys, and any value outside its documented bound, raise :class:`ConfigError`
before anything is computed.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

from .coarse_model import InitialAmplitudes
from .exact_model import DEFAULT_BASIS_CAP, PROPAGATORS
from .quantum_state import NORM_TOL
from .rng import SEED_MAX

MODES = ("exact", "coarse", "bench-exact", "bench-coarse", "compare")
FORMATS = ("json", "csv")
LAYOUTS = ("random", "stratified")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ApparatusConfig:
    particles: int = 12
    local_dim: int = 2
    cap: int = DEFAULT_BASIS_CAP
    # None resolves to "random" for exact mode and "stratified" for compare.
    layout: Optional[str] = None
    propagator: str = "diagonal"


@dataclass(frozen=True)
class CoarseConfig:
    abar1: float = 0.5
    abar2: float = -0.5
    # None resolves to pi * hbar / dt (full-period window).
    window1: Optional[float] = None
    window2: Optional[float] = None


@dataclass(frozen=True)
class AmplitudeConfig:
    alpha_re: float = 1 / math.sqrt(2)
    alpha_im: float = 0.0
    beta_re: float = 1 / math.sqrt(2)
    beta_im: float = 0.0

    def amplitudes(self) -> InitialAmplitudes:
        return InitialAmplitudes(complex(self.alpha_re, self.alpha_im),
                                 complex(self.beta_re, self.beta_im))


@dataclass(frozen=True)
class BenchConfig:
    n_min: int = 8
    n_max: int = 14
    dt: float = 0.1
    steps: int = 1
    window: float = 1.0
    propagator: str = "dense"
    repetitions: int = 3
    coarse_repetitions: int = 11
    m_values: Tuple[int, ...] = (10_000, 20_000, 40_000, 80_000)
    r2_min: float = 0.95
    min_ratio: float = 1.5
    elasticity_min: float = 0.5
    elasticity_max: float = 1.5


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    seed: int = 0
    dt: float = 1.0
    steps: int = 16
    samples: int = 100_000
    workers: int = 1
    hbar: float = 1.0
    output_path: Optional[str] = None
    output_format: str = "json"
    apparatus: ApparatusConfig = field(default_factory=ApparatusConfig)
    coarse: CoarseConfig = field(default_factory=CoarseConfig)
    amplitudes: AmplitudeConfig = field(default_factory=AmplitudeConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


_SECTIONS = {
    "apparatus": ApparatusConfig,
    "coarse": CoarseConfig,
    "amplitudes": AmplitudeConfig,
    "bench": BenchConfig,
}
_RUN_KEYS = [f.name for f in dataclasses.fields(ExperimentConfig) if f.name not in _SECTIONS]


def _convert(name: str, kind: str, raw: Any) -> Any:
    if raw is None:
        return None
    try:
        if kind.startswith("Tuple[int"):
            if isinstance(raw, str):
                return tuple(int(x) for x in raw.replace(",", " ").split())
            return tuple(int(x) for x in raw)
        if "int" in kind:
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(raw)
        if "float" in kind:
            return float(raw)
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind}") from None


def _field_kinds(cls) -> Dict[str, str]:
    return {f.name: str(f.type) for f in dataclasses.fields(cls)}


def read_config_file(path: str) -> Dict[str, Dict[str, str]]:
    """Read an INI file into ``{section: {key: raw value}}``."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text, source=path)
    except configparser.DuplicateSectionError as exc:
        if exc.section != "run":
            raise ConfigError(f"duplicate section [{exc.section}] in {path}") from None
        # File opens with its own [run] header: re-read without the implicit one.
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return {s: dict(parser.items(s)) for s in parser.sections()}


def parse_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Merge file values and ``overrides`` and validate the result.

    ``overrides`` maps dotted keys (``"seed"``, ``"apparatus.particles"``) to
    values and wins over the file.
    """
    raw: Dict[str, Dict[str, Any]] = {"run": {}}
    if path is not None:
        for section, values in read_config_file(path).items():
            raw.setdefault(section, {}).update(values)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, name = key.rpartition(".")
        raw.setdefault(section or "run", {})[name] = value

    run_kinds = {k: v for k, v in _field_kinds(ExperimentConfig).items() if k in _RUN_KEYS}
    built: Dict[str, Any] = {}
    for section, values in raw.items():
        if section == "run":
            kinds = run_kinds
        elif section in _SECTIONS:
            kinds = _field_kinds(_SECTIONS[section])
        else:
            raise ConfigError(f"unknown section [{section}]")
        for key in values:
            if key not in kinds:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
        conv = {k: _convert(f"{section}.{k}", kinds[k], v) for k, v in values.items()}
        if section == "run":
            built.update(conv)
        else:
            built[section] = _SECTIONS[section](**conv)

    if "mode" not in built:
        raise ConfigError("mode is required (one of: " + ", ".join(MODES) + ")")
    cfg = ExperimentConfig(**built)
    return validate(cfg)


def _require(ok: bool, name: str, bound: str, value: Any) -> None:
    if not ok:
        raise ConfigError(f"{name} must be {bound} (got {value!r})")


def _finite(x) -> bool:
    return x is not None and math.isfinite(x)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check every field against its bound and fill resolved defaults."""
    _require(cfg.mode in MODES, "mode", "one of " + ", ".join(MODES), cfg.mode)
    _require(0 <= cfg.seed <= SEED_MAX, "seed", "in [0, 2**64 - 1]", cfg.seed)
    _require(_finite(cfg.dt) and cfg.dt > 0, "dt", "finite and > 0", cfg.dt)
    _require(cfg.steps >= 1, "steps", ">= 1", cfg.steps)
    _require(cfg.samples >= 1, "samples", ">= 1", cfg.samples)
    _require(cfg.workers >= 1, "workers", ">= 1", cfg.workers)
    _require(_finite(cfg.hbar) and cfg.hbar > 0, "hbar", "finite and > 0", cfg.hbar)
    _require(cfg.output_format in FORMATS, "output_format", "one of json, csv", cfg.output_format)

    a = cfg.apparatus
    _require(a.particles >= 1, "apparatus.particles", ">= 1", a.particles)
    _require(a.local_dim >= 2, "apparatus.local_dim", ">= 2", a.local_dim)
    _require(a.cap >= 1, "apparatus.cap", ">= 1", a.cap)
    _require(a.layout is None or a.layout in LAYOUTS, "apparatus.layout", "random or stratified", a.layout)
    _require(a.propagator in PROPAGATORS, "apparatus.propagator", "one of " + ", ".join(PROPAGATORS),
             a.propagator)
    if cfg.mode in ("exact", "compare"):
        size = a.local_dim ** a.particles
        _require(size <= a.cap, "apparatus.particles",
                 f"such that local_dim**particles <= cap = {a.cap}", a.particles)
    layout = a.layout or ("stratified" if cfg.mode == "compare" else "random")

    c = cfg.coarse
    full = math.pi * cfg.hbar / cfg.dt
    w1 = full if c.window1 is None else c.window1
    w2 = full if c.window2 is None else c.window2
    _require(_finite(c.abar1), "coarse.abar1", "finite", c.abar1)
    _require(_finite(c.abar2), "coarse.abar2", "finite", c.abar2)
    _require(_finite(w1) and w1 >= 0, "coarse.window1", "finite and >= 0", w1)
    _require(_finite(w2) and w2 >= 0, "coarse.window2", "finite and >= 0", w2)

    am = cfg.amplitudes
    n2 = am.alpha_re**2 + am.alpha_im**2 + am.beta_re**2 + am.beta_im**2
    _require(abs(n2 - 1.0) <= NORM_TOL, "amplitudes", f"normalized (|alpha|^2 + |beta|^2 = 1 within {NORM_TOL})",
             n2)

    b = cfg.bench
    _require(1 <= b.n_min <= b.n_max, "bench.n_min", f"in [1, bench.n_max = {b.n_max}]", b.n_min)
    _require(_finite(b.dt) and b.dt > 0, "bench.dt", "finite and > 0", b.dt)
    _require(b.steps >= 1, "bench.steps", ">= 1", b.steps)
    _require(_finite(b.window) and b.window >= 0, "bench.window", "finite and >= 0", b.window)
    _require(b.propagator in PROPAGATORS, "bench.propagator", "one of " + ", ".join(PROPAGATORS),
             b.propagator)
    _require(b.repetitions >= 3, "bench.repetitions", ">= 3", b.repetitions)
    _require(b.coarse_repetitions >= 3, "bench.coarse_repetitions", ">= 3", b.coarse_repetitions)
    _require(len(b.m_values) >= 1 and all(m >= 1 for m in b.m_values), "bench.m_values",
             "a non-empty list of positive integers", b.m_values)
    _require(0 <= b.r2_min <= 1, "bench.r2_min", "in [0, 1]", b.r2_min)
    _require(_finite(b.min_ratio) and b.min_ratio > 1, "bench.min_ratio", "> 1", b.min_ratio)
    _require(0 <= b.elasticity_min <= b.elasticity_max, "bench.elasticity_min",
             "in [0, bench.elasticity_max]", b.elasticity_min)

    return dataclasses.replace(
        cfg,
        apparatus=dataclasses.replace(a, layout=layout),
        coarse=dataclasses.replace(c, window1=float(w1), window2=float(w2)),
    )
