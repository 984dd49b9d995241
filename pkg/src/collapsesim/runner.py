"""Mode dispatch: turns a validated :class:`ExperimentConfig` into a :class:`RunReport`."""

from __future__ import annotations

import dataclasses
import datetime
import math
import platform
import time
from typing import Any, Dict, List

import numpy as np

from . import __version__
from .coarse_model import (
    CoarseSpec,
    InitialAmplitudes,
    estimate_from_values,
    phase_average_check,
    sample_probabilities,
)
from .config import ExperimentConfig
from .exact_model import (
    ApparatusSpec,
    coherence_probability,
    random_coefficients,
    run_exact_experiment,
    stratified_coefficients,
)
from .quantum_state import PhysicalConstants
from .report import RunReport
from .rng import make_stream
from .scaling_bench import GrowthThresholds, fit_growth, run_coarse_scaling, run_exact_scaling


def coarse_spec(cfg: ExperimentConfig) -> CoarseSpec:
    c = cfg.coarse
    return CoarseSpec(c.abar1, c.abar2, c.window1, c.window2, cfg.dt, cfg.hbar)


def analytic_coarse_mean(amps: InitialAmplitudes, spec: CoarseSpec) -> float:
    """Expected return probability under uniform windows.

    ``E[cos(Δā + u1 - u2)] = cos(Δā) · sinc(W1) · sinc(W2)`` with
    ``sinc(x) = sin(x)/x`` and all angles in units of ``dt/ħ``.
    """
    s = spec.dt / spec.hbar

    def sinc(x):
        return 1.0 if x == 0 else math.sin(x) / x

    ecos = math.cos((spec.abar1 - spec.abar2) * s) * sinc(spec.window1 * s) * sinc(spec.window2 * s)
    p1, p2 = abs(amps.alpha) ** 2, abs(amps.beta) ** 2
    return p1 * p1 + p2 * p2 + 2 * p1 * p2 * ecos


def _checkpoints(m: int) -> List[int]:
    pts = []
    k = 1
    while k < m:
        pts.append(k)
        k *= 2
    pts.append(m)
    return pts


def _estimate_dict(est) -> Dict[str, Any]:
    return {"mean": est.mean, "std_error": est.std_error, "samples": est.samples}


def _run_coarse(cfg: ExperimentConfig):
    amps = cfg.amplitudes.amplitudes()
    spec = coarse_spec(cfg)
    values = sample_probabilities(amps, spec, cfg.samples, cfg.seed, cfg.workers)
    records = []
    for m in _checkpoints(cfg.samples):
        est = estimate_from_values(values[:m])
        records.append({"samples": m, "mean": est.mean, "std_error": est.std_error})
    est = estimate_from_values(values)
    phase = phase_average_check(spec, cfg.samples, cfg.seed, cfg.workers)
    expected = analytic_coarse_mean(amps, spec)
    summary = {
        "estimate": _estimate_dict(est),
        "analytic_mean": expected,
        "z_score": (est.mean - expected) / est.std_error if est.std_error > 0 else None,
        "phase_average": dataclasses.asdict(phase),
    }
    return records, summary, {}


def _exact_setup(cfg: ExperimentConfig):
    a = cfg.apparatus
    app = ApparatusSpec(a.particles, a.local_dim, a.cap)
    c = cfg.coarse
    if a.layout == "stratified":
        coeffs = stratified_coefficients(app, c.abar1, c.abar2, c.window1, c.window2)
    else:
        coeffs = random_coefficients(app, make_stream(cfg.seed, 0), c.abar1, c.abar2, c.window1, c.window2)
    return app, coeffs


def _run_exact(cfg: ExperimentConfig):
    amps = cfg.amplitudes.amplitudes()
    app, coeffs = _exact_setup(cfg)
    recs = run_exact_experiment(app, coeffs, None, cfg.dt, cfg.steps, PhysicalConstants(cfg.hbar),
                                amps, cfg.apparatus.propagator)
    records = [dataclasses.asdict(r) for r in recs]
    last = recs[-1]
    summary = {
        "basis_size": app.basis_size,
        "state_dim": app.state_dim,
        "final_transition_probability": last.transition_probability,
        "final_system_probability": last.system_probability,
        "final_coherence": last.coherence,
        "max_norm_deviation": max(abs(r.norm - 1.0) for r in recs),
    }
    return records, summary, {}


def _run_compare(cfg: ExperimentConfig):
    amps = cfg.amplitudes.amplitudes()
    app, coeffs = _exact_setup(cfg)
    rec = run_exact_experiment(app, coeffs, None, cfg.dt, 1, PhysicalConstants(cfg.hbar), amps,
                               cfg.apparatus.propagator)[0]
    overlap = complex(rec.overlap_re, rec.overlap_im)
    exact_p = coherence_probability(amps, overlap)
    p1, p2 = abs(amps.alpha) ** 2, abs(amps.beta) ** 2
    s = cfg.dt / cfg.hbar
    visibility_form = p1 * p1 + p2 * p2 + 2 * p1 * p2 * rec.coherence * math.cos(
        (cfg.coarse.abar1 - cfg.coarse.abar2) * s)

    spec = coarse_spec(cfg)
    est = estimate_from_values(sample_probabilities(amps, spec, cfg.samples, cfg.seed, cfg.workers))
    diff = est.mean - exact_p
    records = [
        {"path": "exact", "probability": exact_p, "std_error": 0.0, "coherence": rec.coherence,
         "state_dim": app.state_dim},
        {"path": "coarse", "probability": est.mean, "std_error": est.std_error, "coherence": None,
         "state_dim": 2},
    ]
    summary = {
        "exact_probability": exact_p,
        "exact_visibility_form": visibility_form,
        "exact_full_space_overlap": rec.transition_probability,
        "coherence": rec.coherence,
        "coarse": _estimate_dict(est),
        "difference": diff,
        "z_score": diff / est.std_error if est.std_error > 0 else None,
        "within_3_std_error": abs(diff) <= 3 * est.std_error,
        "basis_size": app.basis_size,
    }
    return records, summary, {}


def _thresholds(cfg: ExperimentConfig) -> GrowthThresholds:
    b = cfg.bench
    return GrowthThresholds(b.r2_min, b.min_ratio, (b.elasticity_min, b.elasticity_max))


def _growth_dict(report) -> Dict[str, Any]:
    d = dataclasses.asdict(report)
    d.pop("points")
    return d


def _point_dict(p) -> Dict[str, Any]:
    return dataclasses.asdict(p)


def _run_bench_exact(cfg: ExperimentConfig):
    b = cfg.bench
    n_range = range(b.n_min, b.n_max + 1)
    common = dict(d=cfg.apparatus.local_dim, n_range=n_range, dt=b.dt, steps=b.steps, seed=cfg.seed,
                  window=b.window, repetitions=b.repetitions, cap=cfg.apparatus.cap, hbar=cfg.hbar)
    series = [run_exact_scaling(propagator=b.propagator, **common)]
    if b.propagator != "diagonal":
        series.append(run_exact_scaling(propagator="diagonal", **common))
    records, timing, summary = [], {}, {}
    for s in series:
        records.extend(_point_dict(p) for p in s)
        summary[s.label] = {"points": len(s), "truncated_at": s.truncated_at,
                            "state_dims": [p.state_dim for p in s]}
        timing[s.label] = _growth_dict(fit_growth(s.points, "exponential", _thresholds(cfg))) \
            if len(s) >= 4 else None
    summary["headline"] = series[0].label
    return records, summary, timing


def _run_bench_coarse(cfg: ExperimentConfig):
    b = cfg.bench
    s = run_coarse_scaling(list(b.m_values), coarse_spec(cfg), cfg.seed, cfg.amplitudes.amplitudes(),
                           repetitions=b.coarse_repetitions)
    records = [_point_dict(p) for p in s]
    summary = {"state_dims": [p.state_dim for p in s]}
    timing = {"coarse": _growth_dict(fit_growth(s.points, "linear", _thresholds(cfg))) if len(s) >= 4 else None}
    return records, summary, timing


_DISPATCH = {
    "exact": _run_exact,
    "coarse": _run_coarse,
    "compare": _run_compare,
    "bench-exact": _run_bench_exact,
    "bench-coarse": _run_bench_coarse,
}


def run(cfg: ExperimentConfig) -> RunReport:
    started = datetime.datetime.now(datetime.timezone.utc)
    t0 = time.perf_counter()
    records, summary, timing = _DISPATCH[cfg.mode](cfg)
    metadata = {
        "started_utc": started.isoformat(),
        "elapsed_seconds": time.perf_counter() - t0,
        "python": platform.python_version(),
        "numpy": np.__version__,
        # Execution details that must not change the results.
        "workers": cfg.workers,
        "output_path": cfg.output_path,
    }
    cfg_echo = cfg.to_dict()
    cfg_echo.pop("workers")
    cfg_echo.pop("output_path")
    return RunReport(cfg.mode, cfg_echo, records, summary, __version__, timing, metadata)
