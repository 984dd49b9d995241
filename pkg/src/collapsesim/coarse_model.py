"""
Coarse-grained stochastic measurement model.

The apparatus is reduced to two estimated coupling energies ``abar1``,
``abar2`` with uncertainties drawn uniformly from symmetric windows. Each
draw gives a two-level state whose branches pick up phases
``θ_j = (abar_j + da_j) dt / ħ``; its return probability to the initial
superposition is averaged over many draws.

Nothing here allocates an object whose size depends on the apparatus, so the
cost of an estimate is linear in the number of samples.

Sampling uses fixed-size blocks. Block ``b`` of a seeded estimate draws from
:func:`collapsesim.rng.make_stream` ``(seed, b)``, and per-sample values are
reduced with :func:`math.fsum`, so results are bitwise independent of the
number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .quantum_state import NORM_TOL, StateVector
from .rng import check_seed, make_stream

BLOCK_SIZE = 8192

RngLike = Union[int, np.random.Generator]


@dataclass(frozen=True)
class CoarseSpec:
    """Estimated couplings, uncertainty half-widths, time step and ħ."""

    abar1: float = 0.0
    abar2: float = 0.0
    window1: float = math.pi
    window2: float = math.pi
    dt: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("abar1", "abar2", "window1", "window2", "dt", "hbar"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")
        for name in ("window1", "window2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("dt", "hbar"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    @classmethod
    def full_period(cls, abar1: float = 0.0, abar2: float = 0.0, dt: float = 1.0,
                    hbar: float = 1.0) -> "CoarseSpec":
        """Windows with ``window * dt / ħ = π`` on both branches."""
        w = math.pi * hbar / dt
        return cls(abar1, abar2, w, w, dt, hbar)


@dataclass(frozen=True)
class SampleDraw:
    da1: float
    da2: float


@dataclass(frozen=True)
class InitialAmplitudes:
    alpha: complex = 1 / math.sqrt(2)
    beta: complex = 1 / math.sqrt(2)

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        n2 = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n2 - 1.0) > NORM_TOL:
            raise ValueError(f"|alpha|^2 + |beta|^2 must be 1 within {NORM_TOL}, got {n2!r}")

    def state(self) -> StateVector:
        return StateVector([self.alpha, self.beta], normalized=True)


@dataclass(frozen=True)
class TransitionEstimate:
    """Monte Carlo mean of the return probability.

    ``std_error`` is the unbiased sample standard deviation over
    ``sqrt(samples)``; it is reported as 0 for a single sample.
    """

    mean: float
    std_error: float
    samples: int


@dataclass(frozen=True)
class PhaseAverage:
    mean_cos: float
    mean_sin: float
    cos_std_error: float
    sin_std_error: float
    samples: int

    def __iter__(self):
        # Unpacks as (mean_cos, mean_sin).
        return iter((self.mean_cos, self.mean_sin))


def _uniform_pairs(spec: CoarseSpec, gen: np.random.Generator, n: int):
    u = gen.uniform(-1.0, 1.0, size=(n, 2))
    return u[:, 0] * spec.window1, u[:, 1] * spec.window2


def sample_draw(spec: CoarseSpec, rng_state: np.random.Generator) -> SampleDraw:
    """Draw ``(da1, da2)`` independently and uniformly from the two windows.

    Consumes two doubles from ``rng_state``; ``n`` consecutive calls see the
    same values as one ``n``-sample block.
    """
    da1, da2 = _uniform_pairs(spec, rng_state, 1)
    return SampleDraw(float(da1[0]), float(da2[0]))


def _phase_difference(spec: CoarseSpec, da1, da2):
    scale = spec.dt / spec.hbar
    return (spec.abar1 + da1) * scale - (spec.abar2 + da2) * scale


def _probability(amps: InitialAmplitudes, dtheta):
    p1 = abs(amps.alpha) ** 2
    p2 = abs(amps.beta) ** 2
    # Clipped: rounding in |α|², |β|² can push the closed form a few ulps past 1.
    return np.clip(p1 * p1 + p2 * p2 + 2.0 * p1 * p2 * np.cos(dtheta), 0.0, 1.0)


def per_sample_state(amps: InitialAmplitudes, spec: CoarseSpec, draw: SampleDraw) -> StateVector:
    scale = spec.dt / spec.hbar
    theta1 = (spec.abar1 + draw.da1) * scale
    theta2 = (spec.abar2 + draw.da2) * scale
    return StateVector(
        [amps.alpha * np.exp(-1j * theta1), amps.beta * np.exp(-1j * theta2)], normalized=True
    )


def per_sample_probability(amps: InitialAmplitudes, spec: CoarseSpec, draw: SampleDraw) -> float:
    """Closed form ``|α|⁴ + |β|⁴ + 2|α|²|β|² cos(θ₁ − θ₂)``."""
    return float(_probability(amps, _phase_difference(spec, draw.da1, draw.da2)))


def _mean_and_error(values: np.ndarray):
    m = values.size
    # Shifted by the first value so a constant sample reproduces it exactly.
    shift = float(values[0])
    mean = shift + math.fsum(values - shift) / m
    if m < 2:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (m - 1)
    return mean, math.sqrt(var / m)


def _draw_all(spec: CoarseSpec, samples: int, rng_state: RngLike, workers: int):
    if isinstance(samples, bool) or int(samples) != samples or samples < 1:
        raise ValueError(f"samples must be a positive integer, got {samples!r}")
    samples = int(samples)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if isinstance(rng_state, np.random.Generator):
        if workers != 1:
            raise ValueError("a shared Generator cannot be split across workers; pass an int seed")
        return _uniform_pairs(spec, rng_state, samples)

    seed = check_seed(rng_state)
    sizes = [min(BLOCK_SIZE, samples - start) for start in range(0, samples, BLOCK_SIZE)]

    def block(index: int):
        return _uniform_pairs(spec, make_stream(seed, index), sizes[index])

    if workers == 1:
        parts = [block(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, range(len(sizes))))
    da1 = np.concatenate([p[0] for p in parts])
    da2 = np.concatenate([p[1] for p in parts])
    return da1, da2


def sample_probabilities(
    amps: InitialAmplitudes,
    spec: CoarseSpec,
    samples: int,
    rng_state: RngLike,
    workers: int = 1,
) -> np.ndarray:
    """Per-sample return probabilities for ``samples`` draws, in draw order."""
    da1, da2 = _draw_all(spec, samples, rng_state, workers)
    return _probability(amps, _phase_difference(spec, da1, da2))


def estimate_from_values(values: np.ndarray) -> TransitionEstimate:
    mean, err = _mean_and_error(np.asarray(values, dtype=np.float64))
    return TransitionEstimate(mean, err, int(np.size(values)))


def aggregate_probability(
    amps: InitialAmplitudes,
    spec: CoarseSpec,
    samples: int,
    rng_state: RngLike,
    workers: int = 1,
) -> TransitionEstimate:
    """Average the per-sample return probability over ``samples`` draws.

    Parameters
    ----------
    amps : InitialAmplitudes
        Initial branch amplitudes.
    spec : CoarseSpec
        Coupling estimates, windows, time step and ħ.
    samples : int
        Number of draws M.
    rng_state : int or numpy.random.Generator
        An integer seed selects the blocked sub-stream scheme (reproducible
        for any ``workers``); a Generator is consumed sequentially.
    workers : int
        Threads used to generate blocks.
    """
    return estimate_from_values(sample_probabilities(amps, spec, samples, rng_state, workers))


def phase_average_check(
    spec: CoarseSpec,
    samples: int,
    rng_state: RngLike,
    workers: int = 1,
) -> PhaseAverage:
    """Sample means of cos and sin of the random phase ``(da1 - da2) dt / ħ``.

    The estimated couplings do not enter; only the uncertainty windows do.
    """
    da1, da2 = _draw_all(spec, samples, rng_state, workers)
    phi = (da1 - da2) * (spec.dt / spec.hbar)
    mc, sc = _mean_and_error(np.cos(phi))
    ms, ss = _mean_and_error(np.sin(phi))
    return PhaseAverage(mc, ms, sc, ss, phi.size)
