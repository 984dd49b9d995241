"""
Exact system ⊗ apparatus model.

A two-level system ``{|1⟩, |2⟩}`` couples to an apparatus with ``K = d**N``
basis states through the interaction Hamiltonian

    H = |1⟩⟨1| ⊗ Σ_k A1[k] |ε_k⟩⟨ε_k| + |2⟩⟨2| ⊗ Σ_k A2[k] |ε_k⟩⟨ε_k|

which is diagonal in the product basis. Product index ``(j, k)`` is stored at
``j * K + k`` with ``j = 0`` for ``|1⟩`` and ``j = 1`` for ``|2⟩``.

The initial state is ``(α|1⟩ + β|2⟩) ⊗ Σ_k sqrt(w_k) |ε_k⟩``. Three
propagators are available to :func:`run_exact_experiment`:

``diagonal``
    phase multiplication, ``O(dim)`` per step;
``dense``
    Taylor series over a dense row-block action of ``H`` in which every
    matrix entry takes part, ``O(dim²)`` per product and ``O(dim)`` memory;
``euler``
    the first-order step ``(I - i H dt / ħ)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .coarse_model import InitialAmplitudes
from .quantum_state import (
    HermitianOperator,
    PhysicalConstants,
    StateVector,
    apply_operator,
    evolve_exact,
    evolve_series,
    inner_product,
    tensor_product,
)

DEFAULT_BASIS_CAP = 2**20
WEIGHT_TOL = 1e-12
PROPAGATORS = ("diagonal", "dense", "euler")

# Dense row blocks are sized to hold about this many complex entries.
_BLOCK_ENTRIES = 1 << 19


@dataclass(frozen=True)
class ApparatusSpec:
    """Apparatus of ``particle_count`` particles with ``local_dim`` states each."""

    particle_count: int
    local_dim: int = 2
    cap: int = DEFAULT_BASIS_CAP

    def __post_init__(self):
        if int(self.particle_count) != self.particle_count or self.particle_count < 1:
            raise ValueError(f"particle_count must be a positive integer, got {self.particle_count}")
        if int(self.local_dim) != self.local_dim or self.local_dim < 2:
            raise ValueError(f"local_dim must be an integer >= 2, got {self.local_dim}")
        if self.cap < 1:
            raise ValueError(f"cap must be >= 1, got {self.cap}")
        if self.basis_size > self.cap:
            raise ValueError(
                f"apparatus basis size {self.local_dim}**{self.particle_count} = "
                f"{self.basis_size} exceeds cap {self.cap}"
            )

    @property
    def basis_size(self) -> int:
        return int(self.local_dim) ** int(self.particle_count)

    @property
    def state_dim(self) -> int:
        return 2 * self.basis_size


@dataclass(frozen=True, eq=False)
class InteractionCoefficients:
    a1: np.ndarray
    a2: np.ndarray

    def __post_init__(self):
        a1 = np.array(self.a1, dtype=np.float64, copy=True)
        a2 = np.array(self.a2, dtype=np.float64, copy=True)
        if a1.ndim != 1 or a1.shape != a2.shape or a1.size < 1:
            raise ValueError(f"coefficient arrays must be 1-D of equal length, got {a1.shape} and {a2.shape}")
        if not (np.all(np.isfinite(a1)) and np.all(np.isfinite(a2))):
            raise ValueError("interaction coefficients must be finite")
        a1.flags.writeable = False
        a2.flags.writeable = False
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    def __len__(self) -> int:
        return self.a1.size


@dataclass(frozen=True, eq=False)
class ApparatusWeights:
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64, copy=True)
        if w.ndim != 1 or w.size < 1:
            raise ValueError(f"weights must be a non-empty 1-D array, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        total = math.fsum(w)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1 within {WEIGHT_TOL}, got {total!r}")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    @classmethod
    def uniform(cls, size: int) -> "ApparatusWeights":
        return cls(np.full(size, 1.0 / size))

    def __len__(self) -> int:
        return self.w.size


def random_coefficients(
    app: ApparatusSpec,
    rng: np.random.Generator,
    abar1: float = 0.0,
    abar2: float = 0.0,
    window1: float = 1.0,
    window2: float = 1.0,
) -> InteractionCoefficients:
    """i.i.d. ``A_jk = abar_j + U(-window_j, window_j)``."""
    u = rng.uniform(-1.0, 1.0, size=(2, app.basis_size))
    return InteractionCoefficients(abar1 + window1 * u[0], abar2 + window2 * u[1])


def _midpoints(n: int, window: float) -> np.ndarray:
    return window * ((2.0 * np.arange(n) + 1.0) / n - 1.0)


def stratified_coefficients(
    app: ApparatusSpec,
    abar1: float = 0.0,
    abar2: float = 0.0,
    window1: float = 1.0,
    window2: float = 1.0,
) -> InteractionCoefficients:
    """Deterministic product grid of coupling offsets.

    ``K`` is split as ``K1 * K2`` with ``K1 = d**ceil(N/2)``. Apparatus state
    ``k = i * K2 + j`` gets offset ``i`` of a ``K1``-point midpoint grid on
    ``[-window1, window1]`` and offset ``j`` of a ``K2``-point grid on
    ``[-window2, window2]``. Under uniform weights the branch coherence then
    equals a midpoint-rule quadrature of the coarse model's phase average.
    """
    n1 = (app.particle_count + 1) // 2
    k1 = app.local_dim**n1
    k2 = app.basis_size // k1
    d1 = np.repeat(_midpoints(k1, window1), k2)
    d2 = np.tile(_midpoints(k2, window2), k1)
    return InteractionCoefficients(abar1 + d1, abar2 + d2)


def _check_coeffs(app: ApparatusSpec, coeffs: InteractionCoefficients) -> None:
    if len(coeffs) != app.basis_size:
        raise ValueError(
            f"coefficient length {len(coeffs)} does not match apparatus basis size {app.basis_size}"
        )


def build_interaction_hamiltonian(app: ApparatusSpec, coeffs: InteractionCoefficients) -> HermitianOperator:
    _check_coeffs(app, coeffs)
    return HermitianOperator.from_diagonal(np.concatenate([coeffs.a1, coeffs.a2]))


def initial_state(amps: InitialAmplitudes, w: ApparatusWeights) -> StateVector:
    apparatus = StateVector(np.sqrt(w.w), normalized=True)
    return tensor_product(amps.state(), apparatus)


def evolve_euler(
    H: HermitianOperator,
    psi: StateVector,
    dt: float,
    c: PhysicalConstants = PhysicalConstants(),
    renormalize: bool = False,
) -> StateVector:
    """One truncated step ``ψ - (i dt / ħ) H ψ``.

    The result is not unitary. With ``renormalize=True`` it is divided by its
    norm.
    """
    out = psi.amps - (1j * dt / c.hbar) * apply_operator(H, psi).amps
    result = StateVector(out)
    return result.renormalized() if renormalize else result


def transition_probability(psi0: StateVector, psit: StateVector) -> float:
    """``|⟨ψ0|ψt⟩|²``."""
    return abs(inner_product(psi0, psit)) ** 2


def coherence_factor(
    coeffs: InteractionCoefficients,
    w: ApparatusWeights,
    t: float,
    c: PhysicalConstants = PhysicalConstants(),
) -> float:
    """Visibility ``|Σ_k w_k exp(-i (A1k - A2k) t / ħ)|`` between the branches."""
    return abs(branch_overlap(coeffs, w, t, c))


def branch_overlap(
    coeffs: InteractionCoefficients,
    w: ApparatusWeights,
    t: float,
    c: PhysicalConstants = PhysicalConstants(),
) -> complex:
    """Complex overlap ``⟨E2(t)|E1(t)⟩`` of the apparatus states tied to each branch."""
    if len(coeffs) != len(w):
        raise ValueError(f"coefficient length {len(coeffs)} does not match weight length {len(w)}")
    if not math.isfinite(t):
        raise ValueError(f"t must be finite, got {t}")
    phases = np.exp(-1j * (coeffs.a1 - coeffs.a2) * (t / c.hbar))
    return complex(np.sum(w.w * phases))


def state_branch_overlap(psi: StateVector, amps: InitialAmplitudes, basis_size: int) -> complex:
    """``⟨E2|E1⟩`` read off a product-basis state.

    ``E_j`` is branch ``j`` of ``psi`` with its initial amplitude divided out,
    then normalized, so non-unitary (Euler) states are handled too.
    """
    m = psi.amps.reshape(2, basis_size)
    if amps.alpha == 0 or amps.beta == 0:
        return 0j
    e1 = m[0] / amps.alpha
    e2 = m[1] / amps.beta
    n1 = np.linalg.norm(e1)
    n2 = np.linalg.norm(e2)
    if n1 == 0 or n2 == 0:
        return 0j
    return complex(np.vdot(e2, e1) / (n1 * n2))


def system_return_probability(amps: InitialAmplitudes, psi: StateVector, basis_size: int) -> float:
    """Probability of finding the system back in ``α|1⟩ + β|2⟩``, apparatus unread.

    Computed as ``Σ_k |⟨ψ_sys ⊗ ε_k | ψ⟩|²``.
    """
    m = psi.amps.reshape(2, basis_size)
    proj = np.conj(amps.alpha) * m[0] + np.conj(amps.beta) * m[1]
    return float(np.vdot(proj, proj).real)


def dense_action(H: HermitianOperator, block_entries: int = _BLOCK_ENTRIES):
    """Return ``v -> H v`` computed from dense row blocks of ``H``.

    Every entry of the matrix, zeros included, is materialized and multiplied;
    only one block of rows is held in memory at a time.
    """
    dim = H.dim
    rows = max(1, block_entries // dim)
    buf = np.zeros((min(rows, dim), dim), dtype=np.complex128) if H.diagonal else None

    def action(v: np.ndarray) -> np.ndarray:
        out = np.empty(dim, dtype=np.complex128)
        for start in range(0, dim, rows):
            stop = min(dim, start + rows)
            out[start:stop] = H.row_block(start, stop, buf) @ v
        return out

    return action


@dataclass(frozen=True)
class ExactRecord:
    step: int
    time: float
    transition_probability: float
    system_probability: float
    coherence: float
    overlap_re: float
    overlap_im: float
    norm: float


def _propagate(H: HermitianOperator, psi: StateVector, dt: float, c: PhysicalConstants,
               propagator: str, action) -> StateVector:
    if propagator == "diagonal":
        return evolve_exact(H, psi, dt, c)
    if propagator == "dense":
        return evolve_series(action, psi, dt, H.norm_bound(), c)
    return evolve_euler(H, psi, dt, c)


def run_exact_experiment(
    app: ApparatusSpec,
    coeffs: InteractionCoefficients,
    w: Optional[ApparatusWeights],
    dt: float,
    steps: int,
    c: PhysicalConstants = PhysicalConstants(),
    amps: InitialAmplitudes = InitialAmplitudes(),
    propagator: str = "diagonal",
) -> List[ExactRecord]:
    """Evolve the product state and record one :class:`ExactRecord` per step.

    ``transition_probability`` is the full-space overlap ``|⟨ψ(0)|ψ(t)⟩|²``.
    ``system_probability`` and ``coherence`` describe the two-level system
    only; they are the quantities the coarse model estimates. Records are a
    deterministic function of the inputs.
    """
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps}")
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be finite and > 0, got {dt}")
    if propagator not in PROPAGATORS:
        raise ValueError(f"propagator must be one of {PROPAGATORS}, got {propagator!r}")
    K = app.basis_size
    if w is None:
        w = ApparatusWeights.uniform(K)
    if len(w) != K:
        raise ValueError(f"weight length {len(w)} does not match apparatus basis size {K}")
    H = build_interaction_hamiltonian(app, coeffs)
    psi0 = initial_state(amps, w)
    action = dense_action(H) if propagator == "dense" else None

    records = []
    psi = psi0
    for n in range(1, int(steps) + 1):
        psi = _propagate(H, psi, dt, c, propagator, action)
        ovl = state_branch_overlap(psi, amps, K)
        records.append(ExactRecord(
            step=n,
            time=n * dt,
            transition_probability=transition_probability(psi0, psi),
            system_probability=system_return_probability(amps, psi, K),
            coherence=abs(ovl),
            overlap_re=ovl.real,
            overlap_im=ovl.imag,
            norm=psi.norm(),
        ))
    return records


def coherence_probability(amps: InitialAmplitudes, overlap: complex) -> float:
    """System return probability implied by a branch overlap.

    ``|α|⁴ + |β|⁴ + 2|α|²|β|² Re⟨E2|E1⟩``; with ``α = β = 1/√2`` this is
    ``½(1 + Re⟨E2|E1⟩)``.
    """
    p1 = abs(amps.alpha) ** 2
    p2 = abs(amps.beta) ** 2
    return p1 * p1 + p2 * p2 + 2.0 * p1 * p2 * overlap.real
