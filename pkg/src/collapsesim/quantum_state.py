"""
Dense complex state vectors and Hermitian operators.

Amplitudes are plain Python ``complex`` numbers; vectors and matrices are
read-only ``numpy`` arrays of ``complex128``. Composite (tensor product)
indices are row-major: component ``(j, k)`` of ``a ⊗ b`` lives at
``j * b.dim + k``.

Classes
-------
StateVector
    Immutable amplitude vector with an optional "normalized" tag.
HermitianOperator
    Immutable Hermitian matrix. Operators flagged ``diagonal`` keep only
    their diagonal and take the phase-multiplication fast path.
PhysicalConstants
    Holds ħ (natural units by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
UNITARITY_TOL = 1e-10


def _frozen(values, dtype=np.complex128) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def _check_dims(what: str, left: int, right: int) -> None:
    if left != right:
        raise ValueError(f"{what}: dimension mismatch ({left} vs {right})")


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.hbar) and self.hbar > 0):
            raise ValueError(f"hbar must be finite and > 0, got {self.hbar}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """A finite-dimensional complex amplitude vector.

    Parameters
    ----------
    amps : array_like
        Complex amplitudes. Copied and stored read-only.
    normalized : bool
        If True the norm is checked to be 1 within ``NORM_TOL``.
    """

    amps: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        amps = _frozen(self.amps)
        if amps.ndim != 1 or amps.size < 1:
            raise ValueError(f"state vector must be 1-D and non-empty, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state vector contains non-finite amplitudes")
        object.__setattr__(self, "amps", amps)
        if self.normalized:
            n2 = float(np.vdot(amps, amps).real)
            if abs(n2 - 1.0) > NORM_TOL:
                raise ValueError(f"state tagged normalized has squared norm {n2!r}")

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def __getitem__(self, index) -> complex:
        return complex(self.amps[index])

    def __len__(self) -> int:
        return self.dim

    def renormalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amps / n, normalized=True)


def _state(amps: np.ndarray, keep_tag: bool) -> StateVector:
    # Carry the "normalized" tag through an operation only while it still holds.
    if keep_tag and abs(float(np.vdot(amps, amps).real) - 1.0) <= NORM_TOL:
        return StateVector(amps, normalized=True)
    return StateVector(amps)


def basis_ket(dim: int, index: int) -> StateVector:
    """Return the computational basis vector ``|index⟩`` of dimension ``dim``."""
    if not 0 <= index < dim:
        raise ValueError(f"basis index {index} out of range for dim {dim}")
    amps = np.zeros(dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps, normalized=True)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense Hermitian matrix, or a real diagonal when ``diagonal`` is set.

    Use :meth:`from_matrix` or :meth:`from_diagonal` rather than the raw
    constructor.
    """

    data: np.ndarray
    diagonal: bool = False
    _bound: float = field(default=0.0, repr=False)

    @classmethod
    def from_matrix(cls, matrix, tol: float = HERMITIAN_TOL) -> "HermitianOperator":
        m = _frozen(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"operator must be a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator contains non-finite entries")
        err = float(np.max(np.abs(m - m.conj().T)))
        if err > tol:
            raise ValueError(f"matrix is not Hermitian (max |H - H^†| = {err:.3e})")
        bound = float(np.max(np.sum(np.abs(m), axis=1)))
        return cls(m, diagonal=False, _bound=bound)

    @classmethod
    def from_diagonal(cls, values) -> "HermitianOperator":
        d = _frozen(values, dtype=np.float64)
        if d.ndim != 1 or d.size < 1:
            raise ValueError(f"diagonal must be 1-D and non-empty, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("diagonal contains non-finite entries")
        return cls(d, diagonal=True, _bound=float(np.max(np.abs(d))))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def entries(self) -> np.ndarray:
        """The full ``dim × dim`` matrix (materialized for diagonal operators)."""
        if self.diagonal:
            return np.diag(self.data.astype(np.complex128))
        return self.data

    def diagonal_values(self) -> np.ndarray:
        if self.diagonal:
            return self.data
        return np.real(np.diag(self.data))

    def norm_bound(self) -> float:
        """Upper bound on the spectral radius (max absolute row sum)."""
        return self._bound

    def row_block(self, start: int, stop: int, out: Optional[np.ndarray] = None) -> np.ndarray:
        """Dense rows ``start:stop`` of the matrix, zeros included."""
        if not self.diagonal:
            return self.data[start:stop]
        n = stop - start
        if out is None:
            out = np.zeros((n, self.dim), dtype=np.complex128)
        else:
            out = out[:n]
            out.fill(0.0)
        rows = np.arange(n)
        out[rows, start + rows] = self.data[start:stop]
        return out


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Return ``⟨a|b⟩ = Σ_j conj(a_j) b_j``."""
    _check_dims("inner_product", a.dim, b.dim)
    return complex(np.vdot(a.amps, b.amps))


def tensor_product(a: StateVector, b: StateVector) -> StateVector:
    return _state(np.kron(a.amps, b.amps), a.normalized and b.normalized)


def apply_operator(H: HermitianOperator, psi: StateVector) -> StateVector:
    _check_dims("apply_operator", H.dim, psi.dim)
    if H.diagonal:
        return StateVector(H.data * psi.amps)
    return StateVector(H.data @ psi.amps)


def evolve_exact(
    H: HermitianOperator,
    psi: StateVector,
    t: float,
    c: PhysicalConstants = PhysicalConstants(),
) -> StateVector:
    """Apply ``exp(-iHt/ħ)`` to ``psi``.

    Diagonal operators multiply each amplitude by its phase; anything else
    goes through a Hermitian eigendecomposition.
    """
    _check_dims("evolve_exact", H.dim, psi.dim)
    if t == 0:
        return psi
    if H.diagonal:
        return _state(np.exp(-1j * H.data * (t / c.hbar)) * psi.amps, psi.normalized)
    evals, evecs = np.linalg.eigh(H.data)
    coeffs = evecs.conj().T @ psi.amps
    out = evecs @ (np.exp(-1j * evals * (t / c.hbar)) * coeffs)
    return _state(out, psi.normalized)


def evolve_series(
    action: Callable[[np.ndarray], np.ndarray],
    psi: StateVector,
    t: float,
    norm_bound: float,
    c: PhysicalConstants = PhysicalConstants(),
    max_terms: int = 60,
    max_substeps: int = 10**6,
) -> StateVector:
    """Apply ``exp(-iHt/ħ)`` given only the action ``v -> H v``.

    The interval is cut into substeps with ``norm_bound * τ / ħ <= 1`` and the
    Taylor series of each substep is summed until the next term falls below
    double-precision resolution of the partial sum. Nothing about the
    structure of ``H`` is assumed beyond Hermiticity and the bound.
    """
    if norm_bound < 0:
        raise ValueError(f"norm_bound must be >= 0, got {norm_bound}")
    if t == 0 or norm_bound == 0:
        return psi
    scaled = norm_bound * abs(t) / c.hbar
    if not math.isfinite(scaled) or scaled > max_substeps:
        raise RuntimeError(
            f"norm_bound * |t| / hbar = {scaled:.3g} needs more than {max_substeps} substeps"
        )
    substeps = max(1, math.ceil(scaled))
    factor = -1j * (t / substeps) / c.hbar
    eps = np.finfo(np.float64).eps
    v = psi.amps.copy()
    for _ in range(substeps):
        total = v.copy()
        term = v
        for k in range(1, max_terms + 1):
            term = action(term) * (factor / k)
            total += term
            if np.linalg.norm(term) <= eps * np.linalg.norm(total):
                break
        else:
            raise RuntimeError(f"Taylor series did not converge in {max_terms} terms")
        v = total
    return _state(v, psi.normalized)
