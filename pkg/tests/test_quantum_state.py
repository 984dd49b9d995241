import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collapsesim.quantum_state import (
    HermitianOperator,
    PhysicalConstants,
    StateVector,
    apply_operator,
    basis_ket,
    evolve_exact,
    evolve_series,
    inner_product,
    tensor_product,
)
from conftest import random_hermitian, random_state

R2 = 1 / math.sqrt(2)


def eq1_state():
    return StateVector([R2, R2], normalized=True)


def test_inner_product_eq1_with_first_ket():
    assert inner_product(basis_ket(2, 0), eq1_state()) == pytest.approx(R2 + 0j, abs=1e-15)


def test_inner_product_normalized_self():
    assert inner_product(eq1_state(), eq1_state()) == pytest.approx(1 + 0j, abs=1e-15)


def test_inner_product_orthogonal_kets():
    assert inner_product(basis_ket(2, 0), basis_ket(2, 1)) == 0j


def test_inner_product_dimension_mismatch_names_both():
    with pytest.raises(ValueError, match=r"3 vs 2"):
        inner_product(basis_ket(3, 0), basis_ket(2, 0))


@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_inner_product_conjugate_symmetric_and_norm(dim, seed):
    rng = np.random.default_rng(seed)
    a = StateVector(rng.normal(size=dim) + 1j * rng.normal(size=dim))
    b = StateVector(rng.normal(size=dim) + 1j * rng.normal(size=dim))
    assert inner_product(a, b) == pytest.approx(inner_product(b, a).conjugate(), abs=1e-12)
    aa = inner_product(a, a)
    assert aa.imag == 0.0
    assert aa.real >= 0
    assert aa.real == pytest.approx(a.norm() ** 2, rel=1e-12)


def test_tensor_product_dims():
    assert tensor_product(basis_ket(2, 0), basis_ket(4, 0)).dim == 8


def test_tensor_product_basis_placement():
    out = tensor_product(basis_ket(2, 0), basis_ket(4, 0))
    assert out[0] == 1
    assert np.count_nonzero(out.amps) == 1


def test_tensor_product_row_major_and_norm_brute_force():
    rng = np.random.default_rng(5)
    a = StateVector(random_state(rng, 3), normalized=True)
    b = StateVector(random_state(rng, 5), normalized=True)
    out = tensor_product(a, b)
    total = 0.0
    for j in range(3):
        for k in range(5):
            comp = a[j] * b[k]
            assert abs(out[j * 5 + k] - comp) <= 1e-15
            total += abs(comp) ** 2
    assert abs(math.sqrt(total) - 1) <= 1e-12
    assert out.normalized


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_tensor_product_associative(da, db, dc, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (StateVector(random_state(rng, d)) for d in (da, db, dc))
    left = tensor_product(tensor_product(a, b), c)
    right = tensor_product(a, tensor_product(b, c))
    assert left.dim == right.dim
    np.testing.assert_allclose(left.amps, right.amps, atol=1e-12)


def test_apply_operator_zero_and_identity():
    psi = eq1_state()
    zero = HermitianOperator.from_matrix(np.zeros((2, 2)))
    assert np.all(apply_operator(zero, psi).amps == 0)
    ident = HermitianOperator.from_matrix(np.eye(2))
    np.testing.assert_array_equal(apply_operator(ident, psi).amps, psi.amps)


@pytest.mark.parametrize("diagonal", [False, True])
def test_apply_operator_hand_multiplication(diagonal):
    H = HermitianOperator.from_diagonal([3, 5]) if diagonal else HermitianOperator.from_matrix(np.diag([3, 5]))
    out = apply_operator(H, eq1_state())
    np.testing.assert_allclose(out.amps, [3 * R2, 5 * R2], atol=1e-15)


def test_apply_operator_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        apply_operator(HermitianOperator.from_diagonal([1, 2, 3]), eq1_state())


def test_non_hermitian_rejected():
    with pytest.raises(ValueError, match="not Hermitian"):
        HermitianOperator.from_matrix([[0, 1], [0, 0]])


def test_state_vector_is_immutable():
    psi = eq1_state()
    with pytest.raises(ValueError):
        psi.amps[0] = 0


def test_normalized_tag_is_checked():
    with pytest.raises(ValueError, match="normalized"):
        StateVector([1, 1], normalized=True)


def test_constants_reject_nonpositive_hbar():
    with pytest.raises(ValueError, match="hbar"):
        PhysicalConstants(0.0)


@pytest.mark.parametrize("hbar", [1.0, 0.5])
def test_evolve_exact_diagonal_phases(hbar):
    e1, e2, t = 0.7, -1.3, 2.1
    c = PhysicalConstants(hbar)
    out = evolve_exact(HermitianOperator.from_diagonal([e1, e2]), eq1_state(), t, c)
    expected = [R2 * np.exp(-1j * e1 * t / hbar), R2 * np.exp(-1j * e2 * t / hbar)]
    np.testing.assert_allclose(out.amps, expected, atol=1e-15)


def test_evolve_exact_zero_time_identity():
    rng = np.random.default_rng(0)
    psi = StateVector(random_state(rng, 4), normalized=True)
    H = HermitianOperator.from_matrix(random_hermitian(rng, 4))
    np.testing.assert_array_equal(evolve_exact(H, psi, 0.0).amps, psi.amps)


def test_evolve_exact_matches_fine_euler_refinement():
    # Oracle: 10**6 first-order steps, evaluated as a matrix power of (I - iHδt).
    rng = np.random.default_rng(1)
    h = random_hermitian(rng, 4)
    psi = random_state(rng, 4)
    t, n = 1.0, 10**6
    step = np.eye(4) - 1j * h * (t / n)
    reference = np.linalg.matrix_power(step, n) @ psi
    out = evolve_exact(HermitianOperator.from_matrix(h), StateVector(psi, normalized=True), t)
    assert abs(out.norm() - 1) <= 1e-10
    np.testing.assert_allclose(out.amps, reference, atol=1e-4)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 256), st.floats(-20, 20), st.integers(0, 2**32 - 1))
def test_evolve_exact_preserves_norm(dim, t, seed):
    rng = np.random.default_rng(seed)
    H = HermitianOperator.from_matrix(random_hermitian(rng, dim))
    psi = StateVector(random_state(rng, dim), normalized=True)
    assert abs(evolve_exact(H, psi, t).norm() - 1) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 16), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_evolve_exact_group_property(dim, t1, t2, seed):
    rng = np.random.default_rng(seed)
    H = HermitianOperator.from_matrix(random_hermitian(rng, dim))
    psi = StateVector(random_state(rng, dim), normalized=True)
    two = evolve_exact(H, evolve_exact(H, psi, t1), t2)
    one = evolve_exact(H, psi, t1 + t2)
    np.testing.assert_allclose(two.amps, one.amps, atol=1e-9)


@pytest.mark.parametrize("dim,t", [(1, 0.3), (8, 1.7), (32, -4.0)])
def test_evolve_series_matches_eigendecomposition(dim, t):
    rng = np.random.default_rng(dim)
    h = random_hermitian(rng, dim, scale=2.0)
    H = HermitianOperator.from_matrix(h)
    psi = StateVector(random_state(rng, dim), normalized=True)
    out = evolve_series(lambda v: h @ v, psi, t, H.norm_bound())
    np.testing.assert_allclose(out.amps, evolve_exact(H, psi, t).amps, atol=1e-12)


def test_norm_bound_dominates_spectrum():
    rng = np.random.default_rng(3)
    h = random_hermitian(rng, 10)
    assert HermitianOperator.from_matrix(h).norm_bound() >= np.max(np.abs(np.linalg.eigvalsh(h)))


def test_row_block_materializes_diagonal_rows():
    H = HermitianOperator.from_diagonal([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(H.row_block(1, 3), H.entries[1:3])


def test_evolve_series_refuses_unbounded_work():
    H = HermitianOperator.from_diagonal([1e300, 0.0])
    with pytest.raises(RuntimeError, match="substeps"):
        evolve_series(lambda v: H.diagonal_values() * v, eq1_state(), 1.0, H.norm_bound())
