import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fockscatter import TruncationCapError, build_basis, build_mode_grid, number_operator, vacuum
from fockscatter.errors import DimensionError, HypothesisViolation
from fockscatter.fock import (FockState, OneBodyOperator, basis_dimension, dispersion,
                              sector_projector)


def test_two_modes_one_quantum():
    basis = build_basis(2, 1)
    assert [tuple(s) for s in basis.states] == [(0, 0), (1, 0), (0, 1)]


@pytest.mark.parametrize("M, n, dim", [(1, 3, 4), (3, 2, 10), (2, 2, 6), (4, 3, 35)])
def test_dimension_table(M, n, dim):
    assert build_basis(M, n).dim == dim


@given(st.integers(1, 5), st.integers(0, 4))
def test_dimension_is_binomial(M, n):
    basis = build_basis(M, n)
    assert basis.dim == math.comb(M + n, n) == basis_dimension(M, n)


@given(st.integers(1, 4), st.integers(0, 4))
def test_ordering_graded_then_lexicographic(M, n):
    basis = build_basis(M, n)
    assert basis.ordinal((0,) * M) == 0
    totals = basis.totals
    assert np.all(np.diff(totals) >= 0)
    for k in range(n + 1):
        block = [tuple(s) for s in basis.states[basis.sector_slice(k)]]
        assert block == sorted(block, reverse=True)
        assert all(sum(s) == k for s in block)


@given(st.integers(1, 4), st.integers(0, 3))
def test_ordinal_roundtrip(M, n):
    basis = build_basis(M, n)
    for i, s in enumerate(basis.states):
        assert basis.ordinal(s) == i
    assert np.array_equal(basis.lookup(basis.states), np.arange(basis.dim))


def test_lookup_outside_basis():
    basis = build_basis(2, 1)
    assert basis.lookup([[2, 0], [0, 1]]).tolist() == [-1, 2]


def test_cap_enforced():
    with pytest.raises(TruncationCapError):
        build_basis(30, 4, cap=10_000)


def test_number_operator_spectrum():
    basis = build_basis(3, 3)
    assert sorted(set(number_operator(basis).diagonal().real)) == [0, 1, 2, 3]


def test_sector_projector():
    basis = build_basis(3, 2)
    P = sector_projector(basis, 1)
    assert P.diagonal().real.sum() == 4


def test_vacuum_is_first_ordinal():
    st_ = vacuum(build_basis(3, 2))
    assert st_.coeffs[0] == 1 and st_.norm() == 1


def test_state_shape_checked():
    with pytest.raises(DimensionError):
        FockState(np.zeros(3), build_basis(3, 2))


def test_relativistic_rest_energy():
    omega, _ = dispersion("relativistic", 1.0)
    assert omega(0.0) == 1.0


def test_modified_massless_values():
    omega, d_omega = dispersion("modified_massless", 0.5)
    assert omega(1.0) == 1.0
    assert 0.25 <= omega(0.0) <= 0.5
    # value and slope match |k| at the matching point
    assert np.isclose(omega(0.5), 0.5) and np.isclose(d_omega(0.5), 1.0)


def test_massless_grid_through_zero_rejected():
    with pytest.raises(HypothesisViolation):
        build_mode_grid(-1.0, 1.0, 5, "massless")


@given(st.integers(4, 40))
def test_position_operator_hermitian(n):
    grid = build_mode_grid(-2.0, 2.0, n)
    assert np.allclose(grid.y_op, grid.y_op.conj().T, atol=0)


def test_sample_carries_lattice_weight():
    grid = build_mode_grid(-4.0, 4.0, 801)
    h = grid.sample(lambda k: np.exp(-k * k / 2))
    assert abs(np.vdot(h, h).real - math.sqrt(math.pi)) < 1e-6


def test_one_body_hermitian_flag():
    assert OneBodyOperator.from_matrix(np.array([[1, 1j], [-1j, 2]])).hermitian
    assert not OneBodyOperator.from_matrix(np.array([[0, 1], [0, 0]])).hermitian
