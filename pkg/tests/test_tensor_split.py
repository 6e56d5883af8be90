import numpy as np
import pytest
from hypothesis import given, strategies as st

from fockscatter import build_basis
from fockscatter.errors import PreconditionError
from fockscatter.fock import number_operator
from fockscatter.identities import algebra_suite, split_scale_check
from fockscatter.tensor_split import (SplitSpec, build_tensor_basis, gamma_check_op,
                                      identification_bound_check, partition_op,
                                      scattering_identification, split_unitary, sum_basis)

SIZES = st.sampled_from([(2, 2), (3, 2), (2, 3)])


def _isometric(rng, M):
    theta = rng.uniform(0, np.pi / 2, size=M)
    return SplitSpec.build(np.diag(np.cos(theta)), np.diag(np.sin(theta)), "isometric")


def _summing(rng, M):
    j0 = np.diag(rng.uniform(0, 1, size=M))
    return SplitSpec.build(j0, np.eye(M) - j0, "summing")


@given(SIZES)
def test_unitary_maps_vacuum_to_vacuum_pair(size):
    basis = build_basis(*size)
    tensor = build_tensor_basis(basis)
    bsum = sum_basis(tensor)
    U = split_unitary(bsum, tensor)
    out = U @ np.eye(bsum.dim)[:, 0]
    assert np.allclose(out, tensor.product_state(np.eye(basis.dim)[0], np.eye(basis.dim)[0]))
    eye = np.eye(tensor.dim)
    assert np.allclose((U.conj().T @ U).toarray(), eye)
    assert np.allclose((U @ U.conj().T).toarray(), eye)


@given(SIZES, st.integers(0, 2**31))
def test_geometric_partition_is_isometric(size, seed):
    rng = np.random.default_rng(seed)
    basis = build_basis(*size)
    tensor = build_tensor_basis(basis)
    G = gamma_check_op(_isometric(rng, basis.n_modes), basis, tensor).toarray()
    assert np.linalg.norm(G.conj().T @ G - np.eye(basis.dim), 2) <= 1e-12


@given(SIZES, st.integers(0, 2**31))
def test_partition_intertwines_number(size, seed):
    rng = np.random.default_rng(seed)
    basis = build_basis(*size)
    tensor = build_tensor_basis(basis)
    G = partition_op(_isometric(rng, basis.n_modes), basis, tensor)
    lhs = G @ number_operator(basis)
    rhs = (tensor.number_left + tensor.number_right) @ G
    assert np.linalg.norm((lhs - rhs).toarray(), 2) <= 1e-12


@given(SIZES, st.integers(0, 2**31))
def test_identification_right_inverse(size, seed):
    rng = np.random.default_rng(seed)
    basis = build_basis(*size)
    tensor = build_tensor_basis(basis)
    ident = scattering_identification(tensor, basis)
    prod = ident @ partition_op(_summing(rng, basis.n_modes), basis, tensor)
    assert np.linalg.norm(prod.toarray() - np.eye(basis.dim), 2) <= 1e-12
    vac = tensor.product_state(np.eye(basis.dim)[0], np.eye(basis.dim)[0])
    assert np.allclose(ident @ vac, np.eye(basis.dim)[0])


def test_gamma_check_refuses_summing_partition(rng):
    basis = build_basis(2, 2)
    with pytest.raises(PreconditionError):
        gamma_check_op(_summing(rng, 2), basis, build_tensor_basis(basis))


def test_partition_kind_verified():
    with pytest.raises(PreconditionError):
        SplitSpec.build(np.eye(2), np.eye(2), "summing")


def test_identification_bound_reported():
    tensor = build_tensor_basis(build_basis(2, 2))
    assert identification_bound_check(1, tensor) > 0
    with pytest.raises(PreconditionError):
        identification_bound_check(3, tensor)


@pytest.mark.parametrize("M, n, dim", [(10, 3, 1771), (6, 4, 1820), (30, 2, 1891)])
def test_split_at_scale(M, n, dim):
    rep = split_scale_check(M, n)
    assert rep.tensor_dim == dim
    assert rep.unitarity <= 1e-12 and rep.right_inverse <= 1e-12


def test_algebra_suite_all_pass():
    rows = algebra_suite()
    assert len(rows) == 141
    failed = [(size, c.name, c.residual) for size, c in rows if not c.passes]
    assert not failed
