"""Factorization F(h0 + h_inf) = F(h0) (x) F(h_inf) and the scattering identification.

The tensor side carries a joint total-quanta cutoff ``N0 + N_inf <= n_max``.
In the occupation basis the unitary ``U`` is a permutation: the occupation
tuple over the doubled mode set splits into the pair of its halves.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, PreconditionError
from .fock import FockBasis, as_matrix, build_basis
from .second_quant import Gamma, dGamma2

PARTITION_KINDS = ("isometric", "summing")


@dataclass(frozen=True, eq=False)
class SplitSpec:
    """Pair ``(j0, j_inf)`` defining ``j h = (j0 h, j_inf h)``, with a verified kind."""

    j0: np.ndarray
    j_inf: np.ndarray
    partition_kind: str

    @classmethod
    def build(cls, j0, j_inf, partition_kind, tol=1e-12):
        j0, j_inf = as_matrix(j0), as_matrix(j_inf)
        if j0.shape != j_inf.shape or j0.shape[0] != j0.shape[1]:
            raise DimensionError("partition operators must be square and of equal shape")
        if partition_kind not in PARTITION_KINDS:
            raise ValueError(f"unknown partition kind {partition_kind!r}")
        eye = np.eye(j0.shape[0])
        if partition_kind == "isometric":
            defect = j0.conj().T @ j0 + j_inf.conj().T @ j_inf - eye
        else:
            defect = j0 + j_inf - eye
        err = float(np.linalg.norm(defect, 2))
        if err > tol:
            raise PreconditionError(
                f"declared {partition_kind} partition has defect {err:.3e} > {tol:.1e}"
            )
        return cls(j0, j_inf, partition_kind)

    @property
    def stacked(self):
        """The map ``j : h -> h + h`` as a ``2M x M`` matrix."""
        return np.vstack([self.j0, self.j_inf])


@dataclass(frozen=True, eq=False)
class TensorBasis:
    """Joint-cutoff basis of ``F0 (x) F_inf`` ordered by total ``n`` then ``k = N_inf``."""

    basis0: FockBasis
    basis_inf: FockBasis
    n_max: int
    pairs: np.ndarray
    index: dict
    blocks: tuple

    @property
    def dim(self):
        return self.pairs.shape[0]

    @functools.cached_property
    def embedding(self):
        """Isometry from the joint-cutoff space into the full Kronecker product."""
        rows = self.pairs[:, 0] * self.basis_inf.dim + self.pairs[:, 1]
        full = self.basis0.dim * self.basis_inf.dim
        return sp.csr_matrix(
            (np.ones(self.dim, dtype=complex), (rows, np.arange(self.dim))), shape=(full, self.dim)
        )

    def left(self, op):
        """``op (x) 1`` restricted to the joint cutoff."""
        e = self.embedding
        return (e.T @ sp.kron(op, sp.identity(self.basis_inf.dim), format="csr") @ e).tocsr()

    def right(self, op):
        """``1 (x) op`` restricted to the joint cutoff."""
        e = self.embedding
        return (e.T @ sp.kron(sp.identity(self.basis0.dim), op, format="csr") @ e).tocsr()

    def product_state(self, psi0, psi_inf):
        return self.embedding.T @ np.kron(psi0, psi_inf)

    @functools.cached_property
    def number_left(self):
        return sp.diags(self.basis0.totals[self.pairs[:, 0]].astype(complex), format="csr")

    @functools.cached_property
    def number_right(self):
        return sp.diags(self.basis_inf.totals[self.pairs[:, 1]].astype(complex), format="csr")


def build_tensor_basis(basis0, basis_inf=None, n_max=None):
    """Tensor basis whose factors are truncated at the joint cutoff."""
    basis_inf = basis0 if basis_inf is None else basis_inf
    n_max = basis0.n_max if n_max is None else n_max
    if basis0.n_max < n_max or basis_inf.n_max < n_max:
        raise DimensionError("factor bases must cover the joint cutoff")
    pairs, blocks = [], []
    for n in range(n_max + 1):
        for k in range(n + 1):
            s0 = range(*basis0.sector_slice(n - k).indices(basis0.dim))
            s1 = range(*basis_inf.sector_slice(k).indices(basis_inf.dim))
            start = len(pairs)
            pairs.extend((i, j) for i in s0 for j in s1)
            blocks.append((n, k, start, len(pairs)))
    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    arr.setflags(write=False)
    index = {p: i for i, p in enumerate(pairs)}
    return TensorBasis(basis0, basis_inf, n_max, arr, index, tuple(blocks))


def sum_basis(tensor):
    """Basis of ``F(h0 + h_inf)`` matching a tensor basis."""
    return build_basis(tensor.basis0.n_modes + tensor.basis_inf.n_modes, tensor.n_max)


def split_unitary(basis_sum, tensor):
    """Matrix of ``U : F(h0 + h_inf) -> F(h0) (x) F(h_inf)`` on the joint truncation."""
    m0 = tensor.basis0.n_modes
    if basis_sum.n_modes != m0 + tensor.basis_inf.n_modes:
        raise DimensionError("sum basis mode count must equal M0 + M_inf")
    if basis_sum.n_max != tensor.n_max:
        raise DimensionError(
            f"cutoffs differ: sum side {basis_sum.n_max}, tensor side {tensor.n_max}"
        )
    states = basis_sum.states
    i0 = tensor.basis0.lookup(states[:, :m0])
    i1 = tensor.basis_inf.lookup(states[:, m0:])
    rows = np.array([tensor.index[(a, b)] for a, b in zip(i0, i1)], dtype=np.int64)
    return sp.csr_matrix(
        (np.ones(basis_sum.dim, dtype=complex), (rows, np.arange(basis_sum.dim))),
        shape=(tensor.dim, basis_sum.dim),
    )


@functools.lru_cache(maxsize=16)
def _sum_and_unitary(tensor):
    basis_sum = sum_basis(tensor)
    return basis_sum, split_unitary(basis_sum, tensor)


def gamma_check_op(spec, basis, tensor):
    """Geometric partition ``Gamma_check(j) = U Gamma(j) : F -> F (x) F``."""
    if spec.partition_kind != "isometric":
        raise PreconditionError("gamma_check_op expects an isometric partition")
    return partition_op(spec, basis, tensor)


def partition_op(spec, basis, tensor):
    """``U Gamma(j)`` for any partition; isometric only when ``j* j = 1``."""
    basis_sum, u = _sum_and_unitary(tensor)
    return (u @ Gamma(spec.stacked, basis, basis_sum)).tocsr()


def partition_dgamma(a, b, basis, tensor):
    """``dGamma_check(a, b) = U dGamma(a, b)`` for maps ``a, b : h -> h + h``."""
    basis_sum, u = _sum_and_unitary(tensor)
    return (u @ dGamma2(a, b, basis, basis_sum)).tocsr()


def scattering_identification(tensor, basis):
    """``I = Gamma(iota) U*`` with ``iota(h0, h_inf) = h0 + h_inf``."""
    if tensor.basis0.n_modes != basis.n_modes or tensor.basis_inf.n_modes != basis.n_modes:
        raise DimensionError("identification needs equal mode counts on all factors")
    basis_sum, u = _sum_and_unitary(tensor)
    eye = np.eye(basis.n_modes)
    iota = np.hstack([eye, eye])
    return (Gamma(iota, basis_sum, basis) @ u.conj().T).tocsr()


def identification_bound_check(k, tensor):
    """Operator norm of ``I ((N+1)^{-k} (x) chi(N_inf <= k))``."""
    if k > tensor.n_max:
        raise PreconditionError(f"k={k} exceeds the cutoff {tensor.n_max}")
    ident = scattering_identification(tensor, build_basis(tensor.basis0.n_modes, tensor.n_max))
    n0 = tensor.basis0.totals[tensor.pairs[:, 0]]
    n1 = tensor.basis_inf.totals[tensor.pairs[:, 1]]
    weight = np.where(n1 <= k, (n0 + 1.0) ** (-k), 0.0)
    return float(np.linalg.norm((ident @ sp.diags(weight)).toarray(), 2))

