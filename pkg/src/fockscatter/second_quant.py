"""Creation, annihilation and field operators and the functors dGamma, Gamma.

All operators are returned as ``scipy.sparse.csr_matrix`` over a
:class:`~fockscatter.fock.FockBasis`.  Creation is projected onto the kept
basis, so identities that move quanta upward are exact only on sectors far
enough below ``n_max``; :class:`TruncationReport` records that margin.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError
from .fock import FockBasis, as_matrix


@dataclass(frozen=True)
class TruncationReport:
    safe_subspace_cutoff: int
    leakage_norm: float


@functools.lru_cache(maxsize=64)
def _ladder(basis: FockBasis):
    """Index arrays of all single-quantum raising moves inside the basis."""
    src, dst, amp, mode = [], [], [], []
    states = basis.states
    below = np.flatnonzero(basis.totals < basis.n_max)
    for j in range(basis.n_modes):
        raised = states[below].copy()
        raised[:, j] += 1
        target = basis.lookup(raised)
        src.append(below)
        dst.append(target)
        amp.append(np.sqrt(raised[:, j].astype(float)))
        mode.append(np.full(below.size, j))
    cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0, dtype=int)
    return cat(src), cat(dst), cat(amp), cat(mode)


def _check_vector(h, basis):
    h = np.asarray(h, dtype=complex).ravel()
    if h.size != basis.n_modes:
        raise DimensionError(f"mode vector has {h.size} entries, basis has {basis.n_modes} modes")
    return h


def create(h, basis):
    """Matrix of ``a*(h)``; components leaving the truncation are dropped."""
    h = _check_vector(h, basis)
    src, dst, amp, mode = _ladder(basis)
    return sp.csr_matrix((h[mode] * amp, (dst, src)), shape=(basis.dim, basis.dim))


def annihilate(h, basis):
    """Matrix of ``a(h)``, the adjoint of :func:`create`; antilinear in ``h``."""
    return create(h, basis).conj().T.tocsr()


def field(h, basis):
    """Segal field ``phi(h) = (a(h) + a*(h)) / sqrt(2)``."""
    c = create(h, basis)
    return ((c + c.conj().T) / math.sqrt(2)).tocsr()


def creation_report(h, basis):
    """Safe cutoff and the norm of the dropped top-sector part of ``a*(h)``."""
    h = _check_vector(h, basis)
    return TruncationReport(
        safe_subspace_cutoff=max(basis.n_max - 1, 0),
        leakage_norm=float(np.linalg.norm(h) * math.sqrt(basis.n_max + 1)),
    )


def dGamma(b, basis):
    """Second quantization ``dGamma(b) = sum_ij b_ij a*(e_i) a(e_j)``; number preserving."""
    b = as_matrix(b)
    if b.shape != (basis.n_modes, basis.n_modes):
        raise DimensionError(f"one-body matrix {b.shape} does not match {basis.n_modes} modes")
    src, dst, amp, mode = _ladder(basis)
    if src.size == 0:
        return sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    # every state below n_max has exactly one raising move per mode
    order = np.argsort(src, kind="stable")
    width = basis.n_modes
    up_dst = dst[order].reshape(-1, width)
    up_amp = amp[order].reshape(-1, width)
    up_mode = mode[order].reshape(-1, width)
    slot = np.searchsorted(src[order][::width], src)
    # lower dst -> src by mode j, then raise src -> up_dst by mode i
    rows = up_dst[slot]
    vals = b[up_mode[slot], mode[:, None]] * (amp[:, None] * up_amp[slot])
    cols = np.broadcast_to(dst[:, None], rows.shape)
    out = sp.csr_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                        shape=(basis.dim, basis.dim))
    out.sum_duplicates()
    out.eliminate_zeros()
    return out


# --------------------------------------------------------------------------
# tensor-power functors via (mixed) permanents


@functools.lru_cache(maxsize=64)
def _mode_lists(basis: FockBasis, n):
    """Mode index lists (with repetition) and occupation factorial norms of sector n."""
    block = basis.states[basis.sector_slice(n)]
    lists = np.array([np.repeat(np.arange(basis.n_modes), row) for row in block], dtype=int)
    lists = lists.reshape(block.shape[0], n)
    norms = np.array([math.prod(math.factorial(int(v)) for v in row) for row in block], float)
    return lists, np.sqrt(norms)


def _tensor_block(a, b, rows, cols):
    """Sum over permutations of products of ``a`` entries, with one ``b`` insertion if given."""
    n = rows.shape[1]
    out = np.zeros((rows.shape[0], cols.shape[0]), dtype=complex)
    for perm in itertools.permutations(range(n)):
        factors = [a[rows[:, i][:, None], cols[:, perm[i]][None, :]] for i in range(n)]
        if b is None:
            out += functools.reduce(np.multiply, factors)
            continue
        for k in range(n):
            term = b[rows[:, k][:, None], cols[:, perm[k]][None, :]]
            for i in range(n):
                if i != k:
                    term = term * factors[i]
            out += term
    return out


def _functor(a, b, basis, target):
    target = basis if target is None else target
    if a.shape != (target.n_modes, basis.n_modes):
        raise DimensionError(
            f"one-body map {a.shape} does not match {basis.n_modes} -> {target.n_modes} modes"
        )
    if b is not None and b.shape != a.shape:
        raise DimensionError("dGamma2 operands must have equal shapes")
    if target.n_max != basis.n_max:
        raise DimensionError("domain and codomain must share the total-quanta cutoff")
    blocks = [[None] * (basis.n_max + 1) for _ in range(basis.n_max + 1)]
    for n in range(basis.n_max + 1):
        rows, rnorm = _mode_lists(target, n)
        cols, cnorm = _mode_lists(basis, n)
        if n == 0:
            value = 0.0 if b is not None else 1.0
            blocks[n][n] = sp.csr_matrix(np.array([[value]], dtype=complex))
            continue
        block = _tensor_block(a, b, rows, cols) / rnorm[:, None] / cnorm[None, :]
        blocks[n][n] = sp.csr_matrix(block)
    return sp.block_diag([blocks[n][n] for n in range(basis.n_max + 1)], format="csr")


def Gamma(b, basis, target=None):
    """Tensor-power functor ``Gamma(b)``; ``b`` may map into a larger mode space (``target``)."""
    return _functor(as_matrix(b), None, basis, target)


def dGamma2(a, b, basis, target=None):
    """Mixed functor ``dGamma(a, b)``: one ``b`` insertion among ``a`` factors."""
    return _functor(as_matrix(a), as_matrix(b), basis, target)
