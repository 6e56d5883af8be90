"""Mode grids and truncated occupation-number bases.

A :class:`ModeGrid` discretizes the one-boson momentum space on a uniform
1-D lattice.  Mode amplitudes absorb a factor ``sqrt(dk)`` so that the
plain Euclidean inner product on mode vectors approximates the continuum
``L^2`` product and the discrete commutation relations are delta-normalized.

A :class:`FockBasis` enumerates occupation tuples with a total-quanta cutoff,
graded by particle number and ordered lexicographically (descending) within a
grade, so number sectors occupy contiguous index ranges.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, HypothesisViolation, TruncationCapError

DEFAULT_DIM_CAP = 50_000

DISPERSIONS = ("relativistic", "modified_massless", "massless")


# --------------------------------------------------------------------------
# dispersion relations


def dispersion(name, m):
    """Return ``(omega, d_omega)`` callables for a named dispersion relation.

    ``relativistic``: ``sqrt(k^2 + m^2)``.
    ``massless``: ``|k|``; only usable on grids that avoid ``k = 0``.
    ``modified_massless``: ``|k|`` for ``|k| >= m``; on ``|k| < m`` the cubic
    Hermite interpolant with ``omega(0) = m/2``, ``omega'(0) = 0`` that matches
    value and slope at ``|k| = m``.  The cubic collapses to ``(k^2 + m^2)/(2m)``.
    """
    if name == "relativistic":
        if m <= 0:
            raise HypothesisViolation(f"relativistic dispersion needs m > 0, got {m}")
        return (lambda k: np.sqrt(k * k + m * m),
                lambda k: k / np.sqrt(k * k + m * m))
    if name == "massless":
        return np.abs, np.sign
    if name == "modified_massless":
        if m <= 0:
            raise HypothesisViolation(f"modified dispersion needs m > 0, got {m}")

        def omega(k):
            k = np.asarray(k, dtype=float)
            return np.where(np.abs(k) >= m, np.abs(k), (k * k + m * m) / (2 * m))

        def d_omega(k):
            k = np.asarray(k, dtype=float)
            return np.where(np.abs(k) >= m, np.sign(k), k / m)

        return omega, d_omega
    raise ValueError(f"unknown dispersion {name!r}; expected one of {DISPERSIONS}")


def central_difference(n, dk):
    """Antisymmetric central-difference matrix; stencil legs leaving the grid are dropped."""
    off = np.full(n - 1, 0.5 / dk)
    return np.diag(off, 1) - np.diag(off, -1)


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """Uniform 1-D momentum lattice with dispersion and position operator.

    Attributes
    ----------
    k_points : ndarray
        Momenta ``k_j``.
    omega : ndarray
        Dispersion values ``omega(k_j)``.
    grad_omega : ndarray
        ``omega'`` from the same central-difference stencil as ``y_op``
        (second-order one-sided at the two ends).
    y_op : ndarray
        Hermitian matrix of ``y = i d/dk``.
    dk : float
        Lattice spacing.
    mass_gap : float
        ``min_j omega(k_j)``.
    dispersion : str
        Name of the dispersion relation.
    m : float
        Mass / infrared parameter the dispersion was built with.
    """

    k_points: np.ndarray
    omega: np.ndarray
    grad_omega: np.ndarray
    y_op: np.ndarray
    dk: float
    mass_gap: float
    dispersion: str
    m: float

    @property
    def n_modes(self):
        return self.k_points.size

    def sample(self, f):
        """Mode vector of a continuum function: ``f(k_j) * sqrt(dk)``."""
        values = f(self.k_points) if callable(f) else np.asarray(f)
        return np.asarray(values, dtype=complex) * math.sqrt(self.dk)

    def omega_op(self):
        return np.diag(self.omega).astype(complex)

    @functools.cached_property
    def y_eigh(self):
        """Eigen-decomposition of ``y_op``, used for functions of position."""
        return np.linalg.eigh(self.y_op)

    def position_function(self, f):
        """One-body matrix ``f(y)`` by spectral calculus on ``y_op``."""
        vals, vecs = self.y_eigh
        return (vecs * f(vals)) @ vecs.conj().T

    def velocity_op(self):
        """Symmetrized ``grad_omega`` multiplication, diagonal in momentum."""
        return np.diag(self.grad_omega).astype(complex)

    def derivative_bounds(self):
        """Finite-difference sup norms of ``omega'`` and ``omega''`` on the grid."""
        second = np.gradient(self.grad_omega, self.dk, edge_order=2)
        return float(np.max(np.abs(self.grad_omega))), float(np.max(np.abs(second)))


def build_mode_grid(k_min, k_max, n_modes, dispersion_name="relativistic", m=1.0):
    """Build a uniform :class:`ModeGrid` on ``[k_min, k_max]`` with ``n_modes`` points.

    Raises
    ------
    HypothesisViolation
        If the dispersion is not bounded below by a positive constant on the grid.
    """
    if not k_min < k_max:
        raise ValueError(f"need k_min < k_max, got {k_min}, {k_max}")
    if n_modes < 2:
        raise ValueError(f"need at least two modes, got {n_modes}")
    omega_fn, _ = dispersion(dispersion_name, m)
    k = np.linspace(k_min, k_max, n_modes)
    dk = float(k[1] - k[0])
    omega = np.asarray(omega_fn(k), dtype=float)
    gap = float(omega.min())
    if gap <= 0:
        raise HypothesisViolation(
            f"dispersion {dispersion_name!r} reaches min omega = {gap:.3g} <= 0 on the grid"
        )
    grad = np.gradient(omega, dk, edge_order=2)
    y = 1j * central_difference(n_modes, dk)
    for arr in (k, omega, grad, y):
        arr.setflags(write=False)
    return ModeGrid(k, omega, grad, y, dk, gap, dispersion_name, float(m))


# --------------------------------------------------------------------------
# occupation-number basis


def _compositions(n, m):
    """Occupation tuples of ``m`` modes with total ``n``, descending lexicographic.

    Sorted multisets of mode indices in lexicographic order map onto exactly
    this order of occupation tuples.
    """
    for picks in itertools.combinations_with_replacement(range(m), n):
        occ = [0] * m
        for j in picks:
            occ[j] += 1
        yield tuple(occ)


def basis_dimension(n_modes, n_max):
    return math.comb(n_modes + n_max, n_max)


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation-number basis with total-quanta cutoff ``n_max``.

    ``states[i]`` is the occupation tuple of ordinal ``i``; ``index`` maps a
    tuple back to its ordinal.  Sector ``n`` occupies ``sector_slice(n)``.
    """

    n_modes: int
    n_max: int
    states: np.ndarray
    index: dict
    offsets: tuple

    @property
    def dim(self):
        return self.states.shape[0]

    @functools.cached_property
    def totals(self):
        return self.states.sum(axis=1)

    def sector_slice(self, n):
        return slice(self.offsets[n], self.offsets[n + 1])

    def ordinal(self, occupation):
        return self.index[tuple(int(v) for v in occupation)]

    def lookup(self, rows):
        """Ordinals of occupation rows; ``-1`` where a row is outside the basis."""
        rows = np.asarray(rows)
        out = np.full(rows.shape[0], -1, dtype=np.int64)
        for i, row in enumerate(rows):
            out[i] = self.index.get(tuple(row.tolist()), -1)
        return out


def build_basis(n_modes, n_max, cap=DEFAULT_DIM_CAP):
    """Enumerate the truncated Fock basis; vacuum is ordinal 0.

    Raises
    ------
    TruncationCapError
        If ``C(n_modes + n_max, n_max)`` exceeds ``cap``.
    """
    if n_modes < 1 or n_max < 0:
        raise ValueError(f"need n_modes >= 1 and n_max >= 0, got {n_modes}, {n_max}")
    dim = basis_dimension(n_modes, n_max)
    if cap is not None and dim > cap:
        raise TruncationCapError(dim, cap)
    rows = []
    offsets = [0]
    for n in range(n_max + 1):
        rows.extend(_compositions(n, n_modes))
        offsets.append(len(rows))
    states = np.array(rows, dtype=np.int64).reshape(dim, n_modes)
    states.setflags(write=False)
    index = {row: i for i, row in enumerate(rows)}
    return FockBasis(n_modes, n_max, states, index, tuple(offsets))


@dataclass(frozen=True, eq=False)
class FockState:
    """Coefficient vector over a :class:`FockBasis`."""

    coeffs: np.ndarray
    basis: FockBasis

    def __post_init__(self):
        if self.coeffs.shape != (self.basis.dim,):
            raise DimensionError(
                f"state has shape {self.coeffs.shape}, basis dimension is {self.basis.dim}"
            )

    def norm(self):
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True, eq=False)
class OneBodyOperator:
    """Matrix on mode space with a verified Hermiticity flag."""

    matrix: np.ndarray
    hermitian: bool

    @classmethod
    def from_matrix(cls, matrix, tol=1e-12):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2:
            raise DimensionError("one-body operator must be a matrix")
        scale = max(1.0, float(np.max(np.abs(matrix), initial=0.0)))
        herm = matrix.shape[0] == matrix.shape[1] and bool(
            np.max(np.abs(matrix - matrix.conj().T), initial=0.0) <= tol * scale
        )
        return cls(matrix, herm)


def as_matrix(b):
    """Accept a :class:`OneBodyOperator` or array-like and return a complex array."""
    if isinstance(b, OneBodyOperator):
        return b.matrix
    return np.asarray(b, dtype=complex)


def vacuum(basis):
    coeffs = np.zeros(basis.dim, dtype=complex)
    coeffs[0] = 1.0
    return FockState(coeffs, basis)


def number_operator(basis):
    return sp.diags(basis.totals.astype(complex), format="csr")


def sector_projector(basis, n_hi, n_lo=0):
    """Diagonal projector onto sectors ``n_lo <= N <= n_hi``."""
    mask = (basis.totals >= n_lo) & (basis.totals <= n_hi)
    return sp.diags(mask.astype(complex), format="csr")
