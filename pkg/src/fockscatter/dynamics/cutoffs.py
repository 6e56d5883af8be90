"""Energy and velocity cutoffs by finite-dimensional functional calculus."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from ..models import smooth_step
from ..second_quant import dGamma


@dataclass(frozen=True)
class EnergyWindow:
    """Weight ``chi(E)`` equal to 1 on ``[lo, hi]`` with smooth shoulders of width ``soft``.

    ``soft = 0`` gives the sharp spectral projection of the closed interval.
    """

    lo: float
    hi: float
    soft: float = 0.0

    def weights(self, energies):
        e = np.asarray(energies, dtype=float)
        if self.soft <= 0:
            return ((e >= self.lo) & (e <= self.hi)).astype(float)
        return (smooth_step((e - self.lo + self.soft) / self.soft)
                * smooth_step((self.hi + self.soft - e) / self.soft))

    def operator(self, eig):
        w = self.weights(eig.values)
        return (eig.vectors * w) @ eig.vectors.conj().T

    def apply(self, eig, psi):
        c = eig.vectors.conj().T @ np.asarray(psi, dtype=complex)
        return eig.vectors @ (self.weights(eig.values) * c)


def velocity_weights(lam):
    """``F(s)``: 1 for ``s <= lam^2``, 0 for ``s >= 2 lam^2``, smooth in between."""

    def f(s):
        return 1.0 - smooth_step((np.asarray(s, dtype=float) - lam * lam) / (lam * lam))

    return f


class VelocityCutoff:
    """``f_t = F(dGamma(y^2) / t^2)`` from one eigen-decomposition of ``dGamma(y^2)``.

    ``y2`` is the matrix of ``dGamma(y^2)`` on the boson space; ``copies`` > 1
    returns ``1 (x) f_t`` with an identity factor of that size on the left.
    """

    def __init__(self, y2, lam, copies=1):
        if lam <= 0:
            raise PreconditionError(f"velocity threshold must be positive, got {lam}")
        y2 = np.asarray(y2.toarray() if hasattr(y2, "toarray") else y2, dtype=complex)
        self.values, self.vectors = np.linalg.eigh(0.5 * (y2 + y2.conj().T))
        self.lam = float(lam)
        self.copies = int(copies)
        self._f = velocity_weights(lam)

    def _lift(self, op):
        return op if self.copies == 1 else np.kron(np.eye(self.copies), op)

    def weights(self, t):
        return self._f(self.values / t ** 2)

    def operator(self, t):
        return self._lift((self.vectors * self.weights(t)) @ self.vectors.conj().T)

    def apply(self, t, vec):
        """``f_t vec`` without forming the matrix."""
        v = np.asarray(vec, dtype=complex).reshape(self.copies, -1).T
        c = self.vectors.conj().T @ v
        return (self.vectors @ (self.weights(t)[:, None] * c)).T.reshape(-1)

    def shell(self, t):
        """Spectral projection of ``dGamma(v^2)`` onto ``[lam^2, 2 lam^2]``."""
        s = self.values / t ** 2
        mask = (s >= self.lam ** 2) & (s <= 2 * self.lam ** 2)
        v = self.vectors[:, mask]
        return self._lift(v @ v.conj().T)


@functools.lru_cache(maxsize=32)
def _fock_y2(grid, basis):
    return dGamma(grid.y_op @ grid.y_op, basis).toarray()


def model_velocity_cutoff(model, lam):
    """Velocity cutoff on the particle-Fock space of a model."""
    return VelocityCutoff(_fock_y2(model.grid, model.basis), lam, model.particle.n)


def default_velocity_threshold(grid):
    """``4 max |omega'|``: far above every group velocity on the grid."""
    return 4.0 * float(np.max(np.abs(grid.grad_omega)))
