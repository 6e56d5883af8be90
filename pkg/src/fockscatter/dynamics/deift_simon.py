"""Finite-time Deift-Simon wave operator on the doubled Fock space.

A summing partition ``j0(y/uT) + j_inf(y/uT) = 1`` splits the bosons into a
part near the particle (``F0``) and an escaping part (``F_inf``).  For each
``T`` the vector

    W+(T) psi = exp(i H~ T) chi~ f~ Q_T f chi exp(-i H T) psi,
    Q_T       = dGamma_check(j, dj) dGamma(S) + Gamma_check(j) dGamma(dS),

is built by dense linear algebra; ``Q_T`` is the free Heisenberg derivative
of ``Gamma_check(j_T) dGamma(S_T)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..errors import PreconditionError, TruncationOverflowError
from ..models import extended_hamiltonian, smooth_step
from ..second_quant import dGamma, dGamma2
from ..spectral import eigensolve
from ..tensor_split import SplitSpec, partition_dgamma, partition_op, scattering_identification
from .cutoffs import VelocityCutoff, default_velocity_threshold, model_velocity_cutoff
from .propagation import ConvergenceTrace, Propagator
from .sfunction import S_op, heisenberg_dS


def _inner(x):
    """``j0``: 1 on ``|x| <= 1``, 0 on ``|x| >= 2``."""
    return 1.0 - smooth_step(np.abs(x) - 1.0)


def _inner_slope(x, h=1e-6):
    """``d j0 / d|x|`` by a central difference of the smooth step."""
    a = np.abs(x)
    return -(smooth_step(a + h - 1.0) - smooth_step(a - h - 1.0)) / (2 * h)


def summing_partition(grid, u, T):
    """``(j0(y/uT), 1 - j0(y/uT))`` as a verified summing :class:`SplitSpec`."""
    if u <= 0 or T <= 0:
        raise PreconditionError(f"partition scale and time must be positive, got u={u}, T={T}")
    j0 = grid.position_function(lambda y: _inner(y / (u * T)))
    return SplitSpec.build(j0, np.eye(grid.n_modes) - j0, "summing", tol=1e-10)


def partition_derivative(grid, spec, u, T):
    """``dj = i[omega, j] + dj/dT`` for both halves; they sum to zero."""
    w = grid.omega_op()
    dt = grid.position_function(lambda y: _inner_slope(y / (u * T)) * (-np.abs(y) / (u * T * T)))
    d0 = 1j * (w @ spec.j0 - spec.j0 @ w) + dt
    return np.vstack([d0, -d0])


@dataclass(frozen=True, eq=False)
class ExtendedSystem:
    """``H~`` on ``C^n (x) F0 (x) F_inf`` with the pieces ``W+`` needs."""

    model: object
    tensor: object
    H: sp.csr_matrix
    eig: object
    y2: np.ndarray

    @functools.cached_property
    def identification(self):
        return sp.kron(sp.identity(self.model.particle.n),
                       scattering_identification(self.tensor, self.model.basis), format="csr")

    @functools.cached_property
    def vacuum_projector(self):
        """``1 (x) 1 (x) P_Omega`` on the escaping factor, as a diagonal mask."""
        mask = self.tensor.basis_inf.totals[self.tensor.pairs[:, 1]] == 0
        return np.tile(mask, self.model.particle.n)

    def lift(self, op):
        """``1_particle (x) op`` for ``op : F -> F0 (x) F_inf``."""
        return sp.kron(sp.identity(self.model.particle.n), op, format="csr")


def extended_system(model, n_max=None):
    """Assemble and diagonalize ``H~``.

    Raises
    ------
    TruncationOverflowError
        The doubled space has a smaller cutoff than the model.
    """
    n_max = model.basis.n_max if n_max is None else n_max
    if n_max < model.basis.n_max:
        raise TruncationOverflowError(
            f"truncation overflow on the doubled space: joint cutoff {n_max} "
            f"is below the model cutoff {model.basis.n_max}")
    H, tensor = extended_hamiltonian(model, n_max=n_max)
    y2 = dGamma(model.grid.y_op @ model.grid.y_op, model.basis)
    joint = (tensor.left(y2) + tensor.right(y2)).toarray()
    return ExtendedSystem(model, tensor, H, eigensolve(H), joint)


def q_operator(model, tensor, S, u, T):
    """``Q_T : F -> F0 (x) F_inf`` and the partition used to build it."""
    grid, basis = model.grid, model.basis
    spec = summing_partition(grid, u, T)
    dj = partition_derivative(grid, spec, u, T)
    first = partition_dgamma(spec.stacked, dj, basis, tensor) @ dGamma(S_op(S, grid, T), basis)
    second = partition_op(spec, basis, tensor) @ dGamma(heisenberg_dS(S, grid, T), basis)
    return (first + second).tocsr(), spec


@dataclass(frozen=True, eq=False)
class DeiftSimonReport:
    trace: ConvergenceTrace
    last: np.ndarray
    vacuum_sector: np.ndarray
    composition: ConvergenceTrace
    intertwining: np.ndarray


def deift_simon(model, window, S, u, tgrid, psi, lam=None, ext=None, prop=None,
                intertwine_s=(0.05, 0.1), require_pre_recurrence=True):
    """Iterates ``W+(T) psi`` over ``tgrid.samples``.

    ``vacuum_sector`` holds ``|(1 (x) P_Omega) W+(T) psi|``.  ``composition``
    traces ``|chi f dGamma(dS) f chi psi_T - I chi~ f~ Q_T f chi psi_T|``, the
    defect of ``I exp(-i H~ T) W+(T)`` reproducing the transported asymptotic
    observable.  ``intertwining[i, j]`` is
    ``|exp(-i H~ s_j) W+(T_i) psi - W+(T_i) exp(-i H s_j) psi|``.

    Raises
    ------
    TruncationOverflowError
        The doubled space has a smaller cutoff than the model.
    RecurrenceError
        ``tgrid`` reaches the recurrence estimate.
    """
    if require_pre_recurrence:
        tgrid.require_pre_recurrence()
    prop = prop if prop is not None else Propagator(model.H, eig=model.eig)
    ext = ext if ext is not None else extended_system(model)
    lam = default_velocity_threshold(model.grid) if lam is None else lam
    n = model.particle.n
    f = model_velocity_cutoff(model, lam)
    f_ext = VelocityCutoff(ext.y2, lam, n)
    ext_prop = Propagator(ext.H, eig=ext.eig)
    ds_fock = lambda T: model.fock_op(dGamma(heisenberg_dS(S, model.grid, T), model.basis))

    def transported(T, vec):
        """``chi~ f~ Q_T f chi vec_T`` and ``chi f dGamma(dS) f chi vec_T``."""
        phi = prop.evolve(window.apply(prop.eig, vec), T)
        f_phi = f.apply(T, phi)
        q, _ = q_operator(model, ext.tensor, S, u, T)
        out = window.apply(ext.eig, f_ext.apply(T, ext.lift(q) @ f_phi))
        return out, window.apply(prop.eig, f.apply(T, ds_fock(T) @ f_phi))

    times = tgrid.samples
    states, vac, comp, inter = [], [], [], []
    for T in times:
        moved, observed = transported(T, psi)
        w_plus = ext_prop.evolve(moved, -T)
        states.append(w_plus)
        vac.append(float(np.linalg.norm(w_plus[ext.vacuum_projector])))
        comp.append(float(np.linalg.norm(observed - ext.identification @ moved)))
        row = []
        for s in intertwine_s:
            lhs = ext_prop.evolve(w_plus, s)
            rhs = ext_prop.evolve(transported(T, prop.evolve(psi, s))[0], -T)
            row.append(float(np.linalg.norm(lhs - rhs)))
        inter.append(row)
    states = np.array(states)
    return DeiftSimonReport(
        ConvergenceTrace.from_vectors(times, states, label="Deift-Simon iterate", u=u),
        states[-1],
        np.array(vac),
        ConvergenceTrace.from_scalars(times, np.array(comp), label="composition residual", u=u),
        np.array(inter),
    )


# --------------------------------------------------------------------------
# vacuum-sector leakage


def leakage_bound(model, window, u, T, lam=None):
    """``|chi f dGamma(j0, j0 y^2) f chi| / 2T^2`` with ``j0 = j0(y/uT)``.

    This finite-``T`` operator dominates the vacuum-sector component of
    ``W+(T)``; its norm is at most ``2 u^2 |(N+1)^{1/2} chi|^2`` once
    ``j0 y^2 <= 4 u^2 T^2`` holds on the grid.
    """
    lam = default_velocity_threshold(model.grid) if lam is None else lam
    grid, basis = model.grid, model.basis
    j0 = grid.position_function(lambda y: _inner(y / (u * T)))
    op = model.fock_op(dGamma2(j0, j0 @ grid.y_op @ grid.y_op, basis)).toarray()
    f = model_velocity_cutoff(model, lam).operator(T)
    chi = window.operator(model.eig)
    full = chi @ f @ op @ f @ chi
    return float(np.linalg.norm(full, 2)) / (2 * T * T)


@dataclass(frozen=True)
class LeakageReport:
    u: np.ndarray
    values: np.ndarray
    bound: np.ndarray
    slope: float
    tol: float

    @property
    def passes(self):
        return abs(self.slope - 2.0) <= self.tol and bool(np.all(self.values <= self.bound * (1 + 1e-9)))


def leakage_sweep(model, window, u_samples, T, lam=None, tol=0.3):
    """Log-log slope in ``u`` of :func:`leakage_bound` at a fixed ``T``.

    ``bound`` is ``2 u^2 |(N+1)^{1/2} chi|^2``.

    Raises
    ------
    PreconditionError
        ``2 u T`` exceeds the largest position on the grid, where ``y^2``
        saturates and the quadratic scaling cannot show.
    """
    u = np.asarray(u_samples, dtype=float)
    y_max = float(np.max(np.abs(model.grid.y_eigh[0])))
    if 2 * u.max() * T > y_max:
        raise PreconditionError(
            f"partition radius 2uT = {2 * u.max() * T:.3g} exceeds the grid reach {y_max:.3g}")
    vals = np.array([leakage_bound(model, window, x, T, lam) for x in u])
    if np.count_nonzero(vals > 0) < 2:
        raise PreconditionError("degenerate fit: fewer than two non-zero leakage values")
    chi = window.operator(model.eig)
    n_half = np.sqrt(model.number.diagonal().real + 1.0)
    norm = float(np.linalg.norm(n_half[:, None] * chi, 2)) ** 2
    slope = float(np.polyfit(np.log(u), np.log(vals), 1)[0])
    return LeakageReport(u, vals, 2 * u * u * norm, slope, tol)
