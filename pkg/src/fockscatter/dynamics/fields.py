"""Asymptotic field operators, the extended wave operator on product vectors,
and decay of products of annihilators."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError, TruncationOverflowError
from ..second_quant import annihilate, create
from .propagation import ConvergenceTrace, Propagator

KINDS = ("annihilate", "create")


def free_evolved(grid, h, t):
    """``h_t = exp(-i omega t) h``."""
    return np.exp(-1j * grid.omega * t) * np.asarray(h, dtype=complex)


def _ladder_op(model, h, kind):
    build = annihilate if kind == "annihilate" else create
    return model.fock_op(build(h, model.basis))


def _propagator(model, prop):
    return prop if prop is not None else Propagator(model.H, eig=model.eig)


@dataclass(frozen=True, eq=False)
class FieldReport:
    trace: ConvergenceTrace
    last: np.ndarray
    monotone_after_burn_in: bool


def asymptotic_field(model, h, psi, tgrid, kind="annihilate", burn_in=None, prop=None,
                     require_pre_recurrence=True):
    """Iterates ``exp(iHt) a#(h_t) exp(-iHt) psi`` over ``tgrid.samples``.

    Raises
    ------
    RecurrenceError
        ``tgrid`` reaches the recurrence estimate.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if require_pre_recurrence:
        tgrid.require_pre_recurrence()
    prop = _propagator(model, prop)
    times = tgrid.samples
    psi_t = prop.evolve(psi, times)
    out = []
    for t, phi in zip(times, psi_t):
        op = _ladder_op(model, free_evolved(model.grid, h, t), kind)
        out.append(prop.evolve(op @ phi, -t))
    out = np.array(out)
    trace = ConvergenceTrace.from_vectors(times, out, label=f"asymptotic {kind}")
    burn = times[len(times) // 4] if burn_in is None else burn_in
    return FieldReport(trace, out[-1], trace.monotone_decreasing(burn))


def energy_support(eig, vec, tol=1e-8):
    """Largest eigenvalue carrying spectral weight ``> tol * |vec|^2``."""
    c = np.abs(eig.vectors.conj().T @ np.asarray(vec, dtype=complex)) ** 2
    mask = c > tol * max(float(np.sum(c)), 1e-300)
    return float(eig.values[mask].max()) if mask.any() else -math.inf


def energy_transport(model, h, psi, vec, tol=1e-8):
    """Shift of the top of the spectral support compared with ``max omega`` on ``supp h``."""
    eig = model.eig
    support = np.abs(np.asarray(h)) > 0
    reach = float(model.grid.omega[support].max()) if support.any() else 0.0
    return energy_support(eig, vec, tol) - energy_support(eig, psi, tol), reach


# --------------------------------------------------------------------------
# extended wave operator on products of creators


def _permanent(a):
    n = a.shape[0]
    return sum(math.prod(a[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def free_product_norm(h_list):
    """``|a*(h_1)...a*(h_n) Omega|``, the square root of the permanent of the Gram matrix."""
    if not h_list:
        return 1.0
    H = np.array(h_list, dtype=complex)
    return math.sqrt(abs(_permanent(H.conj() @ H.T)))


def dominant_sector(model, vec):
    """Boson number carrying the largest weight of ``vec``."""
    v = np.asarray(vec).reshape(model.particle.n, model.basis.dim)
    w = np.sum(np.abs(v) ** 2, axis=0)
    return int(np.argmax(np.bincount(model.basis.totals, weights=w)))


@dataclass(frozen=True, eq=False)
class WaveOperatorReport:
    trace: ConvergenceTrace
    last: np.ndarray
    expected_norm: float
    norm_defect: float
    truncation_weight: float


def wave_operator_apply(model, bound_vec, h_list, T, prop=None):
    """``exp(iHT) a*(h_{1,T})...a*(h_{n,T}) exp(-iHT) bound_vec`` for each ``T``.

    ``expected_norm`` is the CCR value ``|a*(h_1)...a*(h_n) Omega| |bound_vec|``,
    exact for the free product when the ``h_i`` are orthogonal to the bosons
    already present.  ``truncation_weight`` is the weight of ``bound_vec`` in
    sectors whose image leaves the cutoff.

    Raises
    ------
    TruncationOverflowError
        ``n`` exceeds ``n_max`` minus the dominant occupancy.
    """
    n = len(h_list)
    occupancy = dominant_sector(model, bound_vec)
    if n > model.basis.n_max - occupancy:
        raise TruncationOverflowError(
            f"truncation overflow: {n} creators on occupancy {occupancy} exceed n_max={model.basis.n_max}"
        )
    prop = _propagator(model, prop)
    times = np.atleast_1d(np.asarray(T, dtype=float))
    v = np.asarray(bound_vec, dtype=complex).reshape(model.particle.n, model.basis.dim)
    high = model.basis.totals > model.basis.n_max - n
    dropped = float(np.sum(np.abs(v[:, high]) ** 2))
    out = []
    for t in times:
        phi = prop.evolve(bound_vec, t)
        for h in reversed(h_list):
            phi = _ladder_op(model, free_evolved(model.grid, h, t), "create") @ phi
        out.append(prop.evolve(phi, -t))
    out = np.array(out)
    trace = ConvergenceTrace.from_vectors(times, out, label="extended wave operator")
    expected = free_product_norm(list(h_list)) * float(np.linalg.norm(bound_vec))
    defect = float(abs(np.linalg.norm(out[-1]) - expected))
    return WaveOperatorReport(trace, out[-1], expected, defect, dropped)


# --------------------------------------------------------------------------
# products of annihilators


def product_annihilation_decay(model, f_list, phi, tgrid, prop=None, require_pre_recurrence=True):
    """``|a(h_{1,t})...a(h_{n,t}) phi_t|`` with ``phi_t = exp(-iHt) phi``."""
    if require_pre_recurrence:
        tgrid.require_pre_recurrence()
    prop = _propagator(model, prop)
    times = tgrid.samples
    states = prop.evolve(phi, times)
    values = []
    for t, v in zip(times, states):
        for h in reversed(f_list):
            v = _ladder_op(model, free_evolved(model.grid, h, t), "annihilate") @ v
        values.append(np.linalg.norm(v))
    return ConvergenceTrace.from_scalars(times, np.array(values),
                                         label=f"product of {len(f_list)} annihilators")


def peak_decay_ratio(trace):
    """Peak of ``|value|`` over its smallest value after the peak."""
    v = np.abs(trace.values)
    k = int(np.argmax(v))
    tail = v[k:]
    low = float(tail.min())
    return math.inf if low == 0 else float(v[k] / low)
