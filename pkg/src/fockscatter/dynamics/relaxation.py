"""Relaxation of an excited state to the ground state, observed through ``B (x) Weyl(h)``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import PreconditionError
from ..second_quant import field
from .propagation import ConvergenceTrace, Propagator


def excitation_cap(model, tol=1e-14):
    """``E0 + (n_max + 1) * min{omega(k) : G(k) != 0}``.

    Below this energy no eigenvector of the truncated model needs more bosons
    of the coupled modes than the cutoff keeps, so spectral windows under it
    are not shaped by the truncation.
    """
    coupled = np.any(np.abs(model.form.G) > tol, axis=0)
    if not coupled.any():
        raise PreconditionError("excitation cap undefined: the form factor vanishes")
    w_min = float(model.grid.omega[coupled].min())
    return float(model.eig.values[0]) + (model.basis.n_max + 1) * w_min


def weyl_operator(model, h):
    """``exp(i phi(h))`` on the truncated Fock space, by dense exponentiation.

    The truncated field is a bounded Hermitian matrix, so this is unitary on
    the truncation; it agrees with the Weyl operator on vectors whose
    ``exp(i phi(h))`` image stays away from the top sector.
    """
    return scipy.linalg.expm(1j * field(h, model.basis).toarray())


def relaxation_observable(model, B, h):
    """``B (x) exp(i phi(h))`` on the particle-Fock space."""
    return np.kron(np.asarray(B, dtype=complex), weyl_operator(model, h))


@dataclass(frozen=True, eq=False)
class RelaxationReport:
    trace: ConvergenceTrace
    target: complex
    deviation: np.ndarray
    fraction: float
    crossing_time: float
    fitted_rate: float
    fgr_rate: float
    discarded: float = 0.0

    @property
    def relaxed(self):
        return math.isfinite(self.crossing_time)

    @property
    def rate_ratio(self):
        if not (self.fgr_rate and math.isfinite(self.fitted_rate)):
            return math.nan
        return self.fitted_rate / self.fgr_rate

    def rate_within(self, factor=2.0):
        r = self.rate_ratio
        return math.isfinite(r) and 1.0 / factor <= r <= factor


def _decay_rate(times, dev, stop):
    mask = (times <= stop) & (dev > 0)
    if mask.sum() < 2:
        return math.nan
    return float(-np.polyfit(times[mask], np.log(dev[mask]), 1)[0])


def relaxation_experiment(model, psi0, A, tgrid, fraction=0.15, mu=None, fgr_rate=None,
                          project=False, prop=None, tol=1e-10, require_pre_recurrence=True):
    """Trace ``<psi_t, A psi_t>`` and its deviation from ``<psi_g, A psi_g> |psi0|^2``.

    With ``project`` the initial vector is first replaced by ``1(H <= mu) psi0``
    and the removed weight is reported as ``discarded``; otherwise ``psi0``
    must already lie in that range.

    ``crossing_time`` is the first sample where the deviation drops below
    ``fraction`` of its initial value (``inf`` if it never does).
    ``fitted_rate`` is ``-d log(deviation)/dt`` fitted up to that crossing,
    comparable with a golden-rule rate passed as ``fgr_rate``.

    Raises
    ------
    PreconditionError
        ``mu`` misconfigured: above the excitation cap, or ``psi0`` carries
        weight above ``mu``.
    RecurrenceError
        ``tgrid`` reaches the recurrence estimate.
    """
    cap = excitation_cap(model)
    mu = cap if mu is None else float(mu)
    if mu > cap:
        raise PreconditionError(f"mu misconfigured: {mu:.6g} exceeds the excitation cap {cap:.6g}")
    if require_pre_recurrence:
        tgrid.require_pre_recurrence()
    prop = prop if prop is not None else Propagator(model.H, eig=model.eig)
    psi0 = np.asarray(psi0, dtype=complex)
    coeffs = prop.coefficients(psi0)
    high = prop.eig.values > mu
    above = float(np.sum(np.abs(coeffs[high]) ** 2))
    if project:
        coeffs = np.where(high, 0.0, coeffs)
        psi0 = prop.eig.vectors @ coeffs
    elif above > tol * float(np.vdot(psi0, psi0).real):
        raise PreconditionError(f"mu misconfigured: psi0 has weight {above:.3e} above mu={mu:.6g}")
    A = A.toarray() if hasattr(A, "toarray") else np.asarray(A, dtype=complex)
    ground = prop.eig.vectors[:, 0]
    target = complex(np.vdot(ground, A @ ground)) * float(np.vdot(psi0, psi0).real)
    times = tgrid.samples
    states = prop.evolve(psi0, times)
    values = np.einsum("ti,ij,tj->t", states.conj(), A, states)
    trace = ConvergenceTrace.from_scalars(times, values, label="relaxation")
    dev = np.abs(values - target)
    below = np.flatnonzero(dev < fraction * dev[0])
    crossing = float(times[below[0]]) if below.size else math.inf
    rate = _decay_rate(times, dev, crossing if below.size else times[-1])
    return RelaxationReport(trace, target, dev, float(fraction), crossing, rate,
                            float(fgr_rate) if fgr_rate is not None else math.nan,
                            above if project else 0.0)


def golden_rule_rate(gamma, g):
    """Population decay rate ``pi g^2 gamma`` for the coupling ``g phi(G)``,
    given the width ``gamma = int |A(k)|^2 delta(omega(k) - dE) dk``."""
    return math.pi * g * g * float(np.real(gamma))
