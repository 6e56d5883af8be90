"""The asymptotic velocity observable and propagation-estimate diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from ..second_quant import dGamma
from .cutoffs import default_velocity_threshold, model_velocity_cutoff
from .propagation import ConvergenceTrace, Propagator
from .sfunction import heisenberg_dS, second_derivative_y2


def limit_fit(times, values):
    """Intercept ``L`` of a least-squares fit ``L + A/t + B/t^2``."""
    t = np.asarray(times, dtype=float)
    v = np.real(np.asarray(values))
    if t.size < 3:
        raise PreconditionError("degenerate fit: need at least three samples")
    design = np.column_stack([np.ones_like(t), 1.0 / t, 1.0 / t ** 2])
    coef, *_ = np.linalg.lstsq(design, v, rcond=None)
    return float(coef[0])


def check_window(window, thresholds, margin=0.0):
    """Refuse an energy window that touches a threshold or a genuine eigenvalue."""
    if thresholds is None:
        return
    for p in thresholds.points():
        if window.lo - window.soft - margin < p < window.hi + window.soft + margin:
            raise PreconditionError(
                f"window [{window.lo:.6g}, {window.hi:.6g}] meets the threshold set at {p:.6g}"
            )


def _expect(vec, op):
    return complex(np.vdot(vec, op @ vec))


@dataclass(frozen=True, eq=False)
class ObservableReport:
    observable: ConvergenceTrace
    comparator: ConvergenceTrace
    limit: float
    comparator_limit: float

    @property
    def agreement(self):
        """Relative gap between the two limit estimates."""
        return abs(self.limit - self.comparator_limit) / max(abs(self.comparator_limit), 1e-300)


def asymptotic_observable(model, window, S, tgrid, psi, lam=None, thresholds=None,
                          margin=0.0, burn_in=None, prop=None, require_pre_recurrence=True):
    """Trace of ``<psi_t, chi f dGamma(dS) f chi psi_t>`` and of ``<dGamma(y^2/2t^2)>``.

    ``chi`` is ``window`` applied to the eigenvalues of ``H``, ``f`` the velocity
    cutoff at ``lam`` (default ``4 max|omega'|``).  Limits are intercepts of an
    ``L + A/t + B/t^2`` fit over ``t >= burn_in``.

    Raises
    ------
    PreconditionError
        The window meets ``thresholds`` (when given).
    RecurrenceError
        ``tgrid`` reaches the recurrence estimate.
    """
    check_window(window, thresholds, margin)
    if require_pre_recurrence:
        tgrid.require_pre_recurrence()
    prop = prop if prop is not None else Propagator(model.H, eig=model.eig)
    lam = default_velocity_threshold(model.grid) if lam is None else lam
    cutoff = model_velocity_cutoff(model, lam)
    chi_psi = window.apply(prop.eig, psi)
    y2 = model.fock_op(dGamma(model.grid.y_op @ model.grid.y_op, model.basis))
    times = tgrid.samples
    states = prop.evolve(chi_psi, times)
    w_vals, c_vals = [], []
    for t, phi in zip(times, states):
        ds = model.fock_op(dGamma(heisenberg_dS(S, model.grid, t), model.basis))
        f_phi = cutoff.apply(t, phi)
        w_vals.append(_expect(f_phi, ds))
        c_vals.append(_expect(phi, y2) / (2 * t * t))
    w_trace = ConvergenceTrace.from_scalars(times, w_vals, label="asymptotic observable")
    c_trace = ConvergenceTrace.from_scalars(times, c_vals, label="dGamma(y^2/2t^2)")
    mask = np.ones(times.size, bool) if burn_in is None else times >= burn_in
    return ObservableReport(w_trace, c_trace, limit_fit(times[mask], np.array(w_vals)[mask]),
                            limit_fit(times[mask], np.array(c_vals)[mask]))


@dataclass(frozen=True, eq=False)
class PropagationReport:
    shell: ConvergenceTrace
    quadratic_form: ConvergenceTrace
    partial_integral: np.ndarray
    increments_non_increasing: bool


def _trapezoid_partial(times, values):
    v = np.real(np.asarray(values))
    steps = 0.5 * (v[1:] + v[:-1]) * np.diff(times)
    return np.concatenate([[0.0], np.cumsum(steps)]), steps


def propagation_estimate_diagnostic(model, window, S, tgrid, psi, lam=None, burn_in=None,
                                    prop=None):
    """Integrands of the two propagation estimates along ``psi_t``.

    ``shell``: ``(1/t) <chi psi_t, 1[lam^2 <= dGamma(v^2) <= 2 lam^2] chi psi_t>``.
    ``quadratic_form``: ``<f chi psi_t, dGamma((omega' - v) S'' (omega' - v)) f chi psi_t>``.
    The partial integral of the shell integrand is reported, with whether its
    trapezoid increments are non-increasing after ``burn_in``.
    """
    prop = prop if prop is not None else Propagator(model.H, eig=model.eig)
    lam = default_velocity_threshold(model.grid) if lam is None else lam
    cutoff = model_velocity_cutoff(model, lam)
    grid = model.grid
    chi_psi = window.apply(prop.eig, psi)
    times = tgrid.samples
    states = prop.evolve(chi_psi, times)
    shell_vals, form_vals = [], []
    for t, phi in zip(times, states):
        shell_vals.append(_expect(phi, cutoff.shell(t)) / t)
        rel = grid.velocity_op() - grid.y_op / t
        hess = grid.position_function(lambda y: S.hess_S(y, t))
        form = model.fock_op(dGamma(rel.conj().T @ hess @ rel, model.basis))
        f_phi = cutoff.apply(t, phi)
        form_vals.append(_expect(f_phi, form))
    partial, steps = _trapezoid_partial(times, shell_vals)
    burn = times[len(times) // 4] if burn_in is None else burn_in
    tail = steps[times[1:] >= burn]
    scale = max(float(np.max(np.abs(steps), initial=0.0)), 1e-300)
    ok = bool(np.all(np.diff(tail) <= 1e-9 * scale))
    return PropagationReport(
        ConvergenceTrace.from_scalars(times, shell_vals, label="velocity shell"),
        ConvergenceTrace.from_scalars(times, form_vals, label="convexity form"),
        partial, ok)


@dataclass(frozen=True)
class FreePositivityReport:
    """Split of the literal free second Heisenberg derivative of ``y^2/2t``.

    With ``B = i[omega, y]`` the literal derivative equals
    ``(B - y/t)^2 / t + (i[omega, B] y + y i[omega, B]) / 2t``.  The first
    term is PSD; the second is a lattice term that vanishes in the continuum,
    where ``B`` is multiplication by ``omega'``.
    """

    times: np.ndarray
    form_min: np.ndarray
    identity_residual: np.ndarray
    lattice_term: np.ndarray

    def passes(self, tol=1e-10):
        return bool(np.all(self.form_min >= -tol) and np.all(self.identity_residual <= tol))


def free_positivity(grid, times):
    """Per ``t``: relative smallest eigenvalue of ``(B - y/t)^2 / t``, the relative
    defect of the decomposition in :class:`FreePositivityReport`, and the norm of
    the lattice term relative to the full derivative."""
    w = grid.omega_op()
    y = grid.y_op
    comm = lambda a, b: 1j * (a @ b - b @ a)
    B = comm(w, y)
    dB = comm(w, B)
    fmin, resid, lattice = [], [], []
    for t in times:
        d2 = second_derivative_y2(grid, t)
        rel = B - y / t
        form = rel.conj().T @ rel / t
        extra = (dB @ y + y @ dB) / (2 * t)
        scale = max(float(np.linalg.norm(d2, 2)), 1e-300)
        ev = np.linalg.eigvalsh(0.5 * (form + form.conj().T))
        fmin.append(ev[0] / max(np.abs(ev).max(), 1e-300))
        resid.append(float(np.linalg.norm(d2 - form - extra, 2)) / scale)
        lattice.append(float(np.linalg.norm(extra, 2)) / scale)
    return FreePositivityReport(np.asarray(times, dtype=float), np.array(fmin), np.array(resid),
                                np.array(lattice))
