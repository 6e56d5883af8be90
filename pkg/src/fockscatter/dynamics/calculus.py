"""Commutator expansions on a periodic position grid.

Here position is an exact multiplication operator and functions of momentum
are applied by the unitary DFT, so ``i[g(p), f(eps x)]`` can be compared with
its leading term ``eps g'(p) f'(eps x)`` without finite-difference error.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError
from ..fock import build_basis, dispersion
from ..models import smooth_step
from ..second_quant import Gamma, dGamma


@dataclass(frozen=True, eq=False)
class PositionGrid:
    """Periodic grid ``x_j`` with DFT momenta ``p_j``; ``omega`` is a symbol in ``p``."""

    x: np.ndarray
    p: np.ndarray
    omega: np.ndarray
    grad_omega: np.ndarray
    dispersion: str
    m: float

    @property
    def n_modes(self):
        return self.x.size

    @functools.cached_property
    def fourier(self):
        n = self.x.size
        return np.fft.fft(np.eye(n), axis=0, norm="ortho")

    def momentum_function(self, values):
        """Matrix of a momentum symbol given by its values on ``p``."""
        F = self.fourier
        return F.conj().T @ (np.asarray(values)[:, None] * F)

    def position_function(self, f):
        return np.diag(np.asarray(f(self.x), dtype=complex))

    def omega_op(self):
        return self.momentum_function(self.omega)

    def velocity_op(self):
        return self.momentum_function(self.grad_omega)

    def momentum_window(self, fraction):
        """Projection onto ``|p| <= fraction * p_max``, away from the zone edge."""
        p_max = float(np.max(np.abs(self.p)))
        return self.momentum_function((np.abs(self.p) <= fraction * p_max).astype(complex))


def build_position_grid(n, length, dispersion_name="relativistic", m=1.0):
    x = (np.arange(n) - n // 2) * (length / n)
    p = 2 * math.pi * np.fft.fftfreq(n, d=length / n)
    w, dw = dispersion(dispersion_name, m)
    return PositionGrid(x, p, np.asarray(w(p), float), np.asarray(dw(p), float),
                        dispersion_name, m)


# --------------------------------------------------------------------------
# first-order expansion of a commutator


@dataclass(frozen=True)
class ExpansionReport:
    eps: np.ndarray
    remainders: dict
    slopes: dict
    tol: float

    @property
    def passes(self):
        return all(abs(s - 2.0) <= self.tol for s in self.slopes.values())


def _fit(x, y):
    if np.count_nonzero(np.asarray(y) > 0) < 2:
        raise PreconditionError("degenerate fit: fewer than two non-zero remainders")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def commutator_remainders(grid, g_symbol, f_symbol, eps, fraction=0.5):
    """Norms of ``i[g(p), f(eps x)]`` minus ``eps g'(p) f'(eps x)`` in both factor orders.

    ``g_symbol`` and ``f_symbol`` are pairs ``(fun, derivative)``.  The
    remainders are measured on momenta ``|p| <= fraction * p_max``: a symbol
    that is not periodic in ``p`` has a derivative jump where the DFT grid
    wraps, and that jump is an artifact of the grid.
    """
    g, dg = g_symbol
    f, df = f_symbol
    G = grid.momentum_function(g(grid.p))
    dG = grid.momentum_function(dg(grid.p))
    Fx = np.diag(f(eps * grid.x).astype(complex))
    dF = np.diag(df(eps * grid.x).astype(complex))
    comm = 1j * (G @ Fx - Fx @ G)
    P = grid.momentum_window(fraction)
    left = (comm - eps * dG @ dF) @ P
    right = (comm - eps * dF @ dG) @ P
    return float(np.linalg.norm(left, 2)), float(np.linalg.norm(right, 2))


def commutator_expansion_check(grid, g_symbol, f_symbol, eps_samples, tol=0.2, fraction=0.5):
    """Log-log slope in ``eps`` of the first-order commutator remainder.

    Raises
    ------
    PreconditionError
        Fewer than two non-zero remainders in either ordering.
    """
    eps = np.asarray(eps_samples, dtype=float)
    rem = np.array([commutator_remainders(grid, g_symbol, f_symbol, e, fraction) for e in eps])
    out = {"g'(p) f'(eps x)": rem[:, 0], "f'(eps x) g'(p)": rem[:, 1]}
    slopes = {k: _fit(eps, v) for k, v in out.items()}
    return ExpansionReport(eps, out, slopes, tol)


# --------------------------------------------------------------------------
# commutator with a function of dGamma(v^2)


def velocity_cutoff(lam, shape="gaussian"):
    """Decreasing cutoff ``F(s)`` on the scale ``lam^2`` and its derivative.

    ``gaussian``: ``exp(-s / lam^2)``.  ``step``: 1 below ``lam^2``, 0 above
    ``2 lam^2`` with a smooth transition; its sharper transition needs much
    larger ``lam t`` before the expansion reaches its asymptotic rate.
    """
    if shape == "gaussian":
        return (lambda s: np.exp(-np.asarray(s) / lam ** 2),
                lambda s: -np.exp(-np.asarray(s) / lam ** 2) / lam ** 2)
    if shape != "step":
        raise ValueError(f"unknown cutoff shape {shape!r}")

    def f(s):
        return 1.0 - smooth_step((np.asarray(s) - lam * lam) / (lam * lam))

    def df(s, h=1e-6):
        s = np.asarray(s, dtype=float)
        return (f(s + h) - f(s - h)) / (2 * h)

    return f, df


@dataclass(frozen=True)
class FunctionalCommutatorReport:
    times: np.ndarray
    residuals: np.ndarray
    symmetric_residuals: np.ndarray
    leading: np.ndarray
    slope: float


def functional_commutator_check(grid, n_max, times, lam, fraction=0.5, shape="gaussian"):
    """``|[i dGamma(omega), F(dGamma(v^2))] - F'(dGamma(v^2)) dGamma(2 y omega') / t^2|``.

    ``v = y/t`` and ``F`` is :func:`velocity_cutoff`.  The one-body operators
    live on ``grid`` and are second quantized on the ``n_max`` truncation, which
    ``dGamma`` leaves invariant.  Residuals are taken on states whose quanta all
    have ``|p| <= fraction * p_max``.

    ``symmetric_residuals`` use ``dGamma(omega' y + y omega')`` instead.  On a
    periodic grid ``y`` is a sawtooth, so ``[omega', y]`` is not ``i omega''``
    and the ``omega' y`` ordering carries a box artifact that decays more
    slowly; the slope is fitted to the ``y omega'`` ordering.
    """
    basis = build_basis(grid.n_modes, n_max)
    y = grid.position_function(lambda x: x)
    w = grid.omega_op()
    vel = grid.velocity_op()
    W = dGamma(w, basis).toarray()
    Y2 = dGamma(y @ y, basis).toarray()
    lead_op = dGamma(2 * y @ vel, basis).toarray()
    sym = dGamma(vel @ y + y @ vel, basis).toarray()
    P = Gamma(grid.momentum_window(fraction), basis).toarray()
    evals, evecs = np.linalg.eigh(0.5 * (Y2 + Y2.conj().T))
    f, df = velocity_cutoff(lam, shape)
    res, res_sym, lead = [], [], []
    for t in times:
        Fv = (evecs * f(evals / t ** 2)) @ evecs.conj().T
        dFv = (evecs * df(evals / t ** 2)) @ evecs.conj().T
        comm = 1j * (W @ Fv - Fv @ W)
        first = dFv @ lead_op / t ** 2
        res.append(float(np.linalg.norm((comm - first) @ P, 2)))
        res_sym.append(float(np.linalg.norm((comm - dFv @ sym / t ** 2) @ P, 2)))
        lead.append(float(np.linalg.norm(first @ P, 2)))
    times = np.asarray(times, dtype=float)
    res = np.array(res)
    return FunctionalCommutatorReport(times, res, np.array(res_sym), np.array(lead),
                                      _fit(times, res))
