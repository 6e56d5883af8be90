"""Exact propagation by eigen-decomposition, time grids and convergence traces."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import PreconditionError, RecurrenceError
from ..spectral import eigensolve

BACKENDS = ("eigen", "expm")


class Propagator:
    """``exp(-i H t)`` from one shared eigen-decomposition.

    The ``expm`` backend applies ``scipy.sparse.linalg.expm_multiply`` instead;
    it exists to cross-check the default and is slower for many times.
    """

    def __init__(self, H, backend="eigen", eig=None):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
        self.H = H
        self.backend = backend
        self._eig = eig

    @functools.cached_property
    def eig(self):
        return self._eig if self._eig is not None else eigensolve(self.H)

    @property
    def dim(self):
        return self.H.shape[0]

    def coefficients(self, psi):
        return self.eig.vectors.conj().T @ np.asarray(psi, dtype=complex)

    def evolve(self, psi, t):
        """``exp(-iHt) psi``; an array of times gives one row per time."""
        psi = np.asarray(psi, dtype=complex)
        times = np.atleast_1d(np.asarray(t, dtype=float))
        if self.backend == "expm":
            H = sp.csr_matrix(self.H) if sp.issparse(self.H) else np.asarray(self.H)
            out = np.array([spla.expm_multiply(-1j * s * H, psi) for s in times])
        else:
            c = self.coefficients(psi)
            phases = np.exp(-1j * np.outer(times, self.eig.values))
            out = (phases * c[None, :]) @ self.eig.vectors.T
        return out[0] if np.ndim(t) == 0 else out

    def heisenberg(self, op, psi, t):
        """``exp(iHt) op exp(-iHt) psi`` for a fixed operator."""
        phi = self.evolve(psi, t)
        return self.evolve(op @ phi, -t)

    def energy(self, psi):
        psi = np.asarray(psi, dtype=complex)
        return float(np.real(np.vdot(psi, self.H @ psi)))


def propagate(H, psi, t, backend="eigen"):
    """``exp(-iHt) psi``.  ``H`` may be a matrix or a :class:`Propagator`."""
    prop = H if isinstance(H, Propagator) else Propagator(H, backend)
    return prop.evolve(psi, t)


# --------------------------------------------------------------------------
# time grids


def recurrence_estimate(omega):
    """Shortest revival time of a discrete frequency set.

    Neighbouring distinct frequencies ``w_i < w_{i+1}`` dephase and rephase
    with period ``2 pi / (w_{i+1} - w_i)``; the smallest of these periods bounds
    the window in which the modes still look like a continuum.
    """
    w = np.unique(np.round(np.asarray(omega, dtype=float), 12))
    if w.size < 2:
        return math.inf
    return float(2 * math.pi / np.max(np.diff(w)))


def zero_mode_period(omega):
    """``2 pi / min omega``, the slowest single-mode phase period."""
    w = float(np.min(np.abs(omega)))
    return math.inf if w == 0 else 2 * math.pi / w


@dataclass(frozen=True)
class TimeGrid:
    t_min: float
    t_max: float
    samples: np.ndarray
    recurrence_estimate: float

    @classmethod
    def geometric(cls, t_min, t_max, n, omega=None, recurrence=None):
        if t_min < 1 or t_max <= t_min:
            raise PreconditionError(f"need 1 <= t_min < t_max, got [{t_min}, {t_max}]")
        if recurrence is None:
            recurrence = math.inf if omega is None else recurrence_estimate(omega)
        return cls(float(t_min), float(t_max), np.geomspace(t_min, t_max, int(n)), recurrence)

    @classmethod
    def linear(cls, t_min, t_max, n, omega=None, recurrence=None):
        if t_max <= t_min or t_min < 0:
            raise PreconditionError(f"need 0 <= t_min < t_max, got [{t_min}, {t_max}]")
        if recurrence is None:
            recurrence = math.inf if omega is None else recurrence_estimate(omega)
        return cls(float(t_min), float(t_max), np.linspace(t_min, t_max, int(n)), recurrence)

    def require_pre_recurrence(self):
        """Refuse windows that reach the revival time of the mode set."""
        if self.t_max >= self.recurrence_estimate:
            raise RecurrenceError(self.t_max, self.recurrence_estimate)
        return self


# --------------------------------------------------------------------------
# traces


def _local_slopes(times, values):
    """Finite-difference log-log slope, NaN where a value is not positive."""
    out = np.full(times.size, np.nan)
    ok = (values > 0) & (times > 0)
    if ok.sum() >= 2:
        lt, lv = np.log(times[ok]), np.log(values[ok])
        out[np.flatnonzero(ok)] = np.gradient(lv, lt)
    return out


@dataclass(frozen=True, eq=False)
class ConvergenceTrace:
    """Per-sample value, Cauchy increment and local decay exponent.

    ``values`` are complex scalars; for vector-valued iterates ``values`` holds
    their norms and ``increments`` the norms of successive differences.
    """

    times: np.ndarray
    values: np.ndarray
    increments: np.ndarray
    slopes: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_scalars(cls, times, values, label="", **meta):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=complex)
        inc = np.concatenate([[np.nan], np.abs(np.diff(values))])
        return cls(times, values, inc, _local_slopes(times, np.abs(values)), label, meta)

    @classmethod
    def from_vectors(cls, times, vectors, label="", **meta):
        times = np.asarray(times, dtype=float)
        vectors = np.asarray(vectors, dtype=complex)
        norms = np.linalg.norm(vectors, axis=1).astype(complex)
        inc = np.concatenate([[np.nan], np.linalg.norm(np.diff(vectors, axis=0), axis=1)])
        return cls(times, norms, inc, _local_slopes(times, np.abs(norms)), label, meta)

    def after(self, burn_in):
        return self.times >= burn_in

    def monotone_decreasing(self, burn_in, field_name="increments", rtol=1e-9):
        """Whether the named column is non-increasing on ``t >= burn_in``."""
        col = np.abs(getattr(self, field_name))[self.after(burn_in)]
        col = col[np.isfinite(col)]
        scale = max(float(np.max(col, initial=0.0)), 1e-300)
        return bool(np.all(np.diff(col) <= rtol * scale))

    def fitted_slope(self, burn_in=None, column="values"):
        """Least-squares log-log slope of ``|column|`` against ``t``."""
        mask = np.ones(self.times.size, bool) if burn_in is None else self.after(burn_in)
        y = np.abs(getattr(self, column))
        mask &= np.isfinite(y) & (y > 0) & (self.times > 0)
        if mask.sum() < 2:
            raise PreconditionError("degenerate fit: fewer than two usable samples")
        return float(np.polyfit(np.log(self.times[mask]), np.log(y[mask]), 1)[0])

    def rows(self):
        """Rows ``(t, value_re, value_im, cauchy_increment, fitted_slope)``."""
        return [
            (float(t), float(v.real), float(v.imag), float(i), float(s))
            for t, v, i, s in zip(self.times, self.values, self.increments, self.slopes)
        ]
