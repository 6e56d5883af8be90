"""The convex observable S(y, t) and its Heisenberg derivative.

``S0(y) = int m(s) (y^2/2 - s)_+ ds`` for a smooth bump ``m`` on ``[1, 2]``
with unit mass, and ``S(y, t) = t^(-1+2 delta) S0(y / t^delta)``.  With
``u = y^2/2``, ``M`` the cumulative of ``m`` and ``Sigma(v) = int_1^v s m(s) ds``::

    S0   = u M(u) - Sigma(u)
    S0'  = y M(u)
    S0'' = M(u) + y^2 m(u)

so every derivative is a one-dimensional quadrature over ``[1, min(u, 2)]``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from ..errors import PreconditionError

QUAD_ORDER = 96


def _bump_raw(s):
    x = 2.0 * np.asarray(s, dtype=float) - 3.0
    inside = np.abs(x) < 1
    safe = np.where(inside, 1.0 - x * x, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


@functools.lru_cache(maxsize=None)
def _gauss(order):
    return np.polynomial.legendre.leggauss(order)


def _integrate(f, upper, order=QUAD_ORDER):
    """``int_1^upper f(s) ds`` for each entry of ``upper`` (clipped to ``[1, 2]``)."""
    upper = np.clip(np.asarray(upper, dtype=float), 1.0, 2.0)
    x, w = _gauss(order)
    half = 0.5 * (upper - 1.0)
    s = 1.0 + half[..., None] * (x + 1.0)
    return np.sum(w * f(s), axis=-1) * half


@dataclass(frozen=True)
class SFunction:
    """Tabulated profile with evaluators for ``S0`` and the scaled ``S(y, t)``.

    Attributes
    ----------
    delta : float
        Scaling exponent in ``(0, 1)``.
    norm : float
        Normalization of the raw bump so that ``int m = 1``.
    b : float
        ``-int s m(s) ds``.
    """

    delta: float
    norm: float
    b: float

    @classmethod
    def build(cls, delta=0.5, order=QUAD_ORDER):
        if not 0.0 < delta < 1.0:
            raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
        norm = float(_integrate(_bump_raw, 2.0, order))
        b = -float(_integrate(lambda s: s * _bump_raw(s), 2.0, order)) / norm
        return cls(float(delta), norm, b)

    def profile(self, s):
        return _bump_raw(s) / self.norm

    def cumulative(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u >= 2.0, 1.0, _integrate(self.profile, u))

    def first_moment(self, u):
        u = np.asarray(u, dtype=float)
        return np.where(u >= 2.0, -self.b, _integrate(lambda s: s * self.profile(s), u))

    # -- S0 and its derivatives --------------------------------------------

    def s0(self, y):
        u = 0.5 * np.asarray(y, dtype=float) ** 2
        body = u * self.cumulative(u) - self.first_moment(u)
        return np.where(u <= 1.0, 0.0, np.where(u >= 2.0, u + self.b, body))

    def grad_s0(self, y):
        y = np.asarray(y, dtype=float)
        return y * self.cumulative(0.5 * y * y)

    def hess_s0(self, y):
        y = np.asarray(y, dtype=float)
        u = 0.5 * y * y
        return self.cumulative(u) + y * y * self.profile(u)

    # -- scaled S(y, t) -----------------------------------------------------

    def _z(self, y, t):
        return np.asarray(y, dtype=float) / t ** self.delta

    def S(self, y, t):
        return t ** (-1 + 2 * self.delta) * self.s0(self._z(y, t))

    def grad_S(self, y, t):
        return t ** (-1 + self.delta) * self.grad_s0(self._z(y, t))

    def hess_S(self, y, t):
        return self.hess_s0(self._z(y, t)) / t

    def dt_S(self, y, t):
        z = self._z(y, t)
        d = self.delta
        return t ** (-2 + 2 * d) * ((2 * d - 1) * self.s0(z) - d * z * self.grad_s0(z))


# --------------------------------------------------------------------------
# rate checks


@dataclass(frozen=True)
class SlopeFit:
    name: str
    slope: float
    expected: float
    tol: float
    sups: np.ndarray

    @property
    def passes(self):
        return abs(self.slope - self.expected) <= self.tol


@dataclass(frozen=True)
class SFunctionReport:
    delta: float
    gradient: SlopeFit
    time_derivative: SlopeFit
    flat_region_max: float
    far_region_max: float
    min_convexity: float

    @property
    def passes(self):
        return (self.gradient.passes and self.time_derivative.passes
                and self.min_convexity >= 0.0)


def _loglog(t, v):
    return float(np.polyfit(np.log(t), np.log(v), 1)[0])


def s_function_checks(S, grid, t_samples, tol=0.15):
    """Fit the decay of ``sup_y |grad S - y/t|`` and ``sup_y |dS/dt + y^2/2t^2|``.

    ``grid`` is a 1-D array of ``y`` samples; it must reach ``|y| > 2 t^delta``
    for the largest ``t`` so the suprema are attained inside it.  Also reports
    the largest deviations from the two flat-region identities and the
    smallest sampled ``S0''``.

    Raises
    ------
    PreconditionError
        Fewer than two time samples, or a sample below 1.
    """
    y = np.asarray(grid, dtype=float)
    t = np.asarray(t_samples, dtype=float)
    if t.size < 2:
        raise PreconditionError("degenerate fit: need at least two time samples")
    if np.any(t < 1):
        raise PreconditionError("time samples must lie in [1, inf)")
    g_sup = np.array([np.max(np.abs(S.grad_S(y, s) - y / s)) for s in t])
    d_sup = np.array([np.max(np.abs(S.dt_S(y, s) + y * y / (2 * s * s))) for s in t])
    d = S.delta
    flat, far = 0.0, 0.0
    for s in t:
        inner = 0.5 * y * y <= s ** (2 * d)
        outer = 0.5 * y * y >= 2 * s ** (2 * d)
        vals = S.S(y, s)
        flat = max(flat, float(np.max(np.abs(vals[inner]), initial=0.0)))
        resid = vals[outer] - y[outer] ** 2 / (2 * s) - S.b * s ** (-1 + 2 * d)
        far = max(far, float(np.max(np.abs(resid), initial=0.0)))
    z = np.linspace(-3.0, 3.0, 2001)
    return SFunctionReport(
        d,
        SlopeFit("gradient", _loglog(t, g_sup), -1 + d, tol, g_sup),
        SlopeFit("time_derivative", _loglog(t, d_sup), -2 + 2 * d, tol, d_sup),
        flat, far, float(np.min(S.hess_s0(z))),
    )


# --------------------------------------------------------------------------
# Heisenberg derivative


def _omega_op(grid):
    return grid.omega_op() if hasattr(grid, "omega_op") else np.diag(grid.omega).astype(complex)


def S_op(S, grid, t):
    """One-body matrix of ``S(y, t)``."""
    return grid.position_function(lambda y: S.S(y, t))


def heisenberg_dS(S, grid, t):
    """``dS = i[omega, S] + dS/dt`` as a Hermitian one-body matrix."""
    w = _omega_op(grid)
    s = S_op(S, grid, t)
    out = 1j * (w @ s - s @ w) + grid.position_function(lambda y: S.dt_S(y, t))
    return 0.5 * (out + out.conj().T)


def symbol_dS(S, grid, t):
    """Leading symbol ``(omega' grad S + grad S omega')/2 + dS/dt``."""
    v = grid.velocity_op()
    g = grid.position_function(lambda y: S.grad_S(y, t))
    return 0.5 * (v @ g + g @ v) + grid.position_function(lambda y: S.dt_S(y, t))


def dS_residual(S, grid, t, region=None):
    """Norm of ``dS`` minus its leading symbol, optionally compressed by ``region``."""
    r = heisenberg_dS(S, grid, t) - symbol_dS(S, grid, t)
    if region is not None:
        r = region @ r @ region
    return float(np.linalg.norm(r, 2))


def free_velocity_form(grid, t):
    """``(omega' - y/t)^2 / t``, the free second Heisenberg derivative of ``y^2/2t``."""
    v = grid.velocity_op() - grid.position_function(lambda y: y / t)
    return (v.conj().T @ v) / t


def second_derivative_y2(grid, t):
    """Literal ``[i omega, [i omega, y^2/2t]] + 2 [i omega, d/dt y^2/2t] + d^2/dt^2 y^2/2t``."""
    w = _omega_op(grid)
    y2 = grid.position_function(lambda y: y * y)
    c = lambda a, b: 1j * (a @ b - b @ a)
    out = c(w, c(w, y2)) / (2 * t) - c(w, y2) / t ** 2 + y2 / t ** 3
    return 0.5 * (out + out.conj().T)
