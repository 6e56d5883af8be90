"""Polarization frames on R^3 minus an axis and the north/south isometry.

No smooth frame of transverse polarization vectors exists on all of
``R^3 \\ {0}``.  The north frame is smooth away from a cone around the negative
z-axis, the south frame away from a cone around the positive z-axis, and
the two are related by a pointwise rotation ``R(k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .models import smooth_step

SYSTEMS = ("north", "south")


@dataclass(frozen=True)
class ExcludedZones:
    """Open cones of half-angle ``angle`` about the -z (for north) or +z (for south) axis,
    together with the ball of radius ``radius``."""

    angle: float = math.pi / 6
    radius: float = 0.25

    def contains(self, k, system):
        k = np.asarray(k, dtype=float)
        r = float(np.linalg.norm(k))
        if r < self.radius:
            return True
        c = k[2] / r
        threshold = math.cos(self.angle)
        return c < -threshold if system == "north" else c > threshold


DEFAULT_ZONES = ExcludedZones()


def _frame(k, system):
    a, b, c = np.asarray(k, dtype=float) / np.linalg.norm(k)
    s = c if system == "north" else -c
    d = 1.0 + s
    e1 = np.array([1.0 - a * a / d, -a * b / d, -a if system == "north" else a])
    e2 = np.array([-a * b / d, 1.0 - b * b / d, -b if system == "north" else b])
    return e1, e2


def polarization_bases(k, system, zones=DEFAULT_ZONES):
    """Transverse orthonormal frame ``(e1, e2)`` and the rotation ``R`` to the other system.

    ``R`` satisfies ``e_lambda^north = sum_mu e_mu^south R[mu, lambda]``.

    Raises
    ------
    DomainError
        ``k`` lies in the excluded zone of the requested system (or of the other
        system, which ``R`` also needs).
    """
    if system not in SYSTEMS:
        raise ValueError(f"system must be one of {SYSTEMS}")
    if zones.contains(k, system):
        raise DomainError(f"k={tuple(np.round(k, 6))} is in the excluded zone of the {system} frame")
    e = _frame(k, system)
    other = "south" if system == "north" else "north"
    if zones.contains(k, other):
        return e[0], e[1], None
    f = _frame(k, other)
    north, south = (e, f) if system == "north" else (f, e)
    R = np.array([[south[mu] @ north[lam] for lam in range(2)] for mu in range(2)])
    return e[0], e[1], R


def default_profiles(m, zones=DEFAULT_ZONES):
    """Admissible ``(j_N, j_S)`` with ``j_N^2 + j_S^2 = 1`` for ``|k| > m``.

    The angular switch happens between the cone boundaries; a radial factor
    removes the ball around the origin that both frames exclude.
    """
    c_edge = math.cos(zones.angle)

    def theta(k):
        k = np.asarray(k, dtype=float)
        c = k[..., 2] / np.linalg.norm(k, axis=-1)
        return 0.5 * math.pi * smooth_step((0.5 * c_edge - c) / c_edge)

    def radial(k):
        r = np.linalg.norm(np.asarray(k, dtype=float), axis=-1)
        return smooth_step((r - zones.radius) / max(m - zones.radius, 1e-12))

    def j_n(k):
        return radial(k) * np.cos(theta(k))

    def j_s(k):
        return radial(k) * np.sin(theta(k))

    return j_n, j_s


@dataclass(frozen=True)
class IsometryReport:
    residuals: np.ndarray
    max_residual: float
    n_samples: int


def north_south_isometry(j_n, j_s, k_samples, m, zones=DEFAULT_ZONES, tol=1e-14):
    """Check ``u* u = 1`` for ``u f = (j_N f, R j_S f)`` on sampled ``|k| > m``.

    The per-sample residual is the spectral norm of ``j_N^2 + j_S^2 R^T R - 1``,
    which equals ``|j_N^2 + j_S^2 - 1|`` whenever ``R`` is orthogonal.

    Raises
    ------
    DomainError
        A profile is non-zero inside the excluded zone of its frame.
    """
    residuals = []
    for k in np.atleast_2d(k_samples):
        jn, js = float(j_n(k)), float(j_s(k))
        if abs(jn) > tol and zones.contains(k, "north"):
            raise DomainError(f"j_N is supported in the north excluded zone at k={k}")
        if abs(js) > tol and zones.contains(k, "south"):
            raise DomainError(f"j_S is supported in the south excluded zone at k={k}")
        if np.linalg.norm(k) <= m:
            continue
        if zones.contains(k, "north") or zones.contains(k, "south"):
            rot = np.eye(2)
        else:
            rot = polarization_bases(k, "north", zones)[2]
        gram = jn * jn * np.eye(2) + js * js * rot.T @ rot
        residuals.append(float(np.linalg.norm(gram - np.eye(2), 2)))
    res = np.array(residuals)
    return IsometryReport(res, float(res.max(initial=0.0)), res.size)
