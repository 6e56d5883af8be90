"""Eigen-analysis, virial residuals, Mourre windows, positive commutators and golden-rule widths."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import HypothesisViolation, PreconditionError
from .fock import as_matrix, build_basis, number_operator
from .models import commutator_HA, mourre_conjugate
from .second_quant import create, dGamma

BOUND_OVERLAP = 0.5


def _dense(op):
    return op.toarray() if sp.issparse(op) else np.asarray(op)


@dataclass(frozen=True, eq=False)
class Eigenpairs:
    values: np.ndarray
    vectors: np.ndarray
    residual: float
    scale: float

    def projector(self, mask):
        v = self.vectors[:, mask]
        return v @ v.conj().T


def eigensolve(H, count=None, tol=1e-10):
    """Ascending eigenpairs of a Hermitian matrix by dense diagonalization.

    Raises
    ------
    PreconditionError
        ``H`` is not Hermitian, or the eigen-residual exceeds ``tol * |H|``.
    """
    Hd = _dense(H)
    scale = max(float(np.linalg.norm(Hd, 2)), 1e-300)
    if np.max(np.abs(Hd - Hd.conj().T), initial=0.0) > 1e-12 * scale:
        raise PreconditionError("eigensolve needs a Hermitian matrix")
    values, vectors = np.linalg.eigh(Hd)
    if count is not None:
        values, vectors = values[:count], vectors[:, :count]
    resid = float(np.max(np.linalg.norm(Hd @ vectors - vectors * values, axis=0), initial=0.0))
    if resid > tol * scale:
        raise PreconditionError(f"eigen-residual {resid:.3e} exceeds {tol:.0e} * |H|")
    return Eigenpairs(values, vectors, resid, scale)


# --------------------------------------------------------------------------
# classification, thresholds and windows


def vacuum_overlap(model, vectors):
    """Weight of each column in the particle (x) vacuum subspace."""
    v = vectors.reshape(model.particle.n, model.basis.dim, -1)
    return np.sum(np.abs(v[:, 0, :]) ** 2, axis=0)


def bound_state_mask(model, eig=None, threshold=BOUND_OVERLAP):
    """Eigenvectors classified as genuine bound states by their vacuum-sector weight."""
    eig = model.eig if eig is None else eig
    return vacuum_overlap(model, eig.vectors) >= threshold


@dataclass(frozen=True)
class ThresholdSet:
    eigenvalues: np.ndarray
    thresholds: np.ndarray
    mass: float

    def points(self):
        return np.unique(np.concatenate([self.eigenvalues, self.thresholds]))

    def distance(self, energy):
        pts = self.points()
        return float(np.min(np.abs(pts - energy))) if pts.size else math.inf


def _dedupe(values, tol):
    out = []
    for v in np.sort(values):
        if not out or v - out[-1] > tol:
            out.append(float(v))
    return np.array(out)


def threshold_set(model, cap, eig=None, tol=1e-9):
    """Genuine eigenvalues below ``cap`` and thresholds ``sigma_pp + n m``, ``n >= 1``."""
    eig = model.eig if eig is None else eig
    mask = bound_state_mask(model, eig) & (eig.values < cap)
    pp = _dedupe(eig.values[mask], tol)
    m = model.grid.mass_gap
    thresholds = [e + n * m for e in pp for n in range(1, int((cap - e) / m) + 2)]
    return ThresholdSet(pp, _dedupe(np.array(thresholds), tol), m)


def level_spacing(eig, cap):
    """Median gap between consecutive distinct eigenvalues below ``cap``."""
    vals = eig.values[eig.values < cap]
    gaps = np.diff(vals)
    gaps = gaps[gaps > 1e-12]
    return float(np.median(gaps)) if gaps.size else math.inf


@dataclass(frozen=True, eq=False)
class SpectralWindow:
    lo: float
    hi: float
    indices: np.ndarray
    vectors: np.ndarray
    include_hi: bool = False

    @property
    def rank(self):
        return self.indices.size

    @property
    def projector(self):
        return self.vectors @ self.vectors.conj().T


def spectral_window(eig, lo, hi, include_hi=False, open_tol=1e-10):
    """Spectral projection of ``(lo, hi)`` (or ``(lo, hi]``) from eigenpairs."""
    upper = eig.values <= hi + open_tol if include_hi else eig.values < hi
    idx = np.flatnonzero((eig.values > lo + open_tol) & upper)
    return SpectralWindow(lo, hi, idx, eig.vectors[:, idx], include_hi)


def admissible_windows(model, width, cap, margin_factor=3.0, eig=None):
    """Tile ``[E_0, cap)`` into windows that keep ``margin_factor`` level spacings from
    every threshold and genuine eigenvalue."""
    eig = model.eig if eig is None else eig
    ts = threshold_set(model, cap + model.grid.mass_gap, eig)
    margin = margin_factor * level_spacing(eig, cap)
    points = ts.points()
    lo_all = eig.values[0]
    out = []
    for start in np.arange(lo_all, cap - width, width / 4):
        lo, hi = start, start + width
        if np.any((points > lo - margin) & (points < hi + margin)):
            continue
        win = spectral_window(eig, lo, hi)
        if win.rank and (not out or lo >= out[-1].hi):
            out.append(win)
    return out, ts, margin


# --------------------------------------------------------------------------
# spectral checks


@dataclass(frozen=True)
class GapReport:
    couplings: np.ndarray
    ground: np.ndarray
    gaps: np.ndarray
    multiplicities: np.ndarray
    slope_bound: float
    constant: float


def ground_gap_check(model, couplings, tol=1e-9):
    """Ground multiplicity and the gap ``lambda_1 - lambda_0`` over a coupling sweep.

    ``constant`` is the smallest ``C`` with ``gap(g) >= gap(0) - C g`` on the sweep.
    """
    couplings = np.asarray(couplings, dtype=float)
    ground, gaps, mult = [], [], []
    for g in couplings:
        vals = eigensolve(model.with_coupling(g).H).values
        ground.append(vals[0])
        mult.append(int(np.sum(vals - vals[0] <= tol * max(1.0, abs(vals[0])))))
        above = vals[vals > vals[0] + tol * max(1.0, abs(vals[0]))]
        gaps.append(above[0] - vals[0] if above.size else math.inf)
    gaps = np.array(gaps)
    slopes = np.abs(np.diff(gaps) / np.diff(couplings)) if couplings.size > 1 else np.zeros(0)
    pos = couplings > 0
    const = float(np.max((gaps[0] - gaps[pos]) / couplings[pos], initial=0.0))
    return GapReport(couplings, np.array(ground), gaps, np.array(mult),
                     float(slopes.max(initial=0.0)), max(const, 0.0))


def virial_residual(model, A, eigvec):
    """``|<phi, i[H, A] phi>|`` for a (normalized) eigenvector."""
    A = A if sp.issparse(A) else sp.csr_matrix(A)
    v = np.asarray(eigvec)
    Hv, Av = model.H @ v, A @ v
    return float(abs(1j * (np.vdot(v, A @ Hv) - np.vdot(Hv, Av))))


def virial_sweep(model, eig=None, a=None):
    """Virial residuals over every eigenvector; returns residuals and ``|A|``."""
    eig = model.eig if eig is None else eig
    if a is None:
        a, _ = mourre_conjugate(model.grid, model.basis)
    A = model.fock_op(dGamma(as_matrix(a), model.basis))
    C = _dense(commutator_HA(model, a).commutator)
    V = eig.vectors
    res = np.abs(np.einsum("ij,ij->j", V.conj(), C @ V))
    return res, float(np.linalg.norm(A.toarray(), 2))


def compressed_min(op, window):
    """Minimum Rayleigh quotient of ``op`` on ``Ran(window)``."""
    if window.rank == 0:
        raise PreconditionError(f"window ({window.lo}, {window.hi}) contains no states")
    vecs = window.vectors
    block = vecs.conj().T @ (_dense(op) @ vecs)
    return float(np.linalg.eigvalsh(0.5 * (block + block.conj().T))[0])


def mourre_window_check(model, window, thresholds, margin, report=None):
    """Minimum Rayleigh quotient of ``dGamma(|omega'|^2) - g phi(i a G)`` on a window.

    Raises
    ------
    PreconditionError
        The window comes within ``margin`` of a threshold or contains a genuine eigenvalue.
    """
    for p in thresholds.points():
        if window.lo - margin < p < window.hi + margin:
            raise PreconditionError(
                f"window ({window.lo:.6g}, {window.hi:.6g}) is within {margin:.3g} of {p:.6g}"
            )
    report = commutator_HA(model) if report is None else report
    return compressed_min(report.velocity_form, window)


def free_window_oracle(model, lo, hi):
    """Minimum of ``sum_j n_j omega'_j^2`` over free product states with energy in ``(lo, hi)``."""
    occ = model.basis.states
    boson_e = occ @ model.grid.omega
    vel = occ @ (model.grid.grad_omega ** 2)
    best = math.inf
    for e in model.particle.energies:
        mask = (e + boson_e > lo) & (e + boson_e < hi)
        if mask.any():
            best = min(best, float(vel[mask].min()))
    return best


@dataclass(frozen=True)
class PositiveCommutatorReport:
    min_quotient: float
    window: tuple
    rank: int
    surviving_bound_states: int


def positive_commutator_check(model, eps, a=None):
    """Minimum quotient of ``N - g phi(i a G)`` on ``(E_g, E_1 - eps]``.

    ``a`` defaults to the conjugate generator of the modified dispersion.  Also
    counts eigenvalues in the window that classify as bound states.
    """
    if model.form.ir_cutoff is None:
        raise PreconditionError("positive commutator check needs an infrared-cutoff model")
    if a is None:
        from .models import modified_hamiltonian
        a, _ = mourre_conjugate(modified_hamiltonian(model).grid, model.basis)
    a = as_matrix(a)
    eig = model.eig
    e_g = eig.values[0]
    top = model.particle.levels[1] - eps
    if not top > e_g:
        raise PreconditionError(f"window ({e_g:.6g}, {top:.6g}] is empty")
    win = spectral_window(eig, e_g, top, include_hi=True)
    iaG = (1j * (a @ model.form.G.T)).T
    op = model.number - model.g * model.site_field(iaG)
    q = compressed_min(op, win)
    survivors = int(np.sum(bound_state_mask(model, eig)[win.indices]))
    return PositiveCommutatorReport(q, (float(e_g), float(top)), win.rank, survivors)


# --------------------------------------------------------------------------
# golden rule


@dataclass(frozen=True, eq=False)
class FGRMatrices:
    matrices: list
    eta: float
    extrapolated: list
    etas: np.ndarray
    dropped: list = field(default_factory=list)


def transition_amplitudes(particle, form, i, j):
    """``A_ij(k)`` as an array of shape ``(M, m_i, m_j)``."""
    vi, vj = particle.level_vectors(i), particle.level_vectors(j)
    return np.einsum("xr,xk,xs->krs", vi.conj(), form.G, vj)


def _widths(particle, grid, form, eta, dropped=None):
    w = np.ones(grid.n_modes)
    w[0] = w[-1] = 0.5
    out = []
    for j in range(len(particle.levels)):
        mj = particle.multiplicities[j]
        gam = np.zeros((mj, mj), dtype=complex)
        for i in range(j):
            de = particle.levels[j] - particle.levels[i]
            if dropped is not None and not grid.omega.min() <= de <= grid.omega.max():
                dropped.append((i, j, de))
            A = transition_amplitudes(particle, form, i, j)
            kern = np.exp(-0.5 * ((grid.omega - de) / eta) ** 2) / (math.sqrt(2 * math.pi) * eta)
            gam += np.einsum("k,krs,krt->st", w * kern, A.conj(), A)
        out.append(0.5 * (gam + gam.conj().T))
    return out


def fermi_golden_rule(particle, grid, form, eta, etas=None):
    """Second-order width matrices with a Gaussian delta of width ``eta``.

    ``etas`` (default ``eta * [1, 1.5, 2, 2.5, 3]``) feed a per-entry linear fit in
    ``eta`` whose intercept is reported as ``extrapolated``.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    etas = eta * np.array([1.0, 1.5, 2.0, 2.5, 3.0]) if etas is None else np.asarray(etas)
    dropped = []
    base = _widths(particle, grid, form, eta, dropped)
    for i, j, de in dropped:
        warnings.warn(f"resonance {de:.4g} for {i}->{j} lies outside the grid's omega range")
    sweep = [_widths(particle, grid, form, e) for e in etas]
    extrap = []
    for lvl in range(len(base)):
        stack = np.array([s[lvl] for s in sweep])
        flat = stack.reshape(len(etas), -1)
        coef = np.polyfit(etas, flat.real, 1)[1] + 1j * np.polyfit(etas, flat.imag, 1)[1]
        extrap.append(coef.reshape(base[lvl].shape))
    return FGRMatrices(base, float(eta), extrap, etas, dropped)


# --------------------------------------------------------------------------
# density of product vectors


@dataclass(frozen=True)
class DensityReport:
    rank: int
    dim: int
    samples: int
    deficit: int


def density_rank_check(omega, c, rng, n_max=None, oversample=2, tol=1e-9):
    """Rank of sampled ``a*(h_1)...a*(h_n) Omega`` with ``sum_i sup omega|supp h_i < c``
    against ``dim chi(dGamma(omega) < c)``.

    Each occupation pattern below ``c`` fixes the support bounds ``h_i <= omega_j``
    for one family; ``oversample`` products with random profiles on those
    supports are drawn per family.
    """
    omega = np.asarray(getattr(omega, "omega", omega), dtype=float)
    if omega.min() <= 0:
        raise HypothesisViolation("frequencies must be positive")
    reach = int(math.floor((c - 1e-12) / omega.min()))
    n_max = reach if n_max is None else n_max
    if (n_max + 1) * omega.min() < c:
        raise PreconditionError(f"cutoff {n_max} cannot hold every state with energy < {c}")
    basis = build_basis(omega.size, n_max)
    energies = basis.states @ omega
    window = np.flatnonzero(energies < c)
    dim = window.size
    ladders = [create(np.eye(omega.size)[j], basis) for j in range(omega.size)]
    vectors = []
    for occ in basis.states[window]:
        picks = np.repeat(np.arange(omega.size), occ)
        for _ in range(oversample):
            v = np.zeros(basis.dim, dtype=complex)
            v[0] = 1.0
            for j in picks:
                support = np.flatnonzero(omega <= omega[j])
                h = rng.normal(size=support.size) + 1j * rng.normal(size=support.size)
                v = sum((hq * (ladders[q] @ v) for q, hq in zip(support, h)),
                        np.zeros(basis.dim, dtype=complex))
            vectors.append(v[window] / max(np.linalg.norm(v[window]), 1e-300))
    s = np.linalg.svd(np.array(vectors).T, compute_uv=False)
    rank = int(np.sum(s > tol * s[0]))
    return DensityReport(rank, dim, len(vectors), dim - rank)


# --------------------------------------------------------------------------
# operator inequalities


@dataclass(frozen=True)
class InequalityReport:
    name: str
    min_eigenvalue: float
    scale: float
    constant: float = math.nan

    def passes(self, rel=1e-10):
        return self.min_eigenvalue >= -rel * self.scale


def number_energy_bound(model, a=None, b=None):
    """Smallest eigenvalue of ``a H + b - N`` with ``a = 2/m`` and ``b = 1 - a E_g``."""
    a = 2.0 / model.grid.mass_gap if a is None else a
    e_g = model.eig.values[0]
    b = 1.0 - a * e_g if b is None else b
    M = _dense(a * model.H - model.number) + b * np.eye(model.dim)
    scale = float(np.linalg.norm(M, 2))
    return InequalityReport("number_energy", float(np.linalg.eigvalsh(M)[0]), scale, a)


def conjugate_inequalities(grid, basis):
    """PSD checks for the conjugate generator ``a``.

    Returns reports for ``a^2 <= c (y^2 + 1)`` with the optimal ``c``,
    ``dGamma(a)^2 <= N dGamma(a^2)`` and ``dGamma(a)^2 <= c dGamma(y^2 + 1)^2``.
    """
    a = mourre_conjugate(grid, basis)[0].matrix
    y = grid.y_op
    w = y @ y + np.eye(grid.n_modes)
    vals, vecs = np.linalg.eigh(w)
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
    c = float(np.linalg.eigvalsh(inv_sqrt @ a @ a @ inv_sqrt)[-1])
    one = c * w - a @ a
    rep1 = InequalityReport("a2_vs_y2", float(np.linalg.eigvalsh(one)[0]),
                            float(np.linalg.norm(c * w, 2)), c)
    dA = dGamma(a, basis).toarray()
    N = number_operator(basis).toarray()
    dA2 = dGamma(a @ a, basis).toarray()
    two = N @ dA2 - dA @ dA
    two = 0.5 * (two + two.conj().T)
    rep2 = InequalityReport("dgamma_square", float(np.linalg.eigvalsh(two)[0]),
                            float(np.linalg.norm(N @ dA2, 2)))
    dW = dGamma(w, basis).toarray()
    three = c * dW @ dW - dA @ dA
    three = 0.5 * (three + three.conj().T)
    rep3 = InequalityReport("dgamma_vs_y2", float(np.linalg.eigvalsh(three)[0]),
                            float(np.linalg.norm(c * dW @ dW, 2)), c)
    return rep1, rep2, rep3
