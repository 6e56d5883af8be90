"""Particle-boson Hamiltonians on C^n (x) F.

The Hilbert space is ordered as ``kron(particle, fock)``: index ``x * dim_F + s``.
The interaction is diagonal in the particle site basis,
``phi(G) = sum_x |x><x| (x) phi(G_x)``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionError, HypothesisViolation, PreconditionError
from .fock import FockBasis, ModeGrid, OneBodyOperator, build_mode_grid, number_operator
from .second_quant import dGamma, field as field_op
from .tensor_split import build_tensor_basis

LEVEL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ParticleSystem:
    """Hermitian particle matrix ``K`` with its eigen-data grouped into levels."""

    K: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray
    levels: tuple
    multiplicities: tuple

    @classmethod
    def from_matrix(cls, K, tol=1e-12):
        K = np.asarray(K, dtype=complex)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise DimensionError("particle matrix must be square")
        if np.max(np.abs(K - K.conj().T)) > tol * max(1.0, np.max(np.abs(K))):
            raise HypothesisViolation("particle matrix is not Hermitian")
        energies, vectors = np.linalg.eigh(K)
        levels, mult = [], []
        for e in energies:
            if levels and abs(e - levels[-1]) <= LEVEL_TOL * max(1.0, abs(e)):
                mult[-1] += 1
            else:
                levels.append(float(e))
                mult.append(1)
        return cls(K, energies, vectors, tuple(levels), tuple(mult))

    @property
    def n(self):
        return self.K.shape[0]

    @property
    def gap(self):
        return self.levels[1] - self.levels[0] if len(self.levels) > 1 else math.inf

    def level_vectors(self, j):
        """Orthonormal basis (columns) of the eigenspace of level ``j``."""
        start = sum(self.multiplicities[:j])
        return self.vectors[:, start:start + self.multiplicities[j]]

    def projector(self, j):
        v = self.level_vectors(j)
        return v @ v.conj().T


def spin_boson_particle(splitting, bias=0.0):
    """Two-level system ``(splitting/2) sigma_x + (bias/2) sigma_z``."""
    K = 0.5 * np.array([[bias, splitting], [splitting, -bias]], dtype=complex)
    return ParticleSystem.from_matrix(K)


@dataclass(frozen=True, eq=False)
class FormFactor:
    """Per-site mode vectors ``G_x`` (rows of ``G``), coupling ``g`` and optional IR cutoff."""

    G: np.ndarray
    g: float = 0.0
    ir_cutoff: float | None = None

    @property
    def n_sites(self):
        return self.G.shape[0]

    def sup_norm(self):
        return float(np.max(np.linalg.norm(self.G, axis=1)))

    def ir_violation(self, grid):
        """Largest ``|G_x(k_j)|`` over grid points with ``|k_j| < m``; 0 when the cutoff holds."""
        if self.ir_cutoff is None:
            return 0.0
        soft = np.abs(grid.k_points) < self.ir_cutoff
        return float(np.max(np.abs(self.G[:, soft]), initial=0.0))

    def with_coupling(self, g):
        return replace(self, g=float(g))


def smooth_step(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def ir_profile(m, width=None, decay=None, center=None):
    """Smooth profile vanishing for ``|k| < m``, switched on over ``[m, m + width]``.

    Optionally times a Gaussian ``exp(-(|k| - center)^2 / (2 decay^2))`` to make it
    Schwartz-like at large ``|k|``.
    """
    width = m if width is None else width

    def profile(k):
        k = np.abs(np.asarray(k, dtype=float))
        out = smooth_step((k - m) / width)
        if decay is not None:
            c = m + width if center is None else center
            out = out * np.exp(-0.5 * ((k - c) / decay) ** 2)
        return out

    return profile


def spin_boson_form(grid, profile, g, ir_cutoff=None):
    """Opposite couplings ``G_up = kappa``, ``G_down = -kappa`` for a sigma_z coupling."""
    kappa = grid.sample(profile)
    return FormFactor(np.vstack([kappa, -kappa]), float(g), ir_cutoff)


def dipole_form(grid, sites, profile, g):
    """1-D caricature of an atomic form factor: ``G_x(k) = exp(-i k x) kappa(k)``."""
    sites = np.asarray(sites, dtype=float)
    kappa = grid.sample(profile)
    return FormFactor(np.exp(-1j * np.outer(sites, grid.k_points)) * kappa[None, :], float(g))


@dataclass(frozen=True, eq=False)
class ModelInstance:
    """Assembled Hamiltonian ``H = H0 + g V`` with ``V = sum_x |x><x| (x) phi(G_x)``."""

    particle: ParticleSystem
    grid: ModeGrid
    basis: FockBasis
    form: FormFactor
    H0: sp.csr_matrix
    V: sp.csr_matrix
    H: sp.csr_matrix
    sigma_proxy: float = math.inf

    @property
    def g(self):
        return self.form.g

    @property
    def dim(self):
        return self.H.shape[0]

    def fock_op(self, op):
        """``1 (x) op`` on the particle-Fock space."""
        return sp.kron(sp.identity(self.particle.n), op, format="csr")

    def particle_op(self, B):
        """``B (x) 1`` on the particle-Fock space."""
        return sp.kron(sp.csr_matrix(np.asarray(B, dtype=complex)),
                       sp.identity(self.basis.dim), format="csr")

    def site_field(self, vectors):
        """``sum_x |x><x| (x) phi(vectors[x])``."""
        blocks = [field_op(vectors[x], self.basis) for x in range(self.particle.n)]
        return sp.block_diag(blocks, format="csr")

    @functools.cached_property
    def number(self):
        return self.fock_op(number_operator(self.basis))

    @functools.cached_property
    def eig(self):
        from .spectral import eigensolve
        return eigensolve(self.H)

    def with_coupling(self, g):
        form = self.form.with_coupling(g)
        H = (self.H0 + form.g * self.V).tocsr()
        return ModelInstance(self.particle, self.grid, self.basis, form, self.H0, self.V, H,
                             self.sigma_proxy)

    def product_state(self, particle_vec, fock_vec):
        return np.kron(np.asarray(particle_vec, dtype=complex), np.asarray(fock_vec, dtype=complex))

    def excited_product(self, level=1):
        """``phi_level (x) Omega`` using the first vector of the level."""
        vac = np.zeros(self.basis.dim, dtype=complex)
        vac[0] = 1.0
        return self.product_state(self.particle.level_vectors(level)[:, 0], vac)


def build_hamiltonian(particle, grid, basis, form, check_ir=True):
    """Assemble ``K (x) 1 + 1 (x) dGamma(omega) + g phi(G)``.

    Raises
    ------
    DimensionError
        Mismatched mode counts or particle/site counts.
    HypothesisViolation
        The form factor carries an IR cutoff but does not vanish below it.
    """
    if grid.n_modes != basis.n_modes:
        raise DimensionError(f"grid has {grid.n_modes} modes, basis has {basis.n_modes}")
    if form.G.shape != (particle.n, grid.n_modes):
        raise DimensionError(
            f"form factor shape {form.G.shape} does not match ({particle.n}, {grid.n_modes})"
        )
    if check_ir and form.ir_cutoff is not None:
        bad = form.ir_violation(grid)
        if bad > 0:
            raise HypothesisViolation(
                f"infrared cutoff violated: |G_x(k)| = {bad:.3g} for |k| < {form.ir_cutoff}"
            )
    n = particle.n
    H0 = (sp.kron(sp.csr_matrix(particle.K), sp.identity(basis.dim))
          + sp.kron(sp.identity(n), dGamma(np.diag(grid.omega), basis))).tocsr()
    V = sp.block_diag([field_op(form.G[x], basis) for x in range(n)], format="csr")
    H = (H0 + form.g * V).tocsr()
    return ModelInstance(particle, grid, basis, form, H0, V, H)


def extended_hamiltonian(model, n_max=None):
    """``H~ = H (x) 1 + 1 (x) dGamma(omega)`` on ``C^n (x) F (x) F`` with a joint cutoff.

    Returns ``(H_tilde, tensor)``; the particle index is outermost.
    """
    tensor = build_tensor_basis(model.basis, n_max=n_max)
    n = model.particle.n
    dg = dGamma(np.diag(model.grid.omega), model.basis)
    H = sp.kron(sp.csr_matrix(model.particle.K), sp.identity(tensor.dim))
    H = H + sp.kron(sp.identity(n), tensor.left(dg) + tensor.right(dg))
    if model.g != 0.0:
        blocks = [tensor.left(field_op(model.form.G[x], model.basis)) for x in range(n)]
        H = H + model.g * sp.block_diag(blocks)
    return H.tocsr(), tensor


def modified_hamiltonian(model):
    """Replace ``|k|`` by the modified dispersion on the soft modes ``|k| < m``.

    Raises
    ------
    PreconditionError
        The model is not massless or carries no infrared cutoff.
    """
    if model.grid.dispersion != "massless":
        raise PreconditionError("modified Hamiltonian needs a model with dispersion |k|")
    m = model.form.ir_cutoff
    if m is None:
        raise PreconditionError("modified Hamiltonian needs an infrared cutoff on the form factor")
    if model.form.ir_violation(model.grid) > 0:
        raise HypothesisViolation("form factor does not vanish below the infrared cutoff")
    k = model.grid.k_points
    grid = build_mode_grid(k[0], k[-1], k.size, "modified_massless", m)
    shift = model.fock_op(dGamma(np.diag(grid.omega - model.grid.omega), model.basis))
    H0 = (model.H0 + shift).tocsr()
    H = (H0 + model.g * model.V).tocsr()
    return ModelInstance(model.particle, grid, model.basis, model.form, H0, model.V, H,
                         model.sigma_proxy)


# --------------------------------------------------------------------------
# conjugate operator


def mourre_conjugate(grid, basis):
    """One-body generator ``a = (omega' y + y omega') / 2`` and ``A = dGamma(a)``."""
    d = np.diag(grid.grad_omega).astype(complex)
    a = 0.5 * (d @ grid.y_op + grid.y_op @ d)
    return OneBodyOperator.from_matrix(a), dGamma(a, basis)


@dataclass(frozen=True, eq=False)
class CommutatorReport:
    """``i[H, A]`` three ways.

    ``commutator`` is the literal matrix commutator, ``assembled`` is
    ``dGamma(i[omega, a]) - g phi(i a G)`` and ``velocity_form`` uses the
    continuum symbol ``dGamma(|omega'|^2) - g phi(i a G)``.
    """

    commutator: sp.csr_matrix
    assembled: sp.csr_matrix
    velocity_form: sp.csr_matrix
    difference_norm: float


def commutator_HA(model, a=None):
    """Commutator of ``H`` with ``A = dGamma(a)`` and its second-quantized assembly."""
    if a is None:
        a, _ = mourre_conjugate(model.grid, model.basis)
    a = a.matrix if isinstance(a, OneBodyOperator) else np.asarray(a, dtype=complex)
    A = model.fock_op(dGamma(a, model.basis))
    comm = (1j * (model.H @ A - A @ model.H)).tocsr()
    w = np.diag(model.grid.omega).astype(complex)
    free = 1j * (w @ a - a @ w)
    iaG = (1j * (a @ model.form.G.T)).T
    field_part = model.site_field(iaG)
    assembled = (model.fock_op(dGamma(free, model.basis)) - model.g * field_part).tocsr()
    velocity = np.diag(model.grid.grad_omega ** 2).astype(complex)
    vform = (model.fock_op(dGamma(velocity, model.basis)) - model.g * field_part).tocsr()
    diff = comm - assembled
    norm = float(spla.norm(diff))
    return CommutatorReport(comm, assembled, vform, norm)


# --------------------------------------------------------------------------
# structural hypotheses


@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    status: str
    detail: str = ""


def hypothesis_report(model, fgr=None):
    """Evaluate the structural hypotheses on a model; status is pass, fail or n/a."""
    out = []
    gap = model.particle.gap
    out.append(HypothesisCheck(
        "isolated_ground_level", "pass" if gap > 0 else "fail", f"E1 - E0 = {gap:.6g}"))
    d1, d2 = model.grid.derivative_bounds()
    out.append(HypothesisCheck(
        "dispersion_mass_gap", "pass" if model.grid.mass_gap > 0 else "fail",
        f"min omega = {model.grid.mass_gap:.6g}, sup|omega'| = {d1:.3g}, sup|omega''| = {d2:.3g}"))
    out.append(HypothesisCheck(
        "particle_localization", "n/a",
        "confined particle, ionization threshold taken as +inf"))
    out.append(HypothesisCheck(
        "form_factor_bounded", "pass", f"sup_x |G_x| = {model.form.sup_norm():.6g}"))
    out.append(HypothesisCheck(
        "form_factor_falloff", "pass", "finite grid data"))
    out.append(HypothesisCheck(
        "short_range", "pass", "finite grid data"))
    if model.form.ir_cutoff is None:
        out.append(HypothesisCheck("infrared_cutoff", "n/a", "no cutoff declared"))
    else:
        bad = model.form.ir_violation(model.grid)
        out.append(HypothesisCheck(
            "infrared_cutoff", "pass" if bad == 0 else "fail",
            f"max |G_x(k)| below m={model.form.ir_cutoff}: {bad:.3g}"))
    if fgr is None:
        out.append(HypothesisCheck("golden_rule_positivity", "n/a", "not evaluated"))
    else:
        widths = [float(np.min(np.linalg.eigvalsh(gm))) for gm in fgr.matrices[1:]]
        ok = all(w > 0 for w in widths)
        out.append(HypothesisCheck(
            "golden_rule_positivity", "pass" if ok else "fail",
            "min widths " + ", ".join(f"{w:.4g}" for w in widths)))
    return out
