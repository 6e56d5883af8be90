"""Matrix identities of the second-quantization calculus, checked on a truncation.

Each identity is an equality of matrices, restricted on the right to the
sectors where the total-quanta cutoff cannot interfere (``N <= n_max - s``
for ``s`` creation steps).  Norm bounds are checked as inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fock import build_basis, number_operator, sector_projector, vacuum
from .second_quant import Gamma, annihilate, create, dGamma, dGamma2, field
from .tensor_split import (SplitSpec, build_tensor_basis, partition_dgamma, partition_op,
                           scattering_identification, split_unitary, sum_basis)

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class IdentityCheck:
    """``residual <= tol * max(scale, 1)`` for equalities, ``value <= bound`` for bounds."""

    name: str
    group: str
    residual: float
    scale: float
    tol: float
    kind: str = "equality"

    @property
    def passes(self):
        if self.kind == "bound":
            return self.residual <= self.scale * (1 + self.tol)
        return self.residual <= self.tol * max(self.scale, 1.0)


def _dense(op):
    return op.toarray() if sp.issparse(op) else np.asarray(op)


def _norm(op):
    return float(np.linalg.norm(_dense(op), 2)) if min(op.shape) else 0.0


def _equal(name, group, lhs, rhs, tol, right=None):
    lhs, rhs = _dense(lhs), _dense(rhs)
    if right is not None:
        right = _dense(right)
        lhs, rhs = lhs @ right, rhs @ right
    scale = max(_norm(lhs), _norm(rhs))
    return IdentityCheck(name, group, _norm(lhs - rhs), scale, tol)


def _bound(name, group, value, bound, tol):
    return IdentityCheck(name, group, float(value), float(bound), tol, kind="bound")


def _cvec(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def _cmat(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


def _unitary(rng, n):
    q, r = np.linalg.qr(_cmat(rng, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _isometry(rng, n_out, n_in):
    q, _ = np.linalg.qr(_cmat(rng, n_out, n_in))
    return q


def _inv_sqrt_number(basis, power=0.5):
    return sp.diags((basis.totals + 1.0) ** (-power)).astype(complex)


# --------------------------------------------------------------------------
# ladder operators and functors


def ladder_identities(basis, rng, tol=DEFAULT_TOL):
    """CCR, functor intertwinings, the dGamma commutator and relative bounds."""
    M = basis.n_modes
    g, h = _cvec(rng, M), _cvec(rng, M)
    b = _cmat(rng, M)
    u = _unitary(rng, M)
    herm = b + b.conj().T
    a = create
    P1 = sector_projector(basis, basis.n_max - 1)
    P2 = sector_projector(basis, basis.n_max - 2)
    eye = sp.identity(basis.dim, dtype=complex, format="csr")
    out = []
    grp = "canonical commutation"
    ccr = annihilate(g, basis) @ a(h, basis) - a(h, basis) @ annihilate(g, basis)
    out.append(_equal("[a(g), a*(h)] = (g, h)", grp, ccr, np.vdot(g, h) * eye, tol, P1))
    out.append(_equal("[a*(g), a*(h)] = 0", grp,
                      a(g, basis) @ a(h, basis), a(h, basis) @ a(g, basis), tol, P2))
    out.append(_equal("[a(g), a(h)] = 0", grp, annihilate(g, basis) @ annihilate(h, basis),
                      annihilate(h, basis) @ annihilate(g, basis), tol))
    out.append(_equal("annihilate is the adjoint of create", grp,
                      annihilate(h, basis), a(h, basis).conj().T, tol))
    vac = vacuum(basis).coeffs
    out.append(_equal("<Omega, a(g) a*(h) Omega> = (g, h)", grp,
                      np.array([[np.vdot(vac, annihilate(g, basis) @ (a(h, basis) @ vac))]]),
                      np.array([[np.vdot(g, h)]]), tol))
    out.append(_equal("<Omega, phi(h)^2 Omega> = |h|^2 / 2", grp,
                      np.array([[np.vdot(vac, field(h, basis) @ (field(h, basis) @ vac))]]),
                      np.array([[np.vdot(h, h).real / 2]]), tol))

    grp = "second quantization functor"
    Gb, Gu = Gamma(b, basis), Gamma(u, basis)
    out.append(_equal("Gamma(b) a*(h) = a*(bh) Gamma(b)", grp,
                      Gb @ a(h, basis), a(b @ h, basis) @ Gb, tol, P1))
    out.append(_equal("Gamma(b) a(b* h) = a(h) Gamma(b)", grp,
                      Gb @ annihilate(b.conj().T @ h, basis), annihilate(h, basis) @ Gb, tol))
    out.append(_equal("Gamma(u) a(h) = a(uh) Gamma(u) for unitary u", grp,
                      Gu @ annihilate(h, basis), annihilate(u @ h, basis) @ Gu, tol))
    out.append(_equal("Gamma(u) phi(h) = phi(uh) Gamma(u) for unitary u", grp,
                      Gu @ field(h, basis), field(u @ h, basis) @ Gu, tol, P1))
    out.append(_equal("Gamma(1) = 1", grp, Gamma(np.eye(M), basis), eye, tol))
    out.append(_equal("dGamma(1) = N", grp, dGamma(np.eye(M), basis), number_operator(basis), tol))
    dgh = dGamma(herm, basis)
    comm = 1j * (dgh @ field(h, basis) - field(h, basis) @ dgh)
    out.append(_equal("i[dGamma(b), phi(h)] = phi(i b h) for b = b*", grp,
                      comm, field(1j * herm @ h, basis), tol, P1))
    out.append(_equal("dGamma(1, b) = dGamma(b)", grp,
                      dGamma2(np.eye(M), b, basis), dGamma(b, basis), tol))
    a2 = _cmat(rng, M)
    out.append(_equal("Gamma(a) dGamma(b) = dGamma(a, ab)", grp,
                      Gamma(a2, basis) @ dGamma(b, basis), dGamma2(a2, a2 @ b, basis), tol))
    out.append(_equal("[Gamma(a), dGamma(b)] = dGamma(a, [a, b])", grp,
                      Gamma(a2, basis) @ dGamma(b, basis) - dGamma(b, basis) @ Gamma(a2, basis),
                      dGamma2(a2, a2 @ b - b @ a2, basis), tol))

    grp = "relative bounds"
    hn = float(np.linalg.norm(h))
    R = _inv_sqrt_number(basis)
    out.append(_bound("|a*(h) (N+1)^-1/2| <= |h|", grp, _norm(a(h, basis) @ R), hn, tol))
    out.append(_bound("|(N+1)^-1/2 a*(h)| <= |h|", grp, _norm(R @ a(h, basis)), hn, tol))
    out.append(_bound("|a(h) (N+1)^-1/2| <= |h|", grp, _norm(annihilate(h, basis) @ R), hn, tol))
    out.append(_bound("|(N+1)^-1/2 a(h)| <= |h|", grp, _norm(R @ annihilate(h, basis)), hn, tol))
    out.append(_bound("|phi(h) (N+1)^-1/2| <= sqrt(2) |h|", grp,
                      _norm(field(h, basis) @ R), math.sqrt(2) * hn, tol))
    out.extend(_product_bounds(basis, rng, tol))
    bn = _norm(b)
    R1 = _inv_sqrt_number(basis, 1.0)
    out.append(_bound("|dGamma(b) (N+1)^-1| <= |b|", grp, _norm(dGamma(b, basis) @ R1), bn, tol))
    contraction = a2 / _norm(a2)
    out.append(_bound("|dGamma(a, b) (N+1)^-1| <= |b| for |a| <= 1", grp,
                      _norm(dGamma2(contraction, b, basis) @ R1), bn, tol))
    out.append(_bound("|Gamma(a)| <= 1 for |a| <= 1", grp,
                      _norm(Gamma(contraction, basis)), 1.0, tol))
    return out


def _product_bounds(basis, rng, tol):
    """``|(N+1)^p a#(h_1)...a#(h_n) (N+1)^(-p-n/2)| <= (n+1)^(n/2+|p|) prod |h_i|``.

    The constant follows from each ladder step moving the sector by one and
    costing at most ``sqrt(k + n + 1)`` on sector ``k``; products are taken on
    ``N <= n_max - n`` so no step is truncated.
    """
    out = []
    M = basis.n_modes
    for n in range(1, min(3, basis.n_max) + 1):
        hs = [_cvec(rng, M) for _ in range(n)]
        kinds = rng.integers(0, 2, size=n)
        prod = sp.identity(basis.dim, dtype=complex, format="csr")
        for h, k in zip(hs, kinds):
            prod = prod @ (create(h, basis) if k else annihilate(h, basis))
        safe = sector_projector(basis, basis.n_max - n)
        norms = math.prod(float(np.linalg.norm(h)) for h in hs)
        for p in (-0.5, 0.0, 0.5):
            left = sp.diags((basis.totals + 1.0) ** p).astype(complex)
            right = sp.diags((basis.totals + 1.0) ** (-p - n / 2)).astype(complex)
            value = _norm(left @ prod @ right @ safe)
            out.append(_bound(f"(N+1)^p product bound, n={n}, p={p:+.1f}", "relative bounds",
                              value, (n + 1) ** (n / 2 + abs(p)) * norms, tol))
    return out


# --------------------------------------------------------------------------
# factorization and partitions


def split_identities(basis, rng, tol=DEFAULT_TOL):
    """Unitarity and intertwinings of ``U``, the partition and the identification."""
    M = basis.n_modes
    tensor = build_tensor_basis(basis)
    bsum = sum_basis(tensor)
    U = split_unitary(bsum, tensor)
    out = []
    grp = "Fock factorization"
    eye_t = sp.identity(tensor.dim, dtype=complex)
    eye_s = sp.identity(bsum.dim, dtype=complex)
    out.append(_equal("U* U = 1", grp, U.conj().T @ U, eye_s, tol))
    out.append(_equal("U U* = 1", grp, U @ U.conj().T, eye_t, tol))
    vac_t = tensor.product_state(vacuum(basis).coeffs, vacuum(basis).coeffs)
    out.append(_equal("U Omega = Omega (x) Omega", grp,
                      (U @ vacuum(bsum).coeffs)[:, None], vac_t[:, None], tol))
    h0, hi = _cvec(rng, M), _cvec(rng, M)
    hsum = np.concatenate([h0, hi])
    Ps1 = sector_projector(bsum, bsum.n_max - 1)
    out.append(_equal("U a*(h) = [a*(h0) (x) 1 + 1 (x) a*(h_inf)] U", grp,
                      U @ create(hsum, bsum),
                      (tensor.left(create(h0, basis)) + tensor.right(create(hi, basis))) @ U,
                      tol, Ps1))
    out.append(_equal("U a(h) = [a(h0) (x) 1 + 1 (x) a(h_inf)] U", grp,
                      U @ annihilate(hsum, bsum),
                      (tensor.left(annihilate(h0, basis)) + tensor.right(annihilate(hi, basis))) @ U,
                      tol))
    b0, bi = _cmat(rng, M), _cmat(rng, M)
    block = np.block([[b0, np.zeros((M, M))], [np.zeros((M, M)), bi]])
    out.append(_equal("U dGamma(b0 + b_inf) = [dGamma(b0) (x) 1 + 1 (x) dGamma(b_inf)] U", grp,
                      U @ dGamma(block, bsum),
                      (tensor.left(dGamma(b0, basis)) + tensor.right(dGamma(bi, basis))) @ U, tol))

    grp = "geometric partition"
    iso = _isometry(rng, 2 * M, M)
    spec = SplitSpec.build(iso[:M], iso[M:], "isometric", tol=1e-12)
    Gc = partition_op(spec, basis, tensor)
    P1 = sector_projector(basis, basis.n_max - 1)
    out.append(_equal("Gamma_check(j)* Gamma_check(j) = 1", grp,
                      Gc.conj().T @ Gc, sp.identity(basis.dim, dtype=complex), tol))
    out.append(_equal("Gamma_check(j) N = (N0 + N_inf) Gamma_check(j)", grp,
                      Gc @ number_operator(basis),
                      (tensor.number_left + tensor.number_right) @ Gc, tol))
    h = _cvec(rng, M)
    for name, build in (("a*", create), ("a", annihilate), ("phi", field)):
        lhs = Gc @ build(h, basis)
        rhs = (tensor.left(build(spec.j0 @ h, basis))
               + tensor.right(build(spec.j_inf @ h, basis))) @ Gc
        out.append(_equal(f"Gamma_check(j) {name}(h) = [{name}(j0 h) (x) 1 + 1 (x) {name}(j_inf h)]"
                          " Gamma_check(j)", grp, lhs, rhs, tol, None if name == "a" else P1))
    w = np.diag(rng.uniform(0.5, 2.0, size=M)).astype(complex)
    wsum = np.block([[w, np.zeros((M, M))], [np.zeros((M, M)), w]])
    j = spec.stacked
    free = tensor.left(dGamma(w, basis)) + tensor.right(dGamma(w, basis))
    out.append(_equal("Gamma_check(j) dGamma(w) = [dGamma(w) (x) 1 + 1 (x) dGamma(w)] Gamma_check(j)"
                      " - dGamma_check(j, w j - j w)", grp,
                      Gc @ dGamma(w, basis),
                      free @ Gc - partition_dgamma(j, wsum @ j - j @ w, basis, tensor), tol))
    trivial = SplitSpec.build(np.eye(M), np.zeros((M, M)), "isometric")
    psi = _cvec(rng, basis.dim)
    out.append(_equal("j = (1, 0) sends psi to psi (x) Omega", grp,
                      (partition_op(trivial, basis, tensor) @ psi)[:, None],
                      tensor.product_state(psi, vacuum(basis).coeffs)[:, None], tol))

    grp = "scattering identification"
    ident = scattering_identification(tensor, basis)
    out.append(_equal("I (Omega (x) Omega) = Omega", grp,
                      (ident @ vac_t)[:, None], vacuum(basis).coeffs[:, None], tol))
    phi = P1 @ _cvec(rng, basis.dim)
    one = create(h, basis) @ vacuum(basis).coeffs
    out.append(_equal("I (phi (x) a*(h) Omega) = a*(h) phi", grp,
                      (ident @ tensor.product_state(phi, one))[:, None],
                      (create(h, basis) @ phi)[:, None], tol))
    j0 = _cmat(rng, M)
    summing = SplitSpec.build(j0, np.eye(M) - j0, "summing", tol=1e-12)
    out.append(_equal("I Gamma_check(j) = 1 for j0 + j_inf = 1", grp,
                      ident @ partition_op(summing, basis, tensor),
                      sp.identity(basis.dim, dtype=complex), tol))
    return out


def algebra_suite(sizes=((2, 2), (3, 2), (4, 3)), seed=0, tol=DEFAULT_TOL):
    """All ladder and splitting identities for each ``(M, n_max)`` in ``sizes``.

    Returns a list of ``((M, n_max), IdentityCheck)`` pairs.
    """
    rng = np.random.default_rng(seed)
    out = []
    for M, n_max in sizes:
        basis = build_basis(M, n_max)
        for chk in ladder_identities(basis, rng, tol) + split_identities(basis, rng, tol):
            out.append(((M, n_max), chk))
    return out


# --------------------------------------------------------------------------
# large joint truncations


@dataclass(frozen=True)
class SplitScaleReport:
    tensor_dim: int
    unitarity: float
    right_inverse: float
    tol: float

    @property
    def passes(self):
        return self.unitarity <= self.tol and self.right_inverse <= self.tol


def split_scale_check(n_modes, n_max, seed=0, tol=DEFAULT_TOL):
    """Defects of ``U*U = UU* = 1`` and ``I Gamma_check(j) = 1`` on one joint truncation.

    Defects are Frobenius norms, which bound the operator norms; ``j0`` is a
    random diagonal with ``j_inf = 1 - j0``.
    """
    rng = np.random.default_rng(seed)
    basis = build_basis(n_modes, n_max)
    tensor = build_tensor_basis(basis)
    bsum = sum_basis(tensor)
    U = split_unitary(bsum, tensor)
    d1 = U.conj().T @ U - sp.identity(bsum.dim)
    d2 = U @ U.conj().T - sp.identity(tensor.dim)
    unit = max(spla.norm(d1), spla.norm(d2))
    j0 = np.diag(rng.uniform(0.0, 1.0, size=n_modes)).astype(complex)
    spec = SplitSpec.build(j0, np.eye(n_modes) - j0, "summing", tol=1e-12)
    ident = scattering_identification(tensor, basis)
    d3 = ident @ partition_op(spec, basis, tensor) - sp.identity(basis.dim)
    return SplitScaleReport(tensor.dim, float(unit), float(spla.norm(d3)), tol)
