import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fockscatter import build_basis, build_hamiltonian, build_mode_grid
from fockscatter.errors import HypothesisViolation, PreconditionError
from fockscatter.models import ir_profile, spin_boson_form, spin_boson_particle
from fockscatter.spectral import (admissible_windows, conjugate_inequalities, density_rank_check,
                                  eigensolve, fermi_golden_rule, free_window_oracle,
                                  ground_gap_check, mourre_window_check, number_energy_bound,
                                  positive_commutator_check, spectral_window, threshold_set,
                                  virial_sweep)


def _gauss_model(g, M=6, n_max=2, splitting=1.0, k=2.0):
    grid = build_mode_grid(-k, k, M)
    form = spin_boson_form(grid, lambda q: np.exp(-q * q / 2), g)
    return build_hamiltonian(spin_boson_particle(splitting), grid, build_basis(M, n_max), form)


def _ir_model(g):
    grid = build_mode_grid(-3.0, 3.0, 12, "massless", 0.5)
    form = spin_boson_form(grid, ir_profile(0.5, width=0.5, decay=0.6, center=1.0), g,
                           ir_cutoff=0.5)
    return build_hamiltonian(spin_boson_particle(1.0), grid, build_basis(12, 2), form)


@given(st.integers(0, 2**31), st.integers(2, 12))
def test_eigensolve_residual(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    eig = eigensolve(a + a.conj().T)
    assert np.all(np.diff(eig.values) >= 0)
    assert eig.residual <= 1e-10 * eig.scale


def test_spectral_window_open_and_closed():
    eig = eigensolve(np.diag([0.0, 1.0, 2.0, 3.0]))
    assert spectral_window(eig, 0.0, 2.0).indices.tolist() == [1]
    assert spectral_window(eig, 0.0, 2.0, include_hi=True).indices.tolist() == [1, 2]


def test_threshold_set_free_model():
    model = _gauss_model(0.0)
    ts = threshold_set(model, cap=2.0)
    assert np.isclose(ts.eigenvalues[0], -0.5)
    assert np.isclose(ts.thresholds[0], -0.5 + model.grid.mass_gap)


def test_ground_state_unique_with_gap():
    rep = ground_gap_check(_gauss_model(0.1), [0.0, 0.05, 0.1])
    assert all(m == 1 for m in rep.multiplicities)
    assert all(d > 0 for d in rep.gaps)


@pytest.mark.parametrize("g", [0.0, 0.05, 0.1])
def test_virial_residual(g):
    resid, norm_a = virial_sweep(_gauss_model(g))
    assert resid.max() <= 1e-9 * norm_a


def test_free_mourre_quotient_matches_velocity_oracle():
    model = _gauss_model(0.0, M=20, splitting=0.5)
    wins, ts, margin = admissible_windows(model, 0.15, 3.2)
    assert wins
    for w in wins:
        q = mourre_window_check(model, w, ts, margin)
        assert q > 0
        assert abs(q - free_window_oracle(model, w.lo, w.hi)) <= 0.01 * q


def test_positive_commutator_free_is_one():
    rep = positive_commutator_check(_ir_model(0.0), 0.05)
    assert np.isclose(rep.min_quotient, 1.0)
    assert rep.surviving_bound_states == 0


def test_positive_commutator_needs_ir_cutoff():
    with pytest.raises(PreconditionError):
        positive_commutator_check(_gauss_model(0.1), 0.05)


def test_golden_rule_constant_coupling():
    # |k| dispersion, constant coupling c: two resonant momenta, width 2 c^2
    c = 0.3
    grid = build_mode_grid(-4.0, 4.0, 800, "massless", 0.5)
    form = spin_boson_form(grid, lambda k: np.full_like(k, c), 1.0)
    fgr = fermi_golden_rule(spin_boson_particle(1.5), grid, form, 0.05)
    width = float(np.real(fgr.extrapolated[1][0, 0]))
    assert abs(width - 2 * c * c) <= 0.02 * 2 * c * c
    assert np.linalg.eigvalsh(fgr.extrapolated[1])[0] > 0


def test_density_below_lightest_mode_is_vacuum(rng):
    rep = density_rank_check(np.array([1.0, 1.5]), 0.9, rng)
    assert rep.dim == 1 and rep.deficit == 0


def test_density_uniform_frequencies_reach_two_quanta(rng):
    M = 3
    rep = density_rank_check(np.ones(M), 2.5, rng)
    assert rep.dim == math.comb(M + 2, 2)
    assert rep.deficit == 0


@given(st.integers(0, 2**31), st.integers(2, 4))
def test_density_rank_random_grids(seed, M):
    rng = np.random.default_rng(seed)
    omega = np.sort(rng.uniform(0.5, 2.0, M))
    assert density_rank_check(omega, 3.0, rng).deficit == 0


def test_density_rejects_non_positive():
    with pytest.raises(HypothesisViolation):
        density_rank_check(np.array([0.0, 1.0]), 1.0, np.random.default_rng(0))


def test_number_energy_bound():
    rep = number_energy_bound(_gauss_model(0.1))
    assert rep.passes(1e-10)
    assert np.isclose(rep.constant, 2.0 / _gauss_model(0.1).grid.mass_gap)


def test_conjugate_inequalities():
    grid = build_mode_grid(-2.0, 2.0, 6)
    reports = conjugate_inequalities(grid, build_basis(6, 2))
    assert len(reports) == 3
    assert all(r.passes(1e-10) for r in reports)
