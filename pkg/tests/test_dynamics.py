import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fockscatter import (RecurrenceError, TruncationOverflowError, build_basis, build_hamiltonian,
                         build_mode_grid)
from fockscatter.dynamics.calculus import (build_position_grid, commutator_remainders,
                                           functional_commutator_check, velocity_cutoff)
from fockscatter.dynamics.cutoffs import EnergyWindow, VelocityCutoff
from fockscatter.dynamics.deift_simon import (extended_system, leakage_sweep,
                                              partition_derivative, summing_partition)
from fockscatter.dynamics.fields import asymptotic_field, peak_decay_ratio, wave_operator_apply
from fockscatter.dynamics.observables import free_positivity, limit_fit
from fockscatter.dynamics.propagation import (ConvergenceTrace, Propagator, TimeGrid,
                                              recurrence_estimate)
from fockscatter.dynamics.relaxation import (excitation_cap, golden_rule_rate,
                                             relaxation_experiment, relaxation_observable,
                                             weyl_operator)
from fockscatter.dynamics.sfunction import (SFunction, heisenberg_dS, s_function_checks,
                                            second_derivative_y2)
from fockscatter.errors import PreconditionError
from fockscatter.models import ir_profile, spin_boson_form, spin_boson_particle
from fockscatter.second_quant import create


def _gauss_model(g=0.1, M=6, n_max=2, splitting=1.0):
    grid = build_mode_grid(-2.0, 2.0, M)
    form = spin_boson_form(grid, lambda k: np.exp(-k * k / 2), g)
    return build_hamiltonian(spin_boson_particle(splitting), grid, build_basis(M, n_max), form)


def _ir_model(g=0.2, M=8):
    grid = build_mode_grid(0.25, 3.0, M, "massless", 0.5)
    form = spin_boson_form(grid, ir_profile(0.5, width=0.5), g, ir_cutoff=0.5)
    return build_hamiltonian(spin_boson_particle(1.75), grid, build_basis(M, 2), form)


# -- propagation ---------------------------------------------------------------


@given(st.integers(0, 2**31), st.floats(-20.0, 20.0))
def test_propagation_unitary_and_energy_conserving(seed, t):
    model = _gauss_model(M=4)
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=model.dim) + 1j * rng.normal(size=model.dim)
    psi /= np.linalg.norm(psi)
    prop = Propagator(model.H, eig=model.eig)
    out = prop.evolve(psi, t)
    assert abs(np.linalg.norm(out) - 1.0) <= 1e-12
    assert abs(prop.energy(out) - prop.energy(psi)) <= 1e-12 * max(1.0, abs(prop.energy(psi)))


def test_backends_agree():
    model = _gauss_model(M=4)
    psi = np.zeros(model.dim, dtype=complex)
    psi[3] = 1.0
    a = Propagator(model.H).evolve(psi, [0.5, 3.0])
    b = Propagator(model.H, backend="expm").evolve(psi, [0.5, 3.0])
    assert np.allclose(a, b, atol=1e-10)


def test_heisenberg_of_conserved_quantity():
    model = _gauss_model(M=4)
    prop = Propagator(model.H)
    psi = np.ones(model.dim, dtype=complex) / math.sqrt(model.dim)
    assert np.allclose(prop.heisenberg(model.H, psi, 2.0), model.H @ psi, atol=1e-11)


def test_recurrence_estimate():
    assert np.isclose(recurrence_estimate([1.0, 1.5, 1.75]), 2 * math.pi / 0.5)
    assert recurrence_estimate([1.0, 1.0]) == math.inf


def test_time_grid_refuses_recurrence():
    tg = TimeGrid.linear(0.0, 40.0, 10, omega=[1.0, 1.25])
    with pytest.raises(RecurrenceError):
        tg.require_pre_recurrence()
    with pytest.raises(PreconditionError):
        TimeGrid.geometric(0.5, 10.0, 4)


def test_trace_slopes_and_rows():
    t = np.geomspace(1, 100, 9)
    tr = ConvergenceTrace.from_scalars(t, t ** -2.0)
    assert np.allclose(tr.slopes, -2.0)
    assert np.isclose(tr.fitted_slope(), -2.0)
    assert tr.monotone_decreasing(1.0, "values")
    assert len(tr.rows()) == 9 and len(tr.rows()[0]) == 5
    assert math.isnan(tr.increments[0])


def test_trace_from_vectors():
    t = np.array([1.0, 2.0])
    tr = ConvergenceTrace.from_vectors(t, np.array([[3.0, 4.0], [0.0, 1.0]]))
    assert np.allclose(tr.values.real, [5.0, 1.0])
    assert np.isclose(tr.increments[1], math.sqrt(9 + 9))


# -- cutoffs ---------------------------------------------------------------------


def test_sharp_energy_window():
    w = EnergyWindow(0.0, 1.0)
    assert w.weights([-0.1, 0.0, 0.5, 1.0, 1.1]).tolist() == [0, 1, 1, 1, 0]
    w = EnergyWindow(0.0, 1.0, soft=0.2).weights(np.linspace(-1, 2, 31))
    assert np.all((w >= 0) & (w <= 1))


def test_velocity_cutoff_limits():
    vc = VelocityCutoff(np.diag([0.0, 1.0, 100.0]), lam=1.0)
    assert np.allclose(vc.weights(1.0), [1.0, 1.0, 0.0])
    with pytest.raises(PreconditionError):
        VelocityCutoff(np.eye(2), lam=0.0)


# -- S function ------------------------------------------------------------------


@given(st.floats(0.05, 0.95), st.floats(-4.0, 4.0))
def test_s0_flat_and_far_regions(delta, y):
    S = SFunction.build(delta)
    u = 0.5 * y * y
    if u <= 1.0:
        assert S.s0(y) == 0.0
    elif u >= 2.0:
        assert np.isclose(S.s0(y), u + S.b)
    assert S.hess_s0(y) >= 0.0


def test_s0_derivative_consistent():
    S = SFunction.build(0.5)
    y = np.linspace(-3, 3, 61)
    h = 1e-5
    assert np.allclose((S.s0(y + h) - S.s0(y - h)) / (2 * h), S.grad_s0(y), atol=1e-6)


@pytest.mark.parametrize("delta", [0.3, 0.5, 0.7])
def test_s_function_rates(delta):
    S = SFunction.build(delta)
    t = np.geomspace(1.0, 100.0, 12)
    reach = 5.0 * t[-1] ** delta
    rep = s_function_checks(S, np.linspace(-reach, reach, 20001), t)
    assert rep.passes
    assert rep.flat_region_max <= 1e-12


def test_delta_range_checked():
    with pytest.raises(PreconditionError):
        SFunction.build(1.0)


def test_heisenberg_ds_hermitian_and_constant_omega():
    grid = build_mode_grid(-2.0, 2.0, 30)
    S = SFunction.build(0.5)
    ds = heisenberg_dS(S, grid, 3.0)
    assert np.allclose(ds, ds.conj().T)
    flat = dataclasses.replace(grid, omega=np.ones(30))
    assert np.allclose(heisenberg_dS(S, flat, 3.0),
                       grid.position_function(lambda y: S.dt_S(y, 3.0)), atol=1e-12)


# -- fields and wave operators -----------------------------------------------------


def test_free_field_constant():
    model = _ir_model(g=0.0)
    h = model.grid.sample(lambda k: np.exp(-(k - 1.75) ** 2 / 0.5))
    h /= np.linalg.norm(h)
    vac = np.eye(model.basis.dim)[0]
    one = create(h, model.basis) @ vac
    psi = model.product_state(model.particle.level_vectors(0)[:, 0], one)
    tg = TimeGrid.linear(0.0, 0.9 * recurrence_estimate(model.grid.omega), 20, omega=model.grid.omega)
    v = np.abs(asymptotic_field(model, h, psi, tg).trace.values)
    assert np.max(np.abs(v - v[0])) <= 1e-12 * v[0]


def test_peak_decay_ratio():
    tr = ConvergenceTrace.from_scalars([0, 1, 2, 3], [1.0, 4.0, 0.5, 2.0])
    assert np.isclose(peak_decay_ratio(tr), 8.0)


def test_wave_operator_without_creators_is_identity():
    model = _ir_model()
    bound = model.eig.vectors[:, 0]
    rep = wave_operator_apply(model, bound, [], [1.0, 5.0])
    assert np.allclose(rep.last, bound, atol=1e-12)


def test_wave_operator_free_norm_matches_ccr():
    model = _ir_model(g=0.0)
    h = model.grid.sample(lambda k: np.exp(-(k - 1.75) ** 2 / 0.5))
    rep = wave_operator_apply(model, model.eig.vectors[:, 0], [h], [1.0, 4.0])
    assert rep.norm_defect <= 1e-10 * rep.expected_norm


def test_wave_operator_overflow():
    model = _ir_model()
    h = np.ones(model.grid.n_modes)
    with pytest.raises(TruncationOverflowError):
        wave_operator_apply(model, model.eig.vectors[:, 0], [h, h, h], [1.0])


# -- observables -------------------------------------------------------------------


def test_limit_fit_recovers_intercept():
    t = np.geomspace(5, 100, 10)
    assert np.isclose(limit_fit(t, 0.3 + 2.0 / t - 1.0 / t ** 2), 0.3)


def test_free_second_derivative_split():
    grid = build_mode_grid(-2.0, 2.0, 40)
    rep = free_positivity(grid, [1.0, 2.0, 5.0])
    assert rep.passes(1e-10)
    d2 = second_derivative_y2(grid, 2.0)
    assert np.allclose(d2, d2.conj().T)


# -- relaxation --------------------------------------------------------------------


def test_relaxation_from_ground_state_is_constant():
    model = _ir_model()
    h = model.grid.sample(lambda k: 0.5 * np.exp(-(k - 1.75) ** 2))
    A = relaxation_observable(model, model.particle.projector(1), h)
    tg = TimeGrid.linear(0.0, 10.0, 11, omega=model.grid.omega)
    rep = relaxation_experiment(model, model.eig.vectors[:, 0], A, tg)
    vals = rep.trace.values
    assert np.allclose(vals, vals[0], atol=1e-12)
    assert np.max(rep.deviation) <= 1e-12


def test_relaxation_mu_above_cap_rejected():
    model = _ir_model()
    A = np.eye(model.dim)
    tg = TimeGrid.linear(0.0, 1.0, 3)
    with pytest.raises(PreconditionError, match="mu misconfigured"):
        relaxation_experiment(model, model.excited_product(1), A, tg, mu=excitation_cap(model) + 1)


def test_weyl_operator_unitary():
    model = _ir_model(M=4)
    W = weyl_operator(model, np.full(4, 0.3))
    assert np.allclose(W.conj().T @ W, np.eye(W.shape[0]), atol=1e-12)


def test_golden_rule_rate():
    assert np.isclose(golden_rule_rate(0.18, 0.1), math.pi * 0.01 * 0.18)


# -- commutator calculus -------------------------------------------------------------


def test_commutator_with_constant_function_vanishes():
    grid = build_position_grid(64, 100.0)
    g = (lambda p: np.sqrt(p * p + 1), lambda p: p / np.sqrt(p * p + 1))
    f = (lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
    left, right = commutator_remainders(grid, g, f, 0.1)
    assert left <= 1e-12 and right <= 1e-12


def test_functional_commutator_decay():
    grid = build_position_grid(256, 256.0)
    rep = functional_commutator_check(grid, 1, [8.0, 16.0, 32.0], 1.0)
    assert rep.slope < -1.5


def test_velocity_cutoff_shapes():
    F, dF = velocity_cutoff(1.0)
    assert np.isclose(F(0.0), 1.0) and dF(0.0) < 0


# -- doubled space -------------------------------------------------------------------


def test_summing_partition_and_derivative():
    grid = build_mode_grid(-2.0, 2.0, 20)
    spec = summing_partition(grid, 0.5, 4.0)
    assert np.allclose(spec.j0 + spec.j_inf, np.eye(20))
    dj = partition_derivative(grid, spec, 0.5, 4.0)
    assert np.allclose(dj[:20] + dj[20:], 0)


def test_extended_system_overflow():
    model = _gauss_model(M=3)
    with pytest.raises(TruncationOverflowError):
        extended_system(model, n_max=1)


def test_leakage_reach_checked():
    model = _gauss_model(M=10, n_max=1)
    with pytest.raises(PreconditionError, match="grid reach"):
        leakage_sweep(model, EnergyWindow(-10, 10), [0.1, 0.2, 0.4], 1e4)
