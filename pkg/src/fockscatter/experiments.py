"""One runner per CLI subcommand.

Each runner takes a validated :class:`~fockscatter.config.ExperimentConfig`
and returns a :class:`RunResult`: tagged check rows, named traces and
free-form numbers for the manifest.  Parameters and tolerances fall back to
the defaults below when a config leaves them out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import build_components, build_form, build_grid, build_model, build_profile
from .dynamics.calculus import (build_position_grid, commutator_expansion_check,
                                functional_commutator_check)
from .dynamics.cutoffs import EnergyWindow
from .dynamics.deift_simon import deift_simon, extended_system, leakage_sweep
from .dynamics.fields import (asymptotic_field, peak_decay_ratio, product_annihilation_decay,
                              wave_operator_apply)
from .dynamics.observables import (asymptotic_observable, free_positivity,
                                   propagation_estimate_diagnostic)
from .dynamics.propagation import ConvergenceTrace, TimeGrid, recurrence_estimate
from .dynamics.relaxation import golden_rule_rate, relaxation_experiment, relaxation_observable
from .dynamics.sfunction import SFunction, s_function_checks
from .errors import ConfigError
from .fock import build_basis, build_mode_grid, vacuum
from .identities import algebra_suite, split_scale_check
from .models import commutator_HA, hypothesis_report
from .polarization import default_profiles, north_south_isometry
from .second_quant import create
from .spectral import (admissible_windows, conjugate_inequalities, density_rank_check,
                       fermi_golden_rule, free_window_oracle, ground_gap_check,
                       mourre_window_check, number_energy_bound, positive_commutator_check,
                       virial_sweep)
from .tensor_split import build_tensor_basis, scattering_identification


@dataclass(frozen=True)
class CheckRow:
    """One summary line.  ``passed`` is ``None`` for reported-only quantities."""

    tag: str
    name: str
    value: float
    target: str
    passed: bool | None


@dataclass
class RunResult:
    checks: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    hypotheses: list = field(default_factory=list)

    def check(self, tag, name, value, target, passed):
        self.checks.append(CheckRow(tag, name, float(value), target,
                                    None if passed is None else bool(passed)))

    @property
    def failures(self):
        return [c for c in self.checks if c.passed is False]


# --------------------------------------------------------------------------
# parameter helpers


def _floats(cfg, key, default):
    val = cfg.param(key, default)
    try:
        return [float(x) for x in (val if isinstance(val, (list, tuple)) else [val])]
    except (TypeError, ValueError):
        raise ConfigError(f"experiment.params.{key}: expected numbers, got {val!r}") from None


def _float(cfg, key, default):
    val = cfg.param(key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"experiment.params.{key}: expected a number, got {val!r}")
    return float(val)


def _block(cfg, key, default):
    val = cfg.param(key, None)
    if val is None:
        return dict(default)
    if not isinstance(val, dict):
        raise ConfigError(f"experiment.params.{key}: expected a mapping")
    return {**default, **val}


def time_grid(spec, omega, where="tgrid"):
    """A :class:`TimeGrid` from ``{kind, t_min, t_max | t_max_fraction, n}``.

    ``t_max_fraction`` scales the recurrence estimate of ``omega``.
    """
    kind = spec.get("kind", "linear")
    if kind not in ("linear", "geometric"):
        raise ConfigError(f"{where}.kind: expected 'linear' or 'geometric', got {kind!r}")
    rec = recurrence_estimate(omega)
    if "t_max" in spec:
        t_max = float(spec["t_max"])
    elif "t_max_fraction" in spec:
        if not math.isfinite(rec):
            raise ConfigError(f"{where}.t_max_fraction: the mode set has no recurrence")
        t_max = float(spec["t_max_fraction"]) * rec
    else:
        raise ConfigError(f"{where}: give t_max or t_max_fraction")
    build = TimeGrid.linear if kind == "linear" else TimeGrid.geometric
    return build(float(spec.get("t_min", 0.0 if kind == "linear" else 1.0)), t_max,
                 int(spec.get("n", 60)), recurrence=rec)


def packet(grid, k0, sigma):
    """Normalized mode vector of ``exp(-(k - k0)^2 / 4 sigma^2)``."""
    h = grid.sample(lambda k: np.exp(-((k - k0) ** 2) / (4 * sigma * sigma)))
    return h / np.linalg.norm(h)


def _profile_vector(grid, spec):
    return grid.sample(build_profile({"kind": "gaussian", **spec}))


def _window(spec, e0, where):
    try:
        return EnergyWindow(e0 + float(spec["lo"]), e0 + float(spec["hi"]),
                            float(spec.get("soft", 0.0)))
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"{where}: expected lo, hi (relative to the ground energy), soft") from None


def _one_boson_state(model, level, h):
    fock = create(h, model.basis) @ vacuum(model.basis).coeffs
    return model.product_state(model.particle.level_vectors(level)[:, 0], fock)


def _with_hypotheses(result, model, fgr=None):
    result.hypotheses = hypothesis_report(model, fgr)
    return result


# --------------------------------------------------------------------------
# runners


def run_algebra(cfg):
    res = RunResult()
    tol = cfg.tol("identity", 1e-12)
    sizes = [tuple(int(x) for x in s) for s in cfg.param("sizes", [[2, 2], [3, 2], [4, 3]])]
    for (M, n), chk in algebra_suite(sizes, seed=cfg.seed, tol=tol):
        rel = chk.residual / max(chk.scale, 1.0) if chk.kind == "equality" else chk.residual
        target = f"<= {tol:g}" if chk.kind == "equality" else f"<= {chk.scale:.6g}"
        res.check(chk.group, f"{chk.name} [M={M}, n_max={n}]", rel, target, chk.passes)
    for M, n in cfg.param("split_scale", [[10, 3]]):
        rep = split_scale_check(int(M), int(n), seed=cfg.seed, tol=tol)
        res.check("split-unitarity", f"U*U = UU* = 1 [joint dim {rep.tensor_dim}]",
                  rep.unitarity, f"<= {tol:g}", rep.unitarity <= tol)
        res.check("split-right-inverse", f"I Gamma_check(j) = 1 [joint dim {rep.tensor_dim}]",
                  rep.right_inverse, f"<= {tol:g}", rep.right_inverse <= tol)
    m = _float(cfg, "polarization_mass", 0.5)
    rng = np.random.default_rng(cfg.seed)
    k = rng.normal(size=(int(cfg.param("polarization_samples", 200)), 3))
    k *= (m + rng.uniform(0.0, 3.0, size=(k.shape[0], 1))) / np.linalg.norm(k, axis=1, keepdims=True)
    iso = north_south_isometry(*default_profiles(m), k, m)
    res.check("polarization-isometry", f"u*u = 1 on {iso.n_samples} momenta", iso.max_residual,
              "<= 1e-12", iso.max_residual <= 1e-12)
    # |I| is finite at every cutoff but grows with it; reported, not asserted
    growth = {}
    for n in range(1, int(cfg.param("identification_max_n", 4)) + 1):
        basis = build_basis(2, n)
        ident = scattering_identification(build_tensor_basis(basis), basis)
        growth[n] = float(np.linalg.norm(ident.toarray(), 2))
    res.info["identification_norm_by_cutoff"] = growth
    return res


def run_spectrum(cfg):
    model = build_model(cfg)
    res = _with_hypotheses(RunResult(), model)
    g = model.g
    couplings = _floats(cfg, "couplings", [0.0, 0.5 * g, g] if g else [0.0])
    gap = ground_gap_check(model, couplings)
    for c, mult, d in zip(gap.couplings, gap.multiplicities, gap.gaps):
        res.check("ground-state", f"ground multiplicity at g={c:g}", mult, "== 1", mult == 1)
        res.check("ground-gap", f"gap above the ground state at g={c:g}", d, "> 0", d > 0)
    res.info["gap_constant"] = gap.constant
    res.info["ground_energies"] = gap.ground.tolist()
    rep = number_energy_bound(model)
    rel = cfg.tol("psd", 1e-10)
    res.check("number-energy", f"min eig(aH + b - N), a = {rep.constant:.6g}", rep.min_eigenvalue,
              f">= -{rel:g} * {rep.scale:.4g}", rep.passes(rel))
    for r in conjugate_inequalities(model.grid, model.basis):
        res.check("conjugate-inequality", f"{r.name} min eigenvalue", r.min_eigenvalue,
                  f">= -{rel:g} * {r.scale:.4g}", r.passes(rel))
    dens = _block(cfg, "density", {"modes": [3, 4, 5], "seeds": [0, 1, 2], "c": 3.0,
                                   "omega_range": [0.5, 2.0]})
    lo, hi = (float(x) for x in dens["omega_range"])
    for i, M in enumerate(dens["modes"]):
        omega = np.sort(np.random.default_rng([cfg.seed, i]).uniform(lo, hi, int(M)))
        for s in dens["seeds"]:
            d = density_rank_check(omega, float(dens["c"]), np.random.default_rng([cfg.seed, i, s]))
            res.check("density-rank", f"span rank, grid {i} ({M} modes), seed {s}", d.rank,
                      f"== {d.dim}", d.deficit == 0)
    return res


def run_virial(cfg):
    model = build_model(cfg)
    res = _with_hypotheses(RunResult(), model)
    tol = cfg.tol("virial", 1e-9)
    for g in _floats(cfg, "couplings", [0.0, 0.05, 0.1]):
        resid, norm_a = virial_sweep(model.with_coupling(g))
        res.check("virial", f"max |<phi, i[H, A] phi>| / |A| over {resid.size} eigenvectors, g={g:g}",
                  resid.max() / norm_a, f"<= {tol:g}", resid.max() <= tol * norm_a)
    return res


def run_mourre(cfg):
    model = build_model(cfg)
    res = _with_hypotheses(RunResult(), model)
    width, cap = _float(cfg, "width", 0.15), _float(cfg, "cap", 3.2)
    oracle_tol = cfg.tol("free_oracle", 0.01)
    for g in _floats(cfg, "couplings", [0.0, 0.02, 0.05]):
        mod = model.with_coupling(g)
        wins, ts, margin = admissible_windows(mod, width, cap)
        rep = commutator_HA(mod)
        scale = max(float(np.abs(rep.commutator.data).max(initial=0.0)), 1.0)
        res.check("commutator-assembly", f"|i[H, A] - dGamma(i[omega, a]) + g phi(iaG)|, g={g:g}",
                  rep.difference_norm / scale, "<= 1e-10", rep.difference_norm <= 1e-10 * scale)
        if not wins:
            res.check("mourre-positivity", f"admissible windows at g={g:g}", 0, ">= 1", False)
            continue
        qs = [mourre_window_check(mod, w, ts, margin, rep) for w in wins]
        res.check("mourre-positivity", f"min quotient over {len(wins)} windows, g={g:g}", min(qs),
                  "> 0", min(qs) > 0)
        if g == 0.0:
            err = max(abs(q - free_window_oracle(mod, w.lo, w.hi)) / free_window_oracle(mod, w.lo, w.hi)
                      for q, w in zip(qs, wins))
            res.check("mourre-free-oracle", "max relative gap to the dGamma(|omega'|^2) oracle",
                      err, f"<= {oracle_tol:g}", err <= oracle_tol)
        res.info[f"windows_g{g:g}"] = [[w.lo, w.hi, w.rank] for w in wins]
    return res


def run_poscomm(cfg):
    model = build_model(cfg)
    res = _with_hypotheses(RunResult(), model)
    eps = _float(cfg, "eps", 0.05)
    floor = cfg.tol("min_quotient", 0.9)
    for g in _floats(cfg, "couplings", [0.01, 0.03, 0.05]):
        rep = positive_commutator_check(model.with_coupling(g), eps)
        res.check("positive-commutator", f"min quotient of N - g phi(iaG) on (E_g, E_1 - eps], g={g:g}",
                  rep.min_quotient, f">= {floor:g}", rep.min_quotient >= floor)
        res.check("no-embedded-bound-state", f"bound states classified in the window, g={g:g}",
                  rep.surviving_bound_states, "== 0", rep.surviving_bound_states == 0)
    return res


def run_fgr(cfg):
    particle, grid, form = build_components(cfg)
    eta = _float(cfg, "eta", 0.05)
    fgr = fermi_golden_rule(particle, grid, form.with_coupling(1.0), eta)
    res = RunResult()
    for j, gam in enumerate(fgr.extrapolated[1:], start=1):
        w = float(np.linalg.eigvalsh(gam)[0])
        res.check("golden-rule-positivity", f"min eig of the level-{j} width matrix", w, "> 0", w > 0)
    oracle = cfg.param("oracle")
    if oracle is not None:
        tol = cfg.tol("oracle", 0.02)
        val = float(np.real(fgr.extrapolated[1][0, 0]))
        err = abs(val - float(oracle)) / abs(float(oracle))
        res.check("golden-rule-oracle", f"eta-extrapolated width {val:.6g} vs {float(oracle):g}",
                  err, f"<= {tol:g}", err <= tol)
    res.info["widths"] = [np.real(np.diag(m)).tolist() for m in fgr.extrapolated]
    res.info["dropped_resonances"] = [list(d) for d in fgr.dropped]
    return res


def run_fields(cfg):
    model = build_model(cfg)
    res = _with_hypotheses(RunResult(), model)
    grid = model.grid
    h = _profile_vector(grid, _block(cfg, "h", {"center": 1.75, "width": 0.5}))
    tg = time_grid(_block(cfg, "tgrid", {"kind": "linear", "t_max_fraction": 0.95, "n": 120}),
                   grid.omega)
    free = model.with_coupling(0.0)
    psi_free = _one_boson_state(free, 0, h / np.linalg.norm(h))
    rep0 = asymptotic_field(free, h, psi_free, tg)
    v = np.abs(rep0.trace.values)
    spread = float(np.max(np.abs(v - v[0])) / v[0])
    res.check("free-field-constancy", "relative spread of |a(h_t) psi_t| at g=0", spread,
              "<= 1e-12", spread <= 1e-12)
    ground = model.eig.vectors[:, 0]
    rep = asymptotic_field(model, h, ground, tg)
    ratio = peak_decay_ratio(rep.trace)
    floor = cfg.tol("decay_ratio", 10.0)
    res.check("field-decay", f"peak / later minimum of |a(h_t) psi_g,t| at g={model.g:g}", ratio,
              f">= {floor:g}", ratio >= floor)
    res.traces["free_field"] = rep0.trace
    res.traces["ground_field"] = rep.trace
    if model.basis.n_max >= 2:
        res.traces["annihilator_pair"] = product_annihilation_decay(model, [h, h], ground, tg)
    res.info["recurrence_estimate"] = tg.recurrence_estimate
    return res


def run_waveop(cfg):
    model = build_model(cfg)
    res = _with_hypotheses(RunResult(), model)
    grid = model.grid
    h = _profile_vector(grid, _block(cfg, "h", {"center": 1.75, "width": 0.5}))
    times = _floats(cfg, "times", [1.0, 2.0, 4.0, 8.0])
    free = model.with_coupling(0.0)
    rep0 = wave_operator_apply(free, free.eig.vectors[:, 0], [h], times)
    tol = cfg.tol("isometry", 1e-10)
    res.check("wave-operator-isometry", "norm defect against the CCR value at g=0",
              rep0.norm_defect / rep0.expected_norm, f"<= {tol:g}",
              rep0.norm_defect <= tol * rep0.expected_norm)
    rep = wave_operator_apply(model, model.eig.vectors[:, 0], [h], times)
    res.check("wave-operator-norm", f"relative norm defect at g={model.g:g}, T={times[-1]:g}",
              rep.norm_defect / rep.expected_norm, "reported", None)
    res.traces["wave_operator_free"] = rep0.trace
    res.traces["wave_operator"] = rep.trace
    res.info["truncation_weight"] = rep.truncation_weight
    return res


def run_wobs(cfg):
    model = build_model(cfg)
    res = _with_hypotheses(RunResult(), model)
    grid = model.grid
    pk = _block(cfg, "packet", {"k0": 1.0, "sigma": 0.05})
    h = packet(grid, float(pk["k0"]), float(pk["sigma"]))
    tg = time_grid(_block(cfg, "tgrid", {"kind": "geometric", "t_min": 20, "t_max": 120, "n": 8}),
                   grid.omega)
    S = SFunction.build(_float(cfg, "delta", 0.5))
    burn = cfg.param("burn_in")
    free = model.with_coupling(0.0)
    rep0 = asymptotic_observable(free, EnergyWindow(-1e9, 1e9), S, tg, _one_boson_state(free, 0, h),
                                 burn_in=burn)
    k_idx = int(np.argmin(np.abs(grid.k_points - float(pk["k0"]))))
    oracle = 0.5 * float(grid.grad_omega[k_idx]) ** 2
    tol = cfg.tol("velocity", 0.05)
    for label, val in (("observable", rep0.limit), ("dGamma(y^2/2t^2)", rep0.comparator_limit)):
        err = abs(val - oracle) / oracle
        res.check("asymptotic-velocity", f"free packet {label} limit {val:.5g} vs |omega'(k0)|^2/2",
                  err, f"<= {tol:g}", err <= tol)
    res.traces["free_observable"] = rep0.observable
    res.traces["free_comparator"] = rep0.comparator
    if model.g != 0.0:
        win = _window(_block(cfg, "window", {"lo": 1.3, "hi": 1.55}), model.eig.values[0],
                      "experiment.params.window")
        rep = asymptotic_observable(model, win, S, tg, _one_boson_state(model, 0, h), burn_in=burn)
        res.check("continuum-positivity", f"observable limit on the window at g={model.g:g}",
                  rep.limit, "> 0", rep.limit > 0)
        res.traces["window_observable"] = rep.observable
        res.traces["window_comparator"] = rep.comparator
    return res


def run_deift_simon(cfg):
    model = build_model(cfg)
    res = _with_hypotheses(RunResult(), model)
    e0 = model.eig.values[0]
    parts = cfg.param("checks", ["leakage", "composition"])
    if "leakage" in parts:
        lk = _block(cfg, "leakage", {"u": [0.1, 0.2, 0.4], "T": 30.0,
                                     "window": {"lo": -1.0, "hi": 3.0}})
        tol = cfg.tol("leakage_slope", 0.3)
        rep = leakage_sweep(model, _window(lk["window"], e0, "experiment.params.leakage.window"),
                            [float(u) for u in lk["u"]], float(lk["T"]), tol=tol)
        res.check("vacuum-leakage-scaling", "log-log slope of the vacuum-sector leakage in u",
                  rep.slope, f"2 +/- {tol:g}", abs(rep.slope - 2.0) <= tol)
        res.check("vacuum-leakage-bound", "max leakage / 2u^2 |(N+1)^(1/2) chi|^2",
                  float(np.max(rep.values / rep.bound)), "<= 1", bool(np.all(rep.values <= rep.bound)))
        res.info["leakage"] = {"u": rep.u.tolist(), "values": rep.values.tolist()}
    if "composition" in parts:
        cp = _block(cfg, "composition", {
            "u": 0.25, "window": {"lo": 1.1, "hi": 1.9, "soft": 0.1},
            "packet": {"k0": 1.0, "sigma": 0.15},
            "tgrid": {"kind": "geometric", "t_min": 2, "t_max": 30, "n": 12}})
        h = packet(model.grid, float(cp["packet"]["k0"]), float(cp["packet"]["sigma"]))
        tg = time_grid(cp["tgrid"], model.grid.omega, "experiment.params.composition.tgrid")
        rep = deift_simon(model, _window(cp["window"], e0, "experiment.params.composition.window"),
                          SFunction.build(_float(cfg, "delta", 0.5)), float(cp["u"]), tg,
                          _one_boson_state(model, 0, h), ext=extended_system(model))
        burn = float(cp.get("burn_in", tg.samples[0]))
        ok = rep.composition.monotone_decreasing(burn, "values", rtol=0.0)
        vals = np.real(rep.composition.values)
        res.check("composition-residual", "composition residual non-increasing after burn-in",
                  vals[-1], f"monotone from {vals[tg.samples >= burn][0]:.4g}", ok)
        res.traces["deift_simon_iterate"] = rep.trace
        res.traces["composition_residual"] = rep.composition
        res.info["vacuum_sector"] = rep.vacuum_sector.tolist()
        res.info["intertwining_max"] = float(rep.intertwining.max())
    return res


def run_relax(cfg):
    model = build_model(cfg)
    grid = model.grid
    fine_spec = _block(cfg, "fgr", {"k_min": 0.001, "k_max": 6.0, "n_modes": 6000, "eta": 0.02})
    fine = build_grid({**cfg.model.grid, "k_min": fine_spec["k_min"], "k_max": fine_spec["k_max"]},
                      int(fine_spec["n_modes"]))
    fgr = fermi_golden_rule(model.particle, fine, build_form(cfg.model.form, fine, g=1.0),
                            float(fine_spec["eta"]))
    res = _with_hypotheses(RunResult(), model, fgr)
    level = int(cfg.param("level", 1))
    rate = golden_rule_rate(fgr.extrapolated[level][0, 0], model.g)
    obs = _block(cfg, "observable", {"center": 1.75, "width": 2 ** -0.5, "amplitude": 0.5})
    A = relaxation_observable(model, model.particle.projector(level), _profile_vector(grid, obs))
    tg = time_grid(_block(cfg, "tgrid", {"kind": "linear", "t_max_fraction": 0.95, "n": 120}),
                   grid.omega)
    fraction = cfg.tol("fraction", 0.15)
    rep = relaxation_experiment(model, model.excited_product(level), A, tg, fraction=fraction,
                                mu=cfg.param("mu"), fgr_rate=rate,
                                project=bool(cfg.param("project", True)))
    res.check("relaxation", f"deviation below {fraction:g} of its start before t_max", rep.crossing_time,
              f"< {tg.t_max:.4g}", rep.relaxed)
    factor = cfg.tol("rate_factor", 2.0)
    res.check("relaxation-rate", f"fitted decay rate / golden-rule rate {rate:.4g}", rep.rate_ratio,
              f"in [1/{factor:g}, {factor:g}]", rep.rate_within(factor))
    res.traces["relaxation"] = rep.trace
    res.info.update(target=[rep.target.real, rep.target.imag], discarded_weight=rep.discarded,
                    fitted_rate=rep.fitted_rate, golden_rule_rate=rate,
                    recurrence_estimate=tg.recurrence_estimate)
    return res


def run_propcheck(cfg):
    res = RunResult()
    ex = _block(cfg, "expansion", {"n": 256, "length": 400.0, "eps": [0.2, 0.1, 0.05, 0.025],
                                   "fraction": 0.5, "mass": 1.0})
    pg = build_position_grid(int(ex["n"]), float(ex["length"]), "relativistic", float(ex["mass"]))
    m2 = float(ex["mass"]) ** 2
    g_sym = (lambda p: np.sqrt(p * p + m2), lambda p: p / np.sqrt(p * p + m2))
    f_sym = (lambda x: np.exp(-x * x / 2), lambda x: -x * np.exp(-x * x / 2))
    tol = cfg.tol("expansion_slope", 0.2)
    rep = commutator_expansion_check(pg, g_sym, f_sym, ex["eps"], tol=tol,
                                     fraction=float(ex["fraction"]))
    for order, slope in rep.slopes.items():
        res.check("commutator-expansion", f"remainder slope in eps, order {order}", slope,
                  f"2 +/- {tol:g}", abs(slope - 2.0) <= tol)
    fc = _block(cfg, "functional", {"n": 512, "length": 512.0, "n_max": 1,
                                    "times": [8, 16, 32, 64], "lam": 1.0})
    fg = build_position_grid(int(fc["n"]), float(fc["length"]))
    frep = functional_commutator_check(fg, int(fc["n_max"]), [float(t) for t in fc["times"]],
                                       float(fc["lam"]))
    ftol = cfg.tol("functional_slope", 0.2)
    res.check("functional-commutator", "remainder slope in t of [i dGamma(omega), F(dGamma(v^2))]",
              frep.slope, f"-2 +/- {ftol:g}", abs(frep.slope + 2.0) <= ftol)
    res.traces["functional_commutator"] = ConvergenceTrace.from_scalars(
        frep.times, frep.residuals, label="functional commutator remainder")
    grid = build_model(cfg).grid if cfg.model is not None else build_mode_grid(-2, 2, 40)
    fp = free_positivity(grid, _floats(cfg, "positivity_times", [1.0, 2.0, 5.0, 10.0]))
    res.check("free-convexity", "min eig of (i[omega, y] - y/t)^2 / t, relative", fp.form_min.min(),
              ">= -1e-10", fp.form_min.min() >= -1e-10)
    res.check("free-convexity", "defect of the lattice split of the free second derivative",
              fp.identity_residual.max(), "<= 1e-10", fp.identity_residual.max() <= 1e-10)
    res.info["lattice_term"] = fp.lattice_term.tolist()
    if cfg.model is not None:
        model = build_model(cfg)
        res.hypotheses = hypothesis_report(model)
        pk = _block(cfg, "packet", {"k0": 1.0, "sigma": 0.1})
        h = packet(model.grid, float(pk["k0"]), float(pk["sigma"]))
        tg = time_grid(_block(cfg, "tgrid", {"kind": "geometric", "t_min": 2, "t_max": 30, "n": 12}),
                       model.grid.omega)
        prep = propagation_estimate_diagnostic(model, EnergyWindow(-1e9, 1e9),
                                               SFunction.build(_float(cfg, "delta", 0.5)), tg,
                                               _one_boson_state(model, 0, h))
        res.check("propagation-estimate", "shell integrand increments non-increasing after burn-in",
                  prep.partial_integral[-1], "reported", None)
        res.traces["velocity_shell"] = prep.shell
        res.traces["convexity_form"] = prep.quadratic_form
        res.info["shell_increments_non_increasing"] = prep.increments_non_increasing
    return res


def run_sfunc(cfg):
    res = RunResult()
    tol = cfg.tol("slope", 0.15)
    t = np.geomspace(1.0, _float(cfg, "t_max", 100.0), int(cfg.param("n_times", 12)))
    for d in _floats(cfg, "deltas", [0.3, 0.5, 0.7]):
        S = SFunction.build(d)
        reach = 5.0 * t[-1] ** d
        y = np.linspace(-reach, reach, int(cfg.param("n_points", 20001)))
        rep = s_function_checks(S, y, t, tol=tol)
        for fit in (rep.gradient, rep.time_derivative):
            res.check(f"s-function-{fit.name.replace('_', '-')}", f"sup-norm decay slope, delta={d:g}",
                      fit.slope, f"{fit.expected:g} +/- {tol:g}", fit.passes)
        res.check("s-function-convexity", f"min S0'' sampled, delta={d:g}", rep.min_convexity,
                  ">= 0", rep.min_convexity >= 0)
        res.check("s-function-flat", f"max |S| where y^2/2 <= t^(2 delta), delta={d:g}",
                  rep.flat_region_max, "<= 1e-12", rep.flat_region_max <= 1e-12)
        res.traces[f"gradient_sup_delta{d:g}"] = ConvergenceTrace.from_scalars(
            t, rep.gradient.sups, label=f"sup|grad S - y/t|, delta={d:g}")
    return res


RUNNERS = {
    "algebra": (run_algebra, "ladder, second-quantization and splitting identities"),
    "spectrum": (run_spectrum, "ground state, gap, number-energy bound, inequalities, density rank"),
    "virial": (run_virial, "virial residuals over the full spectrum"),
    "mourre": (run_mourre, "compressed commutator positivity on admissible windows"),
    "poscomm": (run_poscomm, "positive commutator below the first excited level"),
    "fgr": (run_fgr, "golden-rule width matrices and their eta-extrapolation"),
    "fields": (run_fields, "asymptotic annihilation field traces"),
    "waveop": (run_waveop, "extended wave operator on one-boson products"),
    "wobs": (run_wobs, "asymptotic velocity observable"),
    "deift-simon": (run_deift_simon, "doubled-space wave operator leakage and composition"),
    "relax": (run_relax, "relaxation of an excited state against the golden-rule rate"),
    "propcheck": (run_propcheck, "commutator expansions, free convexity, propagation estimates"),
    "sfunc": (run_sfunc, "decay rates and convexity of the S function"),
}


def run(cfg):
    runner, _ = RUNNERS[cfg.name]
    return runner(cfg)
