"""Experiment configuration: YAML loading, schema validation and model assembly.

A config is a single YAML mapping::

    seed: 0
    model:
      particle: {kind: spin_boson, splitting: 1.75, bias: 0.0}
      grid: {k_min: 0.25, k_max: 3.0, dispersion: massless, mass: 0.5}
      form: {kind: spin_boson, g: 0.2, ir_cutoff: 0.5,
             profile: {kind: ir, m: 0.5, width: 0.5}}
      hypotheses: {alpha: 1.0, mu: 1.0}
    truncation: {n_modes: 12, n_max: 2, dim_cap: 50000}
    experiment:
      name: relax
      params: {...}
      tolerances: {...}
    output: {dir: runs/relax}

``model`` may be omitted for experiments that do not need one.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigError
from .fock import DEFAULT_DIM_CAP, DISPERSIONS, build_basis, build_mode_grid
from .models import (ParticleSystem, build_hamiltonian, dipole_form, ir_profile,
                     spin_boson_form, spin_boson_particle)

EXPERIMENTS = ("algebra", "spectrum", "virial", "mourre", "poscomm", "fgr", "fields", "waveop",
               "wobs", "deift-simon", "relax", "propcheck", "sfunc")
MODEL_FREE = ("algebra", "sfunc", "propcheck")
PROFILES = ("constant", "gaussian", "ir")


def _require(block, key, where, kind=None):
    if not isinstance(block, dict) or key not in block:
        raise ConfigError(f"{where}: missing key {key!r}")
    val = block[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{where}.{key}: expected {kind.__name__ if isinstance(kind, type) else kind}, "
                          f"got {type(val).__name__}")
    return val


def _number(block, key, where, default=None, positive=False, nonneg=False):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected a mapping")
    if key not in block:
        if default is None:
            raise ConfigError(f"{where}: missing key {key!r}")
        return default
    val = block[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {val!r}")
    val = float(val)
    if not math.isfinite(val):
        raise ConfigError(f"{where}.{key}: must be finite")
    if positive and val <= 0:
        raise ConfigError(f"{where}.{key}: must be positive, got {val}")
    if nonneg and val < 0:
        raise ConfigError(f"{where}.{key}: must be non-negative, got {val}")
    return val


def _count(block, key, where, default=None, minimum=0):
    val = _number(block, key, where, default=None if default is None else float(default))
    if val != int(val) or val < minimum:
        raise ConfigError(f"{where}.{key}: expected an integer >= {minimum}, got {val}")
    return int(val)


def _unknown(block, allowed, where):
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown keys {extra}")


# --------------------------------------------------------------------------
# validated blocks


@dataclass(frozen=True)
class ModelSpec:
    particle: dict
    grid: dict
    form: dict
    hypotheses: dict


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    seed: int
    model: ModelSpec | None
    n_modes: int | None
    n_max: int | None
    dim_cap: int
    params: dict
    tolerances: dict
    output_dir: str | None
    raw: dict = field(repr=False, default_factory=dict)

    def param(self, key, default=None):
        return self.params.get(key, default)

    def tol(self, key, default):
        val = self.tolerances.get(key, default)
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"experiment.tolerances.{key}: expected a number, got {val!r}")
        return float(val)


def _validate_particle(block):
    where = "model.particle"
    kind = _require(block, "kind", where, str)
    if kind == "spin_boson":
        _unknown(block, ("kind", "splitting", "bias"), where)
        _number(block, "splitting", where, positive=True)
        _number(block, "bias", where, default=0.0)
    elif kind == "matrix":
        _unknown(block, ("kind", "K"), where)
        K = _require(block, "K", where, list)
        try:
            arr = np.array(K, dtype=complex)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.K: not a numeric matrix ({exc})") from None
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
            raise ConfigError(f"{where}.K: expected a square matrix of size >= 2, got {arr.shape}")
    else:
        raise ConfigError(f"{where}.kind: expected 'spin_boson' or 'matrix', got {kind!r}")


def _validate_grid(block):
    where = "model.grid"
    _unknown(block, ("k_min", "k_max", "dispersion", "mass"), where)
    lo, hi = _number(block, "k_min", where), _number(block, "k_max", where)
    if hi <= lo:
        raise ConfigError(f"{where}: k_max must exceed k_min")
    disp = block.get("dispersion", "relativistic")
    if disp not in DISPERSIONS:
        raise ConfigError(f"{where}.dispersion: expected one of {DISPERSIONS}, got {disp!r}")
    _number(block, "mass", where, default=1.0, positive=True)


def _validate_profile(block):
    where = "model.form.profile"
    kind = _require(block, "kind", where, str)
    if kind not in PROFILES:
        raise ConfigError(f"{where}.kind: expected one of {PROFILES}, got {kind!r}")
    if kind == "constant":
        _unknown(block, ("kind", "value"), where)
        _number(block, "value", where, default=1.0)
    elif kind == "gaussian":
        _unknown(block, ("kind", "center", "width", "amplitude"), where)
        _number(block, "center", where, default=0.0)
        _number(block, "width", where, default=1.0, positive=True)
        _number(block, "amplitude", where, default=1.0)
    else:
        _unknown(block, ("kind", "m", "width", "decay", "center"), where)
        _number(block, "m", where, positive=True)
        for key in ("width", "decay", "center"):
            if key in block:
                _number(block, key, where, positive=key != "center")


def _validate_form(block):
    where = "model.form"
    kind = block.get("kind", "spin_boson")
    if kind not in ("spin_boson", "dipole"):
        raise ConfigError(f"{where}.kind: expected 'spin_boson' or 'dipole', got {kind!r}")
    _unknown(block, ("kind", "g", "ir_cutoff", "profile", "sites"), where)
    _number(block, "g", where, default=0.0)
    if block.get("ir_cutoff") is not None:
        _number(block, "ir_cutoff", where, positive=True)
    _validate_profile(_require(block, "profile", where, dict))
    if kind == "dipole":
        sites = _require(block, "sites", where, list)
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in sites):
            raise ConfigError(f"{where}.sites: expected a list of numbers")
    elif "sites" in block:
        raise ConfigError(f"{where}.sites: only meaningful for the dipole form")


def _validate_hypotheses(block):
    where = "model.hypotheses"
    _unknown(block, ("alpha", "mu"), where)
    for key in ("alpha", "mu"):
        if key in block:
            _number(block, key, where, positive=True)


def validate(raw):
    """Check ``raw`` against the schema and return an :class:`ExperimentConfig`.

    Raises
    ------
    ConfigError
        Any schema violation, with the offending key path.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a mapping")
    _unknown(raw, ("seed", "model", "truncation", "experiment", "output"), "config")
    seed = _count(raw, "seed", "config", default=0)
    exp = _require(raw, "experiment", "config", dict)
    _unknown(exp, ("name", "params", "tolerances"), "experiment")
    name = _require(exp, "name", "experiment", str)
    if name not in EXPERIMENTS:
        raise ConfigError(f"experiment.name: expected one of {EXPERIMENTS}, got {name!r}")
    params = exp.get("params") or {}
    tols = exp.get("tolerances") or {}
    if not isinstance(params, dict) or not isinstance(tols, dict):
        raise ConfigError("experiment.params and experiment.tolerances must be mappings")

    model = None
    n_modes = n_max = None
    trunc = raw.get("truncation") or {}
    if not isinstance(trunc, dict):
        raise ConfigError("truncation: expected a mapping")
    _unknown(trunc, ("n_modes", "n_max", "dim_cap"), "truncation")
    dim_cap = _count(trunc, "dim_cap", "truncation", default=DEFAULT_DIM_CAP, minimum=1)
    if "model" in raw:
        mb = _require(raw, "model", "config", dict)
        _unknown(mb, ("particle", "grid", "form", "hypotheses"), "model")
        _validate_particle(_require(mb, "particle", "model", dict))
        _validate_grid(_require(mb, "grid", "model", dict))
        _validate_form(_require(mb, "form", "model", dict))
        hyp = mb.get("hypotheses") or {}
        _validate_hypotheses(hyp)
        model = ModelSpec(mb["particle"], mb["grid"], mb["form"], hyp)
        n_modes = _count(trunc, "n_modes", "truncation", minimum=2)
        n_max = _count(trunc, "n_max", "truncation", minimum=1)
        if model.form.get("kind") == "dipole":
            K = _particle_matrix_size(model.particle)
            if len(model.form["sites"]) != K:
                raise ConfigError(f"model.form.sites: need {K} sites for a {K}-level particle")
    elif name not in MODEL_FREE:
        raise ConfigError(f"experiment {name!r} needs a model block")

    out = raw.get("output") or {}
    if not isinstance(out, dict):
        raise ConfigError("output: expected a mapping")
    _unknown(out, ("dir",), "output")
    out_dir = out.get("dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("output.dir: expected a path string")
    return ExperimentConfig(name, seed, model, n_modes, n_max, dim_cap, dict(params), dict(tols),
                            out_dir, copy.deepcopy(raw))


def _particle_matrix_size(block):
    return 2 if block["kind"] == "spin_boson" else len(block["K"])


def load_config(path):
    """Read and validate a YAML config file.

    Raises
    ------
    ConfigError
        Unreadable file, malformed YAML or a schema violation.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from None
    return validate(raw)


# --------------------------------------------------------------------------
# assembly


def build_profile(block):
    """Scalar profile ``kappa(k)`` from a validated profile block."""
    kind = block["kind"]
    if kind == "constant":
        value = float(block.get("value", 1.0))
        return lambda k: value * np.ones_like(np.asarray(k, dtype=float))
    if kind == "gaussian":
        c, w, a = (float(block.get(x, d)) for x, d in (("center", 0.0), ("width", 1.0),
                                                      ("amplitude", 1.0)))
        return lambda k: a * np.exp(-((np.asarray(k, dtype=float) - c) ** 2) / (2 * w * w))
    opts = {x: float(block[x]) for x in ("width", "decay", "center") if x in block}
    return ir_profile(float(block["m"]), **opts)


def build_particle(block):
    if block["kind"] == "spin_boson":
        return spin_boson_particle(float(block["splitting"]), float(block.get("bias", 0.0)))
    return ParticleSystem.from_matrix(np.array(block["K"], dtype=complex))


def build_grid(block, n_modes):
    return build_mode_grid(float(block["k_min"]), float(block["k_max"]), int(n_modes),
                           block.get("dispersion", "relativistic"), float(block.get("mass", 1.0)))


def build_form(block, grid, g=None):
    g = float(block.get("g", 0.0)) if g is None else float(g)
    profile = build_profile(block["profile"])
    if block.get("kind", "spin_boson") == "dipole":
        return dipole_form(grid, np.asarray(block["sites"], dtype=float), profile, g)
    cutoff = block.get("ir_cutoff")
    return spin_boson_form(grid, profile, g, None if cutoff is None else float(cutoff))


def build_components(cfg, n_modes=None):
    """``(particle, grid, form)`` without assembling a Fock space."""
    spec = cfg.model
    grid = build_grid(spec.grid, cfg.n_modes if n_modes is None else n_modes)
    return build_particle(spec.particle), grid, build_form(spec.form, grid)


def build_model(cfg):
    """Assemble the :class:`ModelInstance` of a config.

    Raises
    ------
    TruncationCapError
        The Fock basis exceeds ``truncation.dim_cap``.
    HypothesisViolation
        The form factor carries an IR cutoff but does not vanish below it.
    """
    particle, grid, form = build_components(cfg)
    basis = build_basis(cfg.n_modes, cfg.n_max, cap=cfg.dim_cap)
    return build_hamiltonian(particle, grid, basis, form)


def inert_symbols(cfg):
    """Decay rate and exponent symbols that are validated but play no numerical role."""
    if cfg.model is None:
        return {}
    return {k: {"value": v, "role": "inert for confined particles"}
            for k, v in cfg.model.hypotheses.items()}
