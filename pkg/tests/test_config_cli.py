import csv
import json
from pathlib import Path

import pytest
import yaml

from fockscatter import ConfigError
from fockscatter.cli import CSV_COLUMNS, main
from fockscatter.config import EXPERIMENTS, build_model, inert_symbols, load_config, validate

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

SMALL_MODEL = {
    "particle": {"kind": "spin_boson", "splitting": 1.0},
    "grid": {"k_min": -2.0, "k_max": 2.0, "dispersion": "relativistic", "mass": 1.0},
    "form": {"kind": "spin_boson", "g": 0.1, "profile": {"kind": "gaussian"}},
}


def _raw(name="virial", **extra):
    raw = {"seed": 0, "model": SMALL_MODEL, "truncation": {"n_modes": 4, "n_max": 2},
           "experiment": {"name": name}}
    raw.update(extra)
    return raw


def _write(tmp_path, raw, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    return path


# -- validation ----------------------------------------------------------------------


def test_all_shipped_configs_validate():
    names = set()
    for path in sorted(CONFIGS.glob("*.yaml")):
        names.add(load_config(path).name)
    assert names == set(EXPERIMENTS)


@pytest.mark.parametrize("mutate, where", [
    (lambda r: r.pop("experiment"), "missing key 'experiment'"),
    (lambda r: r["experiment"].update(name="nope"), "experiment.name"),
    (lambda r: r.update(extra=1), "unknown keys"),
    (lambda r: r["truncation"].update(n_modes=1), "truncation.n_modes"),
    (lambda r: r["truncation"].update(n_max=1.5), "truncation.n_max"),
    (lambda r: r.pop("model"), "needs a model block"),
    (lambda r: r["model"]["grid"].update(k_max=-3.0), "k_max must exceed k_min"),
    (lambda r: r["model"]["grid"].update(dispersion="quadratic"), "model.grid.dispersion"),
    (lambda r: r["model"]["form"].update(profile={"kind": "lorentz"}), "model.form.profile.kind"),
    (lambda r: r["model"]["particle"].update(splitting=-1), "model.particle.splitting"),
    (lambda r: r.update(seed=-2), "config.seed"),
])
def test_schema_errors_name_the_key(mutate, where):
    raw = yaml.safe_load(yaml.safe_dump(_raw()))
    mutate(raw)
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        validate(raw)


def test_malformed_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("seed: [1,\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="malformed YAML"):
        load_config(path)


def test_model_free_experiment_needs_no_model():
    cfg = validate({"experiment": {"name": "sfunc"}})
    assert cfg.model is None and cfg.seed == 0


def test_inert_symbols_listed():
    raw = _raw()
    raw["model"] = {**SMALL_MODEL, "hypotheses": {"alpha": 1.0, "mu": 2.0}}
    assert set(inert_symbols(validate(raw))) >= {"alpha", "mu"}


def test_build_model_from_config():
    model = build_model(validate(_raw()))
    assert model.basis.n_modes == 4 and model.g == 0.1


# -- command line ----------------------------------------------------------------------


def _algebra(tmp_path, tol=1e-12):
    return _write(tmp_path, {"seed": 3, "experiment": {
        "name": "algebra",
        "params": {"sizes": [[2, 2]], "split_scale": [[3, 2]]},
        "tolerances": {"identity": tol}}})


def test_cli_pass_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", str(_algebra(tmp_path)), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == "algebra" and manifest["seed"] == 3
    assert all(c["status"] == "PASS" for c in manifest["checks"])
    summary = (out / "summary.txt").read_text()
    assert "split-unitarity" in summary and "asserted checks passed" in summary
    assert "PASS" in capsys.readouterr().out


def test_cli_failure_exit_code(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["--config", str(_algebra(tmp_path, tol=1e-40)), "--out", str(out)]) == 1
    assert "FAILED" in capsys.readouterr().err


def test_cli_deterministic(tmp_path):
    cfg = _algebra(tmp_path)
    main(["--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["--config", str(cfg), "--out", str(tmp_path / "b")])
    for name in ("manifest.json", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_seed_override(tmp_path):
    out = tmp_path / "run"
    main(["--config", str(_algebra(tmp_path)), "--out", str(out), "--seed", "11"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 11 and manifest["config"]["seed"] == 11


def test_cli_trace_csv_columns(tmp_path):
    raw = {"experiment": {"name": "sfunc", "params": {"deltas": [0.5], "n_times": 6,
                                                      "n_points": 2001}}}
    out = tmp_path / "run"
    assert main(["--config", str(_write(tmp_path, raw)), "--out", str(out)]) == 0
    files = sorted(out.glob("*.csv"))
    assert files
    with open(files[0], newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 7


def test_cli_subcommand_overrides_name(tmp_path):
    raw = {"experiment": {"name": "algebra", "params": {"deltas": [0.5], "n_times": 4,
                                                        "n_points": 1001}}}
    out = tmp_path / "run"
    main(["sfunc", "--config", str(_write(tmp_path, raw)), "--out", str(out)])
    assert json.loads((out / "manifest.json").read_text())["experiment"] == "sfunc"


@pytest.mark.parametrize("name, code, message", [
    ("ir-violation.yaml", 2, "infrared cutoff violated"),
    ("relax-past-recurrence.yaml", 2, "recurrence"),
    ("dimension-cap.yaml", 3, "truncation"),
])
def test_cli_invalid_configs(tmp_path, capsys, name, code, message):
    assert main(["--config", str(CONFIGS / "invalid" / name), "--out", str(tmp_path)]) == code
    assert message in capsys.readouterr().err


def test_cli_schema_error_exit_code(tmp_path):
    path = _write(tmp_path, {"experiment": {"name": "virial"}})
    assert main(["--config", str(path)]) == 2


def test_cli_requires_config(capsys):
    assert main([]) == 2


def test_cli_list_checks(capsys):
    assert main(["--list-checks"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in EXPERIMENTS)
