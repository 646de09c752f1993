import json

import pytest

from fracbergman.cli import build_parser, main, render_csv
from fracbergman.config import DEFAULTS, ConfigError, load_config, parse_config, parse_mesh

SMALL = {"mesh": [32, 32], "functionMesh": [16, 16], "familyRandom": 100, "lambdaGridSize": 32}


def write_config(tmp_path, doc):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return str(path)


def run(tmp_path, *argv, config=None):
    out = tmp_path / "out"
    args = list(argv) + ["--out", str(out)]
    if config is not None:
        args += ["--config", write_config(tmp_path, config)]
    return main(args), out


def test_defaults_parse():
    cfg = parse_config({})
    assert cfg.mesh == (128, 128)
    assert cfg.exponent_grid == ((0.0, 1.0, 1.5),)
    assert len(cfg.weights) == 3 and len(cfg.functions) == 4


@pytest.mark.parametrize("doc,field", [
    ({"mesh": [0, 4]}, "mesh"),
    ({"quadTol": -1}, "quadTol"),
    ({"exponentGrid": [[0, 1, 2.5]]}, "exponentGrid[0]"),
    ({"exponentGrid": [[-1, 0, 2]]}, "exponentGrid[0]"),
    ({"weights": [{"kind": "nope"}]}, "weights[0]"),
    ({"scaleWindow": [3, 1]}, "scaleWindow"),
    ({"seed": 1.5}, "seed"),
    ({"extra": 1}, "extra"),
])
def test_bad_fields_named(doc, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        parse_config(doc)


def test_invalid_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"seed": 1,\n "mesh": }')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)


def test_parse_mesh():
    assert parse_mesh("64x32") == (64, 32)
    with pytest.raises(ConfigError):
        parse_mesh("64by32")


def test_override_updates_echo():
    cfg = parse_config({}).override(seed=5, mesh=(8, 8))
    assert cfg.seed == 5 and cfg.raw["seed"] == 5 and cfg.raw["mesh"] == [8, 8]


def test_help_lists_defaults():
    text = build_parser().format_help()
    assert "quadTol" in text and "exit codes" in text
    assert set(DEFAULTS) <= set(text.replace(":", " ").split())


def test_constants_command(tmp_path):
    code, out = run(tmp_path, "constants")
    assert code == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["pass"] and doc["command"] == "constants"
    assert (out / "results.csv").read_text().startswith("experiment,parameter,lhs,rhs,ratio,tolerance,pass")


def test_require_finite_exit_code(tmp_path):
    cfg = {"weights": [{"kind": "power", "s": 0.9}]}
    code, _ = run(tmp_path, "constants", "--require-finite", config=cfg)
    assert code == 3


def test_config_error_exit_code(tmp_path):
    code, _ = run(tmp_path, "constants", config={"mesh": "big"})
    assert code == 2


def test_empty_weights_exit_code(tmp_path):
    code, _ = run(tmp_path, "experiment", "--theorem", "weak-T", config={**SMALL, "weights": []})
    assert code == 2


def test_window_too_small_exit_code(tmp_path):
    code, _ = run(tmp_path, "verify", config={**SMALL, "scaleWindow": [0, 0]})
    assert code == 3


def test_failed_check_exit_code(tmp_path):
    code, out = run(tmp_path, "experiment", "--theorem", "weak-P", config={**SMALL, "cMax": 1e-6})
    assert code == 4
    assert not json.loads((out / "report.json").read_text())["pass"]


def test_experiment_skips_weights_outside_class(tmp_path):
    code, out = run(tmp_path, "experiment", "--theorem", "weak-T", config=SMALL)
    assert code == 0
    notes = json.loads((out / "report.json").read_text())["reports"][0]["notes"]
    assert any("y^0.125" in n for n in notes)


def test_cli_flag_overrides(tmp_path):
    code, out = run(tmp_path, "experiment", "--theorem", "weak-P", "--seed", "3", "--mesh", "16x16",
                    "--tol", "1e-5", config=SMALL)
    assert code == 0
    echo = json.loads((out / "report.json").read_text())["config"]
    assert echo["seed"] == 3 and echo["mesh"] == [16, 16]
    assert echo["quadTol"]["value"] == 1e-5


def test_render_csv_empty():
    assert render_csv([]) == "experiment,parameter,lhs,rhs,ratio,tolerance,pass\r\n"
