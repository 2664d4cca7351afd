import csv
import json
import math
import subprocess
import sys

import pytest

from boundwalk.cli import PARAMS, ConfigError, dumps, main, parse_angle, resolve_config


@pytest.mark.parametrize("text, value", [
    ("pi", math.pi), ("0.5pi", math.pi / 2), ("-pi/4", -math.pi / 4), ("3pi/4", 0.75 * math.pi),
    ("0.8", 0.8), ("-1.5e-1", -0.15), ("2*pi", 2 * math.pi), (1.25, 1.25),
])
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, abs=1e-15)


@pytest.mark.parametrize("text", ["", "abc", "pi pi", "1/0x"])
def test_parse_angle_rejects_garbage(text):
    with pytest.raises(ValueError):
        parse_angle(text)


def test_resolve_config_defaults_and_unknown_key():
    cfg = resolve_config("spectrum", {"M": "30"})
    assert cfg == {"M": 30, "g": math.pi}
    with pytest.raises(ConfigError, match="'bogus'"):
        resolve_config("spectrum", {"bogus": 1})
    with pytest.raises(ConfigError, match="'M'"):
        resolve_config("spectrum", {"M": "many"})


def test_dumps_uses_17_digits():
    text = dumps({"a": 0.1, "b": [1, True, None]})
    assert text == '{"a": 0.10000000000000001, "b": [1, true, null]}'
    assert json.loads(text) == {"a": 0.1, "b": [1, True, None]}


def test_evolve_csv_with_config_sidecar(tmp_path):
    out = tmp_path / "joint.csv"
    assert main(["evolve", "--g", "pi", "--t", "10", "--output", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x1", "x2", "probability"]
    assert len(rows) - 1 == 23 * 23
    assert sum(float(r[2]) for r in rows[1:]) == pytest.approx(1.0, abs=1e-12)
    side = json.loads((tmp_path / "joint.csv.config.json").read_text())
    assert side["config"] == {"experiment": "evolve", "g": math.pi, "t": 10, "L": None, "initial": "singlet"}


def test_spectrum_json_has_28_rows(tmp_path):
    out = tmp_path / "spec.json"
    assert main(["spectrum", "--M", "28", "--g", "pi", "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["rows"]) == 28 and doc["gap_count"] > 0
    for row in doc["rows"]:
        assert len(row["phases"]) == len(row["in_gap"]) == 28 * 4


def test_dispersion_free_pair_all_forbidden(capsys):
    assert main(["dispersion", "--g", "0", "--grid", "101"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["allowed_points"] == 0
    rows = doc["table"]["rows"]
    assert len(rows) == 101
    assert all(r[3] is False and r[4] is False for r in rows)


def test_unknown_config_key_gives_nonzero_exit(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"g": "pi", "temperature": 3}))
    assert main(["capture", "--config", str(cfg)]) != 0
    assert "temperature" in capsys.readouterr().err


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as info:
        main(["capture", "--temperature", "3"])
    assert info.value.code != 0


def test_numerical_failure_propagates_as_exit(capsys):
    # the - branch at p = 1.05, g = 0.8 is forbidden
    assert main(["boundstate", "--p", "1.05", "--g", "0.8", "--branch", "-"]) == 2
    assert "sin(w) sin(g - w)" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"g": "0.5pi", "grid": 4096}))
    assert main(["capture", "--config", str(cfg), "--g", "pi"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["config"] == {"experiment": "capture", "g": math.pi, "grid": 4096}
    assert abs(doc["integrated_capture"] - 2 / 3) <= 1e-4


@pytest.mark.parametrize("argv", [
    ["velocity", "--g", "pi", "--grid", "200"],
    ["boundstate", "--p", "0", "--g", "pi", "--cutoff", "5"],
    ["asymptotic", "--g", "pi", "--bins", "20"],
    ["qca", "--M", "6", "--t", "2"],
    ["fastmol", "--t", "5"],
])
def test_json_round_trip_and_config_echo(argv, capsys):
    assert main(argv) == 0
    text = capsys.readouterr().out
    doc = json.loads(text)
    assert dumps(doc) + "\n" == text
    name = argv[0]
    assert set(doc["config"]) == {"experiment", *PARAMS[name]}
    defaults = resolve_config(name, {})
    given = dict(zip((a[2:] for a in argv[1::2]), argv[2::2]))
    for key, value in doc["config"].items():
        if key == "experiment":
            assert value == name
        elif key not in given:
            assert value == defaults[key]


def test_reruns_are_bit_identical(tmp_path):
    paths = []
    for i in range(2):
        out = tmp_path / f"run{i}.json"
        assert main(["boundstate", "--p", "0.4", "--g", "0.8", "--output", str(out)]) == 0
        paths.append(out.read_bytes())
    assert paths[0] == paths[1]


def test_defect_synthesis_command(capsys):
    assert main(["defect-synthesis", "--M", "16"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["multiplicity"] >= 1 and doc["nearest_distances"][0] <= 1e-6


def test_defect_synthesis_rejects_band_phase(capsys):
    assert main(["defect-synthesis", "--z-phase", "0", "--M", "8"]) != 0
    assert "z_phase" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "boundwalk", "velocity", "--g", "pi", "--grid", "100"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["max_speed"] == pytest.approx(1 / 3)
