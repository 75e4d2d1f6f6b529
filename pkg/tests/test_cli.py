import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from spinsim.cli import run


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.delenv("SPINSIM_SEED", raising=False)
    return tmp_path


def call(out, *argv):
    return run([*argv, "--out", str(out)])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def table(path):
    return {k: float(v) for k, v in read_csv(path)[1:]}


# ------------------------------------------------------------- exit codes


def test_usage_errors_exit_2(out, capsys):
    assert run(["bogus"]) == 2
    assert run(["budget", "--no-such-flag"]) == 2
    assert run([]) == 2
    assert "usage" in capsys.readouterr().err


def test_help_exits_0(capsys):
    assert run(["--help"]) == 0
    assert "constants" in capsys.readouterr().out


@pytest.mark.parametrize("cmd", [["pulse"], ["readout"], ["sweep"], ["sequence", "run", "fig3.seq"],
                                 ["budget", "--pn", "-74", "--mc-trials", "100"]])
def test_missing_seed_exit_1(out, capsys, cmd):
    assert call(out, *cmd) == 1
    assert "SPINSIM_SEED" in capsys.readouterr().err


def test_seed_from_environment(out, monkeypatch):
    monkeypatch.setenv("SPINSIM_SEED", "4")
    assert call(out, "readout", "--trials", "200") == 0
    assert json.loads((out / "runs.log").read_text())["seed"] == 4


def test_validation_errors_exit_1(out, tmp_path):
    assert call(out, "budget") == 1
    assert call(out, "rwa", "--ratio", "1.5") == 1
    assert call(out, "readout", "--seed", "1", "--trials", "10") == 1
    assert call(out, "sequence", "check", str(tmp_path / "missing.seq")) == 1
    bad = tmp_path / "bad.seq"
    bad.write_text("point A vl=0 vr=0\nstep Z dwell=1us\n")
    assert call(out, "sequence", "check", str(bad)) == 1


# ---------------------------------------------------------- subcommands


def test_constants(out):
    assert call(out, "constants") == 0
    rows = read_csv(out / "constants.csv")
    assert rows[0] == ["parameter", "value"]
    t = table(out / "constants.csv")
    assert t["min_splitting_meV"] == pytest.approx(0.2585, abs=1e-4)
    assert t["min_larmor_Hz"] == pytest.approx(62.5e9, rel=1e-3)


def test_budget_example(out, schema):
    assert call(out, "budget", "--target", "0.999", "--fr", "750e6", "--pn", "-74", "--dt-frac", "0.014") == 0
    rep = json.loads((out / "budget.json").read_text())
    jsonschema.validate(rep, schema("budget"))
    by = {s["source"]: s for s in rep["sources"]}
    assert by["pn"]["infidelity"] == pytest.approx(125e-6, rel=0.15)
    assert by["timing"]["infidelity"] == pytest.approx(125e-6, rel=0.15)
    assert rep["n_allocations"] == 8 and rep["pass"] is True
    assert read_csv(out / "budget.csv")[0] == ["source", "infidelity", "allocation", "overrun"]


def test_budget_monte_carlo(out, schema):
    assert call(out, "budget", "--df", "11.8e6", "--mc-trials", "100", "--seed", "1") == 0
    rep = json.loads((out / "budget.json").read_text())
    jsonschema.validate(rep, schema("budget"))
    assert rep["monte_carlo"]["mean"] == pytest.approx(rep["sources"][0]["infidelity"], abs=1e-9)


def test_rwa_seedless(out):
    assert call(out, "rwa", "--ratio", "5", "--seedless") == 0
    t = table(out / "rwa.csv")
    assert 3e-3 <= t["infidelity_worst"] <= 1.2e-2
    assert t["infidelity_phase0"] == pytest.approx(7e-3, rel=0.2)


def test_rabi_json(out, schema):
    assert call(out, "rabi", "--format", "json", "--detuning", "11.8e6") == 0
    d = json.loads((out / "rabi.json").read_text())
    jsonschema.validate(d, schema("rabi"))
    assert d["infidelity_worst_case"] == pytest.approx(1.2376e-4, rel=1e-3)


def test_pulse(out, schema):
    assert call(out, "pulse", "--seed", "3", "--t-on", "20e-12", "--rise", "0", "--fall", "0") == 0
    side = json.loads((out / "pulse.json").read_text())
    jsonschema.validate(side, schema("waveform"))
    assert side["meta"]["metrics"]["carrier_cycles"] == pytest.approx(1.2, abs=1e-9)
    assert read_csv(out / "pulse.csv")[0] == ["time_s", "value"]


def test_pulse_field_output(out):
    assert call(out, "pulse", "--seed", "3", "--output", "field", "--envelope") == 0
    side = json.loads((out / "pulse.json").read_text())
    assert side["unit"] == "tesla" and side["baseband"] is True


@pytest.mark.parametrize("scheme", ["ero", "trro", "blockade"])
def test_readout(out, schema, scheme):
    assert call(out, "readout", "--scheme", scheme, "--trials", "500", "--seed", "2", "--format", "json") == 0
    d = json.loads((out / "readout.json").read_text())
    jsonschema.validate(d, schema("readout"))


def test_sweep(out, schema):
    args = ["sweep", "--seed", "1", "--trials", "100", "--i-peaks", "1e-9,1e-8", "--windows", "1e-8"]
    assert call(out, *args) == 0
    rows = read_csv(out / "sweep.csv")
    assert rows[0] == ["i_peak", "window", "error_rate", "snr"] and len(rows) == 3
    assert call(out, *args, "--format", "json") == 0
    jsonschema.validate(json.loads((out / "sweep.json").read_text()), schema("sweep"))


def test_sequence_run(out, schema):
    cfg = out / "models.json"
    from spinsim.config import reference_config

    cfg.write_text(json.dumps(reference_config()))
    assert call(out, "sequence", "run", "fig3.seq", "--shots", "200", "--seed", "7", "--config", str(cfg)) == 0
    d = json.loads((out / "sequence.json").read_text())
    jsonschema.validate(d, schema("sequence"))
    assert d["charge_path"] == [[0, 0], [0, 1], [1, 1], [1, 1], [0, 1], [0, 1], [0, 0]]
    assert d["estimates"]["right"]["p_up"] == 0.0
    rows = read_csv(out / "timeline.csv")
    assert rows[0][:3] == ["shot", "t_s", "point"] and len(rows) == 1 + 200 * 7


def test_sequence_check_and_fmt(out, schema, tmp_path):
    assert call(out, "sequence", "check", "fig3.seq") == 0
    jsonschema.validate(json.loads((out / "diagnostics.json").read_text()), schema("diagnostics"))
    messy = tmp_path / "m.seq"
    messy.write_text("point Z vl=0.001 vr=0\npoint A vl=-0.02 vr=0   # c\nstep A dwell=0.000001\n")
    assert call(out, "sequence", "fmt", str(messy)) == 0
    assert (out / "m.canonical.seq").read_text() == "point A vl=-20mV vr=0V\npoint Z vl=1mV vr=0V\nstep A dwell=1us\n"


# ------------------------------------------------------ config and logs


def test_config_precedence(out, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"_note": "ignored", "budget": {"target": 0.99, "pn": -74}}))
    assert call(out, "budget", "--config", str(cfg)) == 0
    assert json.loads((out / "budget.json").read_text())["target"] == 0.99
    assert call(out, "budget", "--config", str(cfg), "--target", "0.9999") == 0
    rep = json.loads((out / "budget.json").read_text())
    assert rep["target"] == 0.9999 and rep["sources"][0]["source"] == "pn"


@pytest.mark.parametrize("cfg", [{"budget": {"targte": 0.9}}, {"bugdet": {}}, {"models": {"laser": 1}}, [1]])
def test_bad_config_exit_1(out, tmp_path, cfg):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert call(out, "budget", "--pn", "-74", "--config", str(p)) == 1


def test_manifest(out, schema):
    assert call(out, "constants") == 0
    assert call(out, "rwa", "--ratio", "20", "--phases", "2") == 0
    lines = (out / "runs.log").read_text().splitlines()
    assert len(lines) == 2
    for line in lines:
        jsonschema.validate(json.loads(line), schema("manifest"))
    assert json.loads(lines[1])["subcommand"] == "rwa"


def test_plot_flag(out):
    assert call(out, "rabi", "--plot") == 0
    assert (out / "rabi.png").read_bytes()[:4] == b"\x89PNG"
    assert (out / "rabi.csv").exists()


def test_same_seed_byte_identical(out, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["readout", "--seed", "9", "--trials", "300", "--out", str(d)]) == 0
    assert (a / "readout.csv").read_bytes() == (b / "readout.csv").read_bytes()


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "spinsim", "constants", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert (tmp_path / "constants.csv").exists()
    r = subprocess.run([sys.executable, "-m", "spinsim", "nope"], capture_output=True, text=True)
    assert r.returncode == 2
