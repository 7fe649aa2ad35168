import csv
import io
import json
import subprocess
import sys

import pytest

from dfsqec.cli import main

AMBIGUOUS = "r=01000 s=0010"      # shared by Z0X2 and X3Z4


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name,distance", [("1014", 4), ("513", 3), ("211", 1), ("dfs", 1)])
def test_codes_verify(capsys, name, distance):
    code, out, _ = run(capsys, "codes", "verify", name)
    assert code == 0
    assert f"distance: {distance}" in out and "PASS" in out
    if name == "1014":
        assert "reproduces the generators" in out


def test_unknown_code_is_a_usage_error(capsys):
    code, _, err = run(capsys, "codes", "verify", "7")
    assert code == 2 and "unknown code" in err


def test_decode_worked_examples(capsys):
    code, out, _ = run(capsys, "decode", "r=00000 s=0100", "r=10000 s=1001", AMBIGUOUS)
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "Z8" and lines[1] == "X1Z6"
    assert "ambiguous" in lines[2] and "rejected" not in lines[2]
    _, out, _ = run(capsys, "decode", "--mode", "post-select", AMBIGUOUS)
    assert out.split()[1:] == ["ambiguous", "rejected"]


def test_decode_rejects_malformed_records(capsys):
    code, _, err = run(capsys, "decode", "s=0000")
    assert code == 2 and err


def test_decode_batch(capsys, tmp_path):
    path = tmp_path / "records.txt"
    path.write_text("record\nr=00000 s=0100\n# comment\nr=00000 s=0000\n")
    code, out, _ = run(capsys, "decode", "--batch", str(path))
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert [r["correction"] for r in rows] == ["Z8", "I"]


def test_fault_scan_and_negative_control(capsys):
    code, out, _ = run(capsys, "fault-scan")
    assert code == 0 and "violations" in out.lower()
    code, _, _ = run(capsys, "fault-scan", "--deflag")
    assert code == 1


def test_run_and_fit(capsys, tmp_path):
    out_dir = tmp_path / "run"
    code, _, _ = run(capsys, "run", "--set", "noise.preset=ideal", "--set", "plan.qubit_kind=physical",
                     "--set", "shots=20", "--set", "times=0,1,2,3", "--seed", "4",
                     "--workers", "1", "--out", str(out_dir))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO((out_dir / "results.csv").read_text())))
    assert rows and all(float(r["p"]) == 1.0 for r in rows)
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["seed"] == 4 and set(manifest["outputs"]) == {"results.csv", "summary.json"}
    assert manifest["config"]["plan"]["seed"] == 4

    fit_dir = tmp_path / "fit"
    code, out, _ = run(capsys, "fit", str(out_dir / "summary.json"), "--out", str(fit_dir))
    assert code == 0
    report = json.loads((fit_dir / "lifetimes.json").read_text())
    assert report["bounded"]["physical"] is False      # nothing decays without noise
    assert (fit_dir / "table.csv").read_text().startswith("label,kind,parameter")


def test_run_with_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[plan]\nqubit_kind = dfs\nstates = 1,+\ntimes = 0,5,10\nshots = 10\n\n"
                   "[noise]\npreset = dephasing-only\n")
    code, _, _ = run(capsys, "run", "--config", str(cfg), "--workers", "1", "--out", str(tmp_path / "o"))
    assert code == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["plan"]["qubit_kind"] == "dfs"


@pytest.mark.parametrize("sets", [["bogus"], ["noise.p2=2"], ["plan.colour=red"], ["weird.key=1"]])
def test_bad_overrides_exit_2(capsys, tmp_path, sets):
    argv = ["run", "--out", str(tmp_path)]
    for s in sets:
        argv += ["--set", s]
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_missing_config_exits_2(capsys, tmp_path):
    code, _, _ = run(capsys, "run", "--config", str(tmp_path / "none.ini"), "--out", str(tmp_path))
    assert code == 2


def test_bench_decoder_small(capsys):
    code, out, _ = run(capsys, "bench-decoder", "--n", "2000")
    assert code == 0 and "median" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dfsqec.cli", "decode", "r=00000 s=0100"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.strip() == "Z8"
    proc = subprocess.run([sys.executable, "-m", "dfsqec.cli"], capture_output=True, text=True, check=False)
    assert proc.returncode == 2
