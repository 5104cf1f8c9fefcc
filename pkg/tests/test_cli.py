import io
import json
import subprocess
import sys

import pytest

from xorcow.cli import build_parser, run_cli

SUBCOMMANDS = ["eval", "min-snr", "sweep", "optimize-phases", "freqhop", "simulate", "validate"]


def run(argv, environ=None):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(argv, out=out, err=err, environ=environ or {})
    return code, out.getvalue(), err.getvalue()


def field(text, key):
    for line in text.splitlines():
        name, _, value = line.partition(" ")
        if name == key:
            return value
    raise KeyError(key)


def test_min_snr_defaults_headline():
    code, out, _ = run(["min-snr", "--schedule", "fixed"])
    assert code == 0
    assert float(field(out, "min_snr_db")) <= 2.0


def test_numbers_printed_with_many_digits():
    _, out, _ = run(["eval", "--n", "5", "--snr-db", "-3"])
    mantissa = field(out, "p_fail").split("e")[0].replace(".", "").lstrip("0")
    assert len(mantissa) >= 9


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_exits_zero(cmd, capsys):
    assert run_cli([cmd, "--help"]) == 0
    assert "--snr-db" in capsys.readouterr().out


def test_unknown_flag_is_usage_error(capsys):
    assert run_cli(["eval", "--bogus"]) == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["eval", "--split", "0.5,0.6,0.1"],
    ["eval", "--split", "a,b,c"],
    ["sweep", "--schemes", "telepathy"],
    ["eval", "--config", "/nonexistent/cfg.json"],
    [],
])
def test_bad_values_are_usage_errors(argv, capsys):
    code, _, _ = run(argv)
    assert code == 2


def test_bracket_failure_exit_one():
    code, _, err = run(["min-snr", "--n", "1"])
    assert code == 1 and "not bracketed" in err


def test_unwritable_output_exit_one(tmp_path):
    code, _, _ = run(["sweep", "--n-values", "5", "--schemes", "xorcow-fixed",
                      "--out", str(tmp_path / "no" / "such" / "file.csv")])
    assert code == 1


def test_sweep_writes_and_is_deterministic(tmp_path):
    argv = ["sweep", "--n-values", "3,10", "--m-values", "160,480", "--schemes", "xorcow-fixed,freqhop"]
    for fmt in ("csv", "json", "svg"):
        a, b = tmp_path / f"a.{fmt}", tmp_path / f"b.{fmt}"
        assert run(argv + ["--format", fmt, "--out", str(a)])[0] == 0
        assert run(argv + ["--format", fmt, "--out", str(b)])[0] == 0
        assert a.read_bytes() == b.read_bytes()
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "scheme,n,m_bits,min_snr_db,aux,status" and len(lines) == 9


def test_sweep_with_bracket_failure_row_exits_one():
    code, out, _ = run(["sweep", "--n-values", "1,3", "--schemes", "xorcow-fixed"])
    assert code == 1 and "bracket-failure" in out


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"n": 7, "snr_db": -1.0, "seed": 3}))
    _, out, _ = run(["eval", "--dump-config", "--config", str(cfg), "--n", "9"], environ={"XORCOW_SEED": "5"})
    data = json.loads(out)
    assert data["n"] == 9 and data["snr_db"] == -1.0 and data["seed"] == 3


def test_env_seed_is_default():
    _, out, _ = run(["simulate", "--dump-config"], environ={"XORCOW_SEED": "17"})
    assert json.loads(out)["seed"] == 17
    assert run(["simulate", "--dump-config"], environ={"XORCOW_SEED": "x"})[0] == 2


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"nodes": 7}))
    code, _, err = run(["eval", "--config", str(cfg)])
    assert code == 2 and "nodes" in err


def test_dumped_config_round_trips(tmp_path):
    _, first, _ = run(["sweep", "--dump-config", "--n", "11", "--cycle-ms", "4", "--bandwidth-mhz", "10",
                       "--split", "0.4,0.4,0.2"])
    path = tmp_path / "cfg.json"
    path.write_text(first)
    _, second, _ = run(["sweep", "--dump-config", "--config", str(path)])
    assert first == second
    data = json.loads(first)
    assert data["cycle_T"] == 0.004 and data["bandwidth_W"] == 1e7


def test_simulate_is_deterministic():
    argv = ["simulate", "--n", "6", "--snr-db", "-5", "--trials", "20000", "--seed", "4"]
    a, b = run(argv), run(argv)
    assert a == b and a[0] == 0
    assert int(field(a[1], "failures")) > 0


def test_eval_schemes():
    for scheme, extra in (("xorcow", []), ("occupycow2", []), ("freqhop", ["--k", "12"])):
        code, out, _ = run(["eval", "--scheme", scheme, "--n", "5", "--snr-db", "0"] + extra)
        assert code == 0 and 0 <= float(field(out, "p_fail")) <= 1


def test_optimize_and_freqhop_commands():
    code, out, _ = run(["optimize-phases", "--n", "10"])
    assert code == 0 and float(field(out, "min_snr_db")) <= float(field(out, "equal_split_snr_db"))
    code, out, _ = run(["freqhop", "--n", "5"])
    assert code == 0 and 10 <= int(field(out, "k")) <= 30


def test_validate_small():
    code, out, _ = run(["validate", "--max-n", "2", "--trials", "5000"])
    assert code == 0
    assert out.count("PASS") == 2 + 2 * 3 and "FAIL" not in out


def test_validate_refuses_large_enumeration():
    assert run(["validate", "--max-n", "6"])[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "xorcow", "eval", "--n", "3", "--snr-db", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("p_fail ")


def test_parser_lists_all_subcommands():
    text = build_parser().format_help()
    assert all(cmd in text for cmd in SUBCOMMANDS)
