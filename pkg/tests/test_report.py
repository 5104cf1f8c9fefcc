import json
import math
import xml.etree.ElementTree as ET

import pytest

from xorcow.report import CSV_HEADER, RunConfig, SweepRow, render_results, write_results

ROWS = [
    SweepRow("xorcow-fixed", 10, 160, 1.8603515625, "0.3333333333;0.3333333333;0.3333333333", "ok"),
    SweepRow("xorcow-fixed", 30, 160, -0.301513671875, "0.3333333333;0.3333333333;0.3333333333", "ok"),
    SweepRow("freqhop", 10, 480, 16.29272461, "11", "ok"),
    SweepRow("freqhop", 1, 480, math.nan, "", "bracket-failure"),
]


def test_csv_header_and_single_row(tmp_path):
    path = write_results(ROWS[:1], "csv", tmp_path / "one.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "scheme,n,m_bits,min_snr_db,aux,status" == ",".join(CSV_HEADER)
    assert len(lines) == 2
    assert lines[1] == "xorcow-fixed,10,160,1.8603515625,0.3333333333;0.3333333333;0.3333333333,ok"


def test_csv_numbers_keep_nine_digits():
    text = render_results([SweepRow("x", 1, 1, 1.234567891234, "", "ok")], "csv")
    assert "1.234567891" in text


def test_json_keys_match_row_fields(tmp_path):
    path = write_results(ROWS, "json", tmp_path / "rows.json")
    data = json.loads(path.read_text())
    assert [list(d) for d in data] == [list(CSV_HEADER)] * len(ROWS)
    assert data[1]["min_snr_db"] == -0.301513671875
    assert data[3]["min_snr_db"] is None and data[3]["status"] == "bracket-failure"


@pytest.mark.parametrize("fmt", ["csv", "json", "svg"])
def test_outputs_are_byte_stable(tmp_path, fmt):
    a = write_results(ROWS, fmt, tmp_path / f"a.{fmt}").read_bytes()
    b = write_results(list(ROWS), fmt, tmp_path / f"b.{fmt}").read_bytes()
    assert a == b


def test_svg_is_well_formed_with_one_series_per_scheme_and_m(tmp_path):
    path = write_results(ROWS, "svg", tmp_path / "plot.svg")
    root = ET.parse(path).getroot()
    ns = {"s": "http://www.w3.org/2000/svg"}
    assert root.get("viewBox") == "0 0 640 400"
    texts = [t.text for t in root.iter("{http://www.w3.org/2000/svg}text")]
    assert "minimum SNR (dB)" in texts and "network size n (nodes)" in texts
    assert "xorcow-fixed m=160" in texts and "freqhop m=480" in texts
    assert len(root.findall("s:polyline", ns)) == 2


def test_empty_or_unknown_output_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_results([], "csv", tmp_path / "x.csv")
    with pytest.raises(ValueError):
        write_results(ROWS, "xlsx", tmp_path / "x.xlsx")
    with pytest.raises(OSError):
        write_results(ROWS, "csv", tmp_path / "missing-dir" / "x.csv")


def test_row_status_checked():
    with pytest.raises(ValueError):
        SweepRow("x", 1, 1, 0.0, "", "maybe")


def test_config_json_round_trip():
    cfg = RunConfig(n=12, m_bits=480, cycle_T=1e-3, split=(0.5, 0.25, 0.25), schemes=("freqhop",),
                    n_values=(3, 4), target=1e-7, seed=9, out="x.csv", format="svg")
    assert RunConfig.from_json(cfg.to_json()) == cfg
    assert RunConfig.from_json(RunConfig().to_json()) == RunConfig()


def test_config_defaults_are_printer_scenario():
    p = RunConfig().params()
    assert (p.n, p.m_bits, p.cycle_T, p.bandwidth_W) == (30, 160, 2e-3, 20e6)
    assert RunConfig().target == 1e-9


@pytest.mark.parametrize("bad", [
    {"colour": "red"}, {"n": 0}, {"split": [0.5, 0.5, 0.5]}, {"schedule": "often"}, {"target": 0.0},
    {"format": "pdf"}, {"trials": 0}, {"scheme": "morse"}, {"k": 100},
])
def test_config_rejects_bad_values(bad):
    with pytest.raises(ValueError):
        RunConfig.from_json(json.dumps(bad))
