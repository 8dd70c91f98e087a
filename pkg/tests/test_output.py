"""Tests for CSV/report/SVG emission.

The CSV round-trip must be exact: 17 significant digits reproduce every
float64 bit-for-bit. The SVG only needs to be well-formed, deterministic
XML — the CSV is the numeric contract.
"""

import pathlib
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from linetemp import output, scenario, sim

SCENARIO_PATH = (pathlib.Path(__file__).resolve().parents[1]
                 / "scenarios" / "isle_jourdain.scenario")


def fake_trace(steps=3, n_l=2, n_g=2):
    """Trace filled with awkward floats (no trailing-zero mercy)."""
    rng = np.random.default_rng(42)
    n_u = 1 + n_g
    pick = lambda *shape: rng.standard_normal(shape) * np.pi / 3.0
    return sim.SimTrace(
        t_s=np.arange(steps + 1) * 60.0,
        F_MW=pick(steps + 1, n_l) + 70.0,
        T_C=pick(steps + 1, n_l) + 30.0,
        u_batt_MW=pick(steps + 1),
        E_MWh=pick(steps + 1) + 15.0,
        d_curt_MW=pick(steps + 1, n_g),
        l_curt_MW=np.abs(pick(steps + 1, n_g)),
        x0_star=pick(steps, 2 * n_l + 2 + 2 * n_g),
        u0_star=pick(steps, n_u),
        kappa=pick(steps, n_u),
        w=pick(steps, 2 * n_l),
        qp_status=("optimal",) * (steps - 1) + ("max_iter",) if steps
        else (),
        margin=pick(steps),
        iterations=np.arange(steps),
        wall_s=np.zeros(steps),
        battery_saturated=np.zeros(steps, dtype=bool),
        fallback=np.zeros(steps, dtype=bool),
    )


@pytest.fixture(scope="module")
def run():
    scn, _ = scenario.load_scenario(SCENARIO_PATH)
    ctl, _ = scenario.synthesize_controller(scn)
    plant = scenario.plant_model(scn)
    trace = sim.run_closed_loop(plant, ctl, 8,
                                scenario.disturbance_generator(scn))
    return {"scn": scn, "ctl": ctl, "trace": trace}


# ---------------------------------------------------------------- CSV

def test_header_order_is_the_documented_contract():
    assert output.csv_header(2, 2) == [
        "time_s",
        "F_MW_1", "F_MW_2", "T_C_1", "T_C_2",
        "T_limit_C_1", "T_limit_C_2",
        "tightened_T_limit_C_1", "tightened_T_limit_C_2",
        "u_batt_MW", "E_MWh",
        "curtail_MW_1", "curtail_MW_2",
        "u_star_1", "u_star_2", "u_star_3",
        "kappa_1", "kappa_2", "kappa_3",
        "qp_status", "margin",
    ]


def test_round_trip_is_bit_exact(tmp_path):
    tr = fake_trace()
    p = tmp_path / "trace.csv"
    output.write_csv(p, tr, [55.7, 55.7], [54.1, 54.2])
    got = output.read_csv(p)
    steps = tr.steps
    np.testing.assert_array_equal(got["time_s"], tr.t_s[:steps])
    for i in range(2):
        np.testing.assert_array_equal(got[f"F_MW_{i + 1}"],
                                      tr.F_MW[:steps, i])
        np.testing.assert_array_equal(got[f"T_C_{i + 1}"],
                                      tr.T_C[:steps, i])
        np.testing.assert_array_equal(got[f"curtail_MW_{i + 1}"],
                                      tr.l_curt_MW[:steps, i])
    np.testing.assert_array_equal(got["u_batt_MW"], tr.u_batt_MW[:steps])
    np.testing.assert_array_equal(got["E_MWh"], tr.E_MWh[:steps])
    for i in range(3):
        np.testing.assert_array_equal(got[f"u_star_{i + 1}"],
                                      tr.u0_star[:, i])
        np.testing.assert_array_equal(got[f"kappa_{i + 1}"],
                                      tr.kappa[:, i])
    np.testing.assert_array_equal(got["margin"], tr.margin)
    assert got["qp_status"] == tr.qp_status
    np.testing.assert_array_equal(got["T_limit_C_1"], np.full(steps, 55.7))
    np.testing.assert_array_equal(got["tightened_T_limit_C_2"],
                                  np.full(steps, 54.2))


def test_seventeen_significant_digits(tmp_path):
    tr = fake_trace(steps=1)
    p = tmp_path / "one.csv"
    output.write_csv(p, tr, [55.7, 55.7])
    line = p.read_text(encoding="utf-8").splitlines()[1]
    first_flow = line.split(",")[1]
    # printed with %.17g: up to 17 significant digits, parses back exactly
    digits = first_flow.replace("-", "").replace(".", "").lstrip("0")
    assert len(digits) == 17
    assert float(first_flow) == tr.F_MW[0, 0]


def test_zero_steps_writes_header_only(tmp_path):
    tr = fake_trace(steps=0)
    p = tmp_path / "empty.csv"
    output.write_csv(p, tr, [55.7, 55.7])
    lines = p.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("time_s,F_MW_1")
    got = output.read_csv(p)
    assert got["time_s"].size == 0
    assert got["qp_status"] == ()


def test_free_run_columns(tmp_path, run):
    plant = scenario.plant_model(run["scn"])
    tr = sim.run_free(plant, 5, scenario.disturbance_generator(run["scn"]))
    p = tmp_path / "free.csv"
    output.write_csv(p, tr, [55.7, 55.7], tightened_T_limit_C=None)
    got = output.read_csv(p)
    assert np.all(np.isnan(got["tightened_T_limit_C_1"]))
    assert np.all(np.isnan(got["u_star_1"]))
    assert got["qp_status"] == ("free",) * 5


def test_closed_loop_round_trip(tmp_path, run):
    tr = run["trace"]
    tight = run["ctl"].tightened_temperature_limit_C()
    p = tmp_path / "run.csv"
    output.write_csv(p, tr, [55.7, 55.7], tight)
    got = output.read_csv(p)
    np.testing.assert_array_equal(got["T_C_1"], tr.T_C[:-1, 0])
    np.testing.assert_array_equal(got["kappa_1"], tr.kappa[:, 0])
    np.testing.assert_array_equal(got["margin"], tr.margin)


# -------------------------------------------------------------- report

def test_format_report_key_value_lines():
    text = output.format_report([
        ("scenario", "isle-jourdain-90kv"),
        ("steps", 60),
        ("max_temperature_C", 45.821234567891234),
        ("violations", 0),
    ])
    lines = text.splitlines()
    assert lines[0] == "scenario: isle-jourdain-90kv"
    assert lines[1] == "steps: 60"
    assert lines[2] == f"max_temperature_C: {45.821234567891234!r}"
    assert float(lines[2].split(": ")[1]) == 45.821234567891234
    assert text.endswith("\n")


def test_format_report_handles_numpy_floats():
    text = output.format_report([("margin", np.float64(1.25))])
    assert text == "margin: 1.25\n"


# ----------------------------------------------------------------- SVG

def test_svg_is_wellformed_and_deterministic(tmp_path, run):
    tr = run["trace"]
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    tight = run["ctl"].tightened_temperature_limit_C()
    output.write_svg(a, tr, [55.7, 55.7], tight)
    output.write_svg(b, tr, [55.7, 55.7], tight)
    assert a.read_bytes() == b.read_bytes()
    root = ET.fromstring(a.read_text(encoding="utf-8"))
    assert root.tag.endswith("svg")
    ns = "{http://www.w3.org/2000/svg}"
    polys = root.findall(f".//{ns}polyline")
    # 2 temperature lines + limit + tightened + battery + 2 curtail
    assert len(polys) >= 7
    texts = [t.text for t in root.findall(f".//{ns}text")]
    assert "conductor temperature" in texts
    assert "controls" in texts


def test_svg_handles_zero_step_trace(tmp_path):
    tr = fake_trace(steps=0)
    p = tmp_path / "tiny.svg"
    output.write_svg(p, tr, [55.7, 55.7])
    root = ET.fromstring(p.read_text(encoding="utf-8"))
    assert root.tag.endswith("svg")
