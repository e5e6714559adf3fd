import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symflow import diagnostics as D
from symflow.fields import GridField
from symflow.polyalg import predicted_rates

T = np.linspace(0.0, 40.0, 81)


@settings(max_examples=40, deadline=None)
@given(st.floats(-6.0, 0.0), st.floats(0.01, 100.0))
def test_power_law_recovered(p, c):
    fit = D.fit_power_law(T, c * (1 + T) ** p)
    assert fit.exponent == pytest.approx(p, abs=1e-9)
    assert fit.stderr < 1e-6


def test_power_law_noise_stderr():
    rng = np.random.default_rng(0)
    v = (1 + T) ** -2.5 * np.exp(0.01 * rng.normal(size=T.size))
    fit = D.fit_power_law(T, v)
    assert abs(fit.exponent + 2.5) < 5 * fit.stderr + 1e-3
    assert fit.stderr > 0


def test_power_law_errors():
    with pytest.raises(ValueError):
        D.fit_power_law(T, (1 + T) ** -1, window=(100.0, None))
    with pytest.raises(ValueError):
        D.fit_power_law(T, (1 + T) ** -1, window=(38.0, None))
    with pytest.raises(ValueError):
        D.fit_power_law(T, -(1 + T) ** -1)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=20), st.booleans())
def test_csv_round_trip(rows, with_nan):
    s = D.DiagnosticSeries(metadata={"group": "O_h", "N": "64"})
    for j, (a, b) in enumerate(rows):
        s.append(0.5 * j, {"a": a, "b": float("nan") if with_nan and j == 0 else b})
    back = D.DiagnosticSeries.from_csv(s.to_csv())
    assert back.metadata == {"group": "O_h", "N": "64"}
    assert back.times == s.times
    assert np.array_equal(back.channel("a"), s.channel("a"))
    assert np.array_equal(back.channel("b"), s.channel("b"), equal_nan=True)
    assert back.to_csv() == s.to_csv()


def test_series_validation():
    with pytest.raises(ValueError):
        D.DiagnosticSeries([0.0, 0.0], {"a": [1.0, 2.0]})
    with pytest.raises(ValueError):
        D.DiagnosticSeries([0.0, 1.0], {"a": [1.0]})
    s = D.DiagnosticSeries()
    s.append(0.0, {"a": 1.0})
    with pytest.raises(ValueError):
        s.append(0.0, {"a": 1.0})
    with pytest.raises(ValueError):
        s.append(1.0, {"b": 1.0})
    with pytest.raises(KeyError):
        s.channel("b")


@pytest.mark.parametrize("gamma", [3.0, 4.0, 5.0])
def test_tail_exponent_synthetic(gamma):
    N, L = 256, 32.0
    x = (np.arange(N) - N // 2) * (2 * L / N)
    X, Y = np.meshgrid(x, x, indexing="ij")
    vals = (1 + X**2 + Y**2) ** (-gamma / 2)
    fit = D.tail_exponent(GridField(2, L, N, vals[..., None]), r_min=6.0)
    assert fit.valid
    assert fit.exponent == pytest.approx(-gamma, abs=0.1)


def test_tail_rejects_large_radius():
    g = GridField(2, 8.0, 32, np.ones((32, 32, 1)))
    with pytest.raises(ValueError):
        D.shell_profile(g, 1.0, 7.0)


def test_tail_below_floor_invalid():
    N, L = 128, 16.0
    x = (np.arange(N) - N // 2) * (2 * L / N)
    X, Y = np.meshgrid(x, x, indexing="ij")
    g = GridField(2, L, N, np.exp(-(X**2 + Y**2))[..., None])
    assert not D.tail_exponent(g, r_min=4.0).valid


def _synthetic(time_exp=(-2.5, -2.0), tail=-5.0, moment=1e-9):
    s = D.DiagnosticSeries(metadata={"valid_t_max": "64.0"})
    for t in T:
        s.append(t, {"linf_u": (1 + t) ** time_exp[0], "l2_u": (1 + t) ** time_exp[1],
                     "linf_w": (1 + t) ** -3.0, "l2_w": (1 + t) ** -2.5,
                     "moment_00": moment, "moment_21": -moment, "moment_40": 0.3,
                     "tail_exponent": tail, "validity": 1.0})
    return s


def test_compare_pass():
    rep = D.compare(_synthetic(), predicted_rates("D_n", 2, 4))
    assert rep["pass"]
    statuses = {c["channel"]: c["status"] for c in rep["checks"]}
    assert statuses == {"linf_u": "pass", "l2_u": "pass", "linf_w": "pass", "l2_w": "pass",
                        "tail_exponent": "pass", "moments": "pass"}


@pytest.mark.parametrize("kw", [{"time_exp": (-2.0, -2.0)}, {"tail": -4.0}, {"moment": 1e-3}])
def test_compare_detects_failures(kw):
    assert not D.compare(_synthetic(**kw), predicted_rates("D_n", 2, 4))["pass"]


def test_compare_short_series_skips_time_checks():
    s = _synthetic()
    short = D.DiagnosticSeries(s.times[:5], {k: v[:5] for k, v in s.channels.items()}, s.metadata)
    rep = D.compare(short, predicted_rates("D_n", 2, 4))
    assert {c["status"] for c in rep["checks"] if c["kind"] == "time_exponent"} == {"skipped"}


def test_compare_errors():
    with pytest.raises(ValueError):
        D.compare(D.DiagnosticSeries(), predicted_rates("D_n", 2, 4))
    s = D.DiagnosticSeries([0.0], {"linf_u": [1.0]})
    with pytest.raises(KeyError):
        D.compare(s, predicted_rates("D_n", 2, 4))


def test_plot_svg_is_xml_and_deterministic():
    s = _synthetic()
    s.metadata["config_hash"] = "abc"
    svg = D.plot_svg(s)
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert "config_hash=abc" in svg
    assert svg == D.plot_svg(s)
    assert len(root.findall(".//{http://www.w3.org/2000/svg}polyline")) == 4


def test_plot_needs_positive_data():
    s = D.DiagnosticSeries([0.0, 1.0], {"linf_u": [-1.0, -2.0]})
    with pytest.raises(ValueError):
        D.plot_svg(s)


def test_constants():
    assert (D.TIME_TOL, D.SPACE_TOL, D.MOMENT_TOL) == (0.3, 0.5, 1e-6)
    assert math.isfinite(D.TAIL_FLOOR)


def test_prism_tail_against_icosahedral_prediction_fails():
    s = _synthetic(tail=-4.0)
    assert not D.compare(s, predicted_rates("Y_h"))["pass"]
    assert D.compare(s, predicted_rates("D_nh", 3, 4))["checks"][-1]["status"] == "pass"
