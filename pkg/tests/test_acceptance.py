"""The twelve acceptance criteria, one test (and one printed verdict line) each.

Simulation criteria are marked ``slow`` but run by default.
"""
import os
import sys
import time

import pytest

from symflow import experiments as ex
from symflow.cli import main


@pytest.fixture
def verdict(capsys):
    def report(number, ok, detail):
        with capsys.disabled():
            sys.stdout.write(f"\ncriterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}\n")
        return ok
    return report


def timed(preset):
    t0 = time.perf_counter()
    result, arts = ex.run(ex.PRESETS[preset])
    return result, arts, time.perf_counter() - t0


def test_criterion_01_group_catalog(verdict):
    res, _, secs = timed("group-audit")
    bad = [r for r in res["groups"] if r["order"] != r["expected"]]
    ok = res["pass"] and not bad and secs < 1.0
    verdict(1, ok, f"{len(res['groups'])} groups, spot orders {res['spot_orders']}, {secs:.2f}s")
    assert ok


def test_criterion_02_lemma3_audit(verdict):
    res, _, secs = timed("lemma3-audit")
    cases = [c for c in res["cases"] if (c["group"], c["degree"]) != ("Y", 6)]
    ok = all(c["pass"] for c in cases) and secs < 10.0
    dims = {f"{c['group']},{c['degree']}": c["dimension"] for c in cases}
    verdict(2, ok, f"dimensions {dims}, {secs:.2f}s")
    assert ok


def test_criterion_03_icosahedral_degree_six(verdict):
    res, _, _ = timed("lemma3-audit")
    case = next(c for c in res["cases"] if (c["group"], c["degree"]) == ("Y", 6))
    ok = case["dimension"] == 2 and case["divisible_dimension"] == 1
    verdict(3, ok, f"dim {case['dimension']}, divisible dim {case['divisible_dimension']}")
    assert ok


def test_criterion_04_exact_constants(verdict):
    res, _, _ = timed("section5-constants")
    rows = res["integrals"]
    ok = res["pass_integrals"] and all(r["relative_error"] <= 1e-10 for r in rows)
    verdict(4, ok, ", ".join(f"{r['exact_coefficient']} (ref {r['reference_coefficient']})" for r in rows))
    assert ok


def test_criterion_05_polynomial_facts(verdict):
    res, _, _ = timed("section5-constants")
    f = res["polynomial_facts"]
    ok = (f["P1_bar_a_max_coeff"] <= 1e-12 and f["P1_tilde_a_max_coeff"] <= 1e-12 and abs(f["P1_sum_c"]) > 1e-6
          and f["P1_sum_other_max"] <= 1e-12 and f["P2_tilde_a_remainder_ratio"] > 1e-6)
    verdict(5, ok, f"c = {f['P1_sum_c']:.6g}, P2 remainder ratio {f['P2_tilde_a_remainder_ratio']:.3g}")
    assert ok


def test_criterion_06_divisibility_counterexamples(verdict):
    res, _, _ = timed("pm-divisibility")
    worst = max(max(c["invariance_residual"].values()) for c in res["cases"])
    rem = min(c["remainder_ratio"] for c in res["cases"])
    ok = res["pass"] and worst <= 1e-10 and rem > 1e-6
    detail = (f"invariance residual <= {worst:.1e}, remainder >= {rem:.3g}; as-printed degree-6 form has "
              f"Y residual {res['printed_variant']['printed_degree6_part_Y_residual']:.3g}")
    verdict(6, ok, detail)
    assert ok


def test_criterion_07_moment_cancellation(verdict):
    res, _, _ = timed("moment-cancellation")
    ok = res["pass"]
    verdict(7, ok, ", ".join(f"{c['group']}:{c['vanish_order']}>={c['required']}" for c in res["cases"]))
    assert ok


def test_criterion_08_heat_oracle(verdict):
    res, _, secs = timed("radial-oracle")
    err = res["checks"]["heat_error"]["measured"]
    ok = err <= 1e-6 and secs < 120
    verdict(8, ok, f"max error {err:.3g} to t=1, {secs:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_09_dihedral_decay(verdict):
    res, _, secs = timed("d4-decay")
    c = res["checks"]
    ok = res["pass"] and secs <= 1800
    verdict(9, ok, f"Linf(u) {c['fit_linf_u']['measured']:.3f}, L2(u) {c['fit_l2_u']['measured']:.3f}, "
                   f"moments <= {c['moments']['measured']:.1e}, {secs:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_10_symmetry_preservation(verdict):
    parts, ok = [], True
    for preset in ("td-symmetry", "oh-symmetry", "yh-symmetry"):
        res, _, secs = timed(preset)
        c = res["checks"]
        good = res["pass"] and secs <= 1200
        ok = ok and good
        parts.append(f"{preset.split('-')[0]}: drift {c['symmetry_drift']['measured']:.1e}, "
                     f"div {c['divergence']['measured']:.1e}, moments {c['moments']['measured']:.1e}, {secs:.0f}s")
    verdict(10, ok, "; ".join(parts))
    assert ok


@pytest.mark.slow
def test_criterion_11_spatial_ordering(verdict):
    res, _, _ = timed("spatial-ordering")
    ok = res["pass"]
    verdict(11, ok, ", ".join(f"{c['case']} {c['exponent']:.3f}" for c in res["cases"]))
    assert ok


def test_criterion_12_reproducibility(tmp_path, verdict, capsys):
    tree = tmp_path / "configs"
    names = ["group-audit", "lemma3-audit", "section5-constants", "pm-divisibility", "moment-cancellation",
             "radial-oracle"]
    assert main(["presets", "--out", str(tree)]) == 0
    for f in os.listdir(tree):
        if f[:-5] not in names:
            os.remove(tree / f)
    for k in range(2):
        assert main(["accept", "--configs", str(tree), "--out", str(tmp_path / f"run{k}")]) == 0
    capsys.readouterr()
    files = sorted(os.listdir(tmp_path / "run0"))
    same = files == sorted(os.listdir(tmp_path / "run1")) and all(
        (tmp_path / "run0" / f).read_bytes() == (tmp_path / "run1" / f).read_bytes() for f in files)
    verdict(12, same, f"{len(files)} artifacts byte-identical across two accept runs")
    assert same
