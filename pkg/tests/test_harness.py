import json
import math
from pathlib import Path

import numpy as np
import pytest

from wxdiag.anomaly import EventType
from wxdiag.figcheck import CheckFinding, CheckReport
from wxdiag.harness import (GATE_EPS, BenchConfig, DeterministicSystem,
                            FigureCase, HarnessError, Hypothesis, IndexCase,
                            QAPair, RelErr, RequiredData, RetrievedData,
                            ScriptedJudge, answer_probe, data_score,
                            figure_quality_score, format_summary,
                            hypothesis_score, index_gate, index_score,
                            judge_report, load_case, load_suite,
                            relative_error, run_benchmark, summary_to_json,
                            visualization_score)
from wxdiag.kb import default_kb, match_applicable
from wxdiag.plotspec import build_plot_spec
from wxdiag.store import write_store

from conftest import make_field

BENCH_ROOT = Path(__file__).parent.parent / "benchmarks"


def _report(n_errors=0, n_style=0):
    findings = tuple(CheckFinding(rule_id=f"R{i+1}", severity="error", message="x")
                     for i in range(n_errors))
    findings += tuple(CheckFinding(rule_id=f"R{i+7}", severity="style", message="y")
                      for i in range(n_style))
    return CheckReport(findings=findings)


# -- relative error and the 5% gate ------------------------------------------

def test_relative_error_appendix_pair():
    rel = relative_error(116.5693, 116.6412)
    assert 6.16e-4 <= rel.eps <= 6.18e-4
    assert not rel.absolute_mode
    assert index_gate(rel)
    assert index_score(rel) == 3


def test_gate_boundary_is_strict():
    # |100 - 105| / 100 is exactly the gate threshold: must fail
    assert relative_error(100.0, 105.0).eps == GATE_EPS
    assert not index_gate(relative_error(100.0, 105.0))
    assert index_gate(relative_error(100.0, 104.9999))


def test_gate_zero_ground_truth_goes_absolute():
    rel = relative_error(0.0, 0.049)
    assert rel.absolute_mode and rel.eps == 0.049
    assert index_gate(rel)
    assert not index_gate(relative_error(0.0, 0.05))
    assert not index_gate(relative_error(0.0, -0.05))
    perfect = relative_error(0.0, 0.0)
    assert index_gate(perfect) and index_score(perfect) == 5


def test_relative_error_rejects_non_finite():
    for gt, reply in [(float("nan"), 1.0), (1.0, float("nan")),
                      (float("inf"), 1.0), (1.0, float("-inf"))]:
        with pytest.raises(HarnessError):
            relative_error(gt, reply)


def test_relative_error_scale_invariance(rng):
    for _ in range(200):
        gt = float(rng.choice([-1, 1]) * 10.0 ** rng.uniform(-6, 6))
        d = float(rng.uniform(-0.4, 0.4))
        rel = relative_error(gt, gt * (1.0 + d))
        assert rel.eps == pytest.approx(abs(d), rel=1e-9, abs=1e-15)


def test_exact_reply_scores_five(rng):
    for _ in range(50):
        gt = float(rng.normal(scale=100.0))
        rel = relative_error(gt, gt)
        assert rel.eps == 0.0 and index_gate(rel) and index_score(rel) == 5


# -- score bands --------------------------------------------------------------

def test_band_values_from_the_rubric():
    expected = {9e-6: 5, 9e-5: 4, 9e-4: 3, 9e-3: 2, 9e-2: 1, 0.5: 0}
    for eps, want in expected.items():
        assert index_score(RelErr(eps, False)) == want


def test_band_left_edges_close_downward():
    assert index_score(RelErr(0.0, False)) == 5
    assert index_score(RelErr(1e-5, False)) == 4
    assert index_score(RelErr(1e-4, False)) == 3
    assert index_score(RelErr(1e-3, False)) == 2
    assert index_score(RelErr(1e-2, False)) == 1
    assert index_score(RelErr(1e-1, False)) == 0


def test_band_scores_monotone_in_eps(rng):
    eps = sorted(float(10.0 ** rng.uniform(-7, 1)) for _ in range(300))
    scores = [index_score(RelErr(e, False)) for e in eps]
    assert all(a >= b for a, b in zip(scores, scores[1:]))


# -- visualization alignment ---------------------------------------------------

def test_visualization_hand_counts():
    assert visualization_score(["yes"], ["yes"]) == 100.0
    assert visualization_score(["no"], ["yes"]) == 0.0
    assert visualization_score(["yes", "no", "yes", "no"],
                               ["yes", "no", "no", "no"]) == 75.0
    assert visualization_score(["yes"] * 2 + ["no"] * 3,
                               ["yes"] * 5) == 40.0
    gen = ["yes"] * 13 + ["no"] * 7
    assert visualization_score(gen, ["yes"] * 20) == 65.0


def test_visualization_canonicalizes_answers():
    assert visualization_score([" Yes ", True, "NO"], ["yes", "yes", False]) == 100.0


def test_visualization_rejects_bad_vectors():
    with pytest.raises(HarnessError):
        visualization_score(["yes"], ["yes", "no"])
    with pytest.raises(HarnessError):
        visualization_score([], [])


# -- hypothesis rubric ---------------------------------------------------------

def _coldwave_ids_by_category():
    entries = match_applicable(default_kb(), EventType.COLD_WAVE)
    by_cat: dict[str, list[str]] = {}
    for entry in entries:
        by_cat.setdefault(entry.category, []).append(entry.entry_id)
    return by_cat


def test_hypothesis_rubric_hits_all_six_levels():
    kb = default_kb()
    cats = _coldwave_ids_by_category()
    dyn, thm, mst = cats["dynamics"], cats["thermodynamics"], cats["moisture"]

    def score(*ids):
        return hypothesis_score(Hypothesis("ColdWave", tuple(ids)), kb)

    assert score() == 0
    assert score("made-up-1", "made-up-2") == 0
    assert score(dyn[0], "made-up-1", "made-up-2") == 1
    assert score(dyn[0], thm[0], "made-up-1") == 2
    assert score(dyn[0], thm[0], mst[0], "made-up-1") == 3
    assert score(dyn[0], dyn[1], thm[0]) == 4
    assert score(dyn[0], thm[0], mst[0]) == 5


def test_hypothesis_score_five_iff_full_conformity_and_three_categories(rng):
    kb = default_kb()
    cats = _coldwave_ids_by_category()
    pool = [i for ids in cats.values() for i in ids] + ["bogus-a", "bogus-b"]
    id_cat = {i: c for c, ids in cats.items() for i in ids}
    for _ in range(300):
        k = int(rng.integers(0, len(pool) + 1))
        chosen = tuple(rng.choice(pool, size=k, replace=False)) if k else ()
        got = hypothesis_score(Hypothesis(EventType.COLD_WAVE, chosen), kb)
        conform = [i for i in chosen if i in id_cat]
        dims = len({id_cat[i] for i in conform})
        full = bool(chosen) and len(conform) == len(chosen)
        assert (got == 5) == (full and dims == 3)
        # independent restatement of the whole decision tree
        if not chosen or not conform:
            want = 0
        elif 2 * len(conform) < len(chosen) and dims == 1:
            want = 1
        elif len(conform) < len(chosen):
            want = 2 if dims <= 2 else 3
        else:
            want = 5 if dims == 3 else 4
        assert got == want


def test_hypothesis_unknown_event_rejected():
    with pytest.raises(ValueError):
        hypothesis_score(Hypothesis("Tsunami", ("x",)), default_kb())


# -- data-retrieval rubric ------------------------------------------------------

REQUIRED = RequiredData(core=("t", "u", "v"), auxiliary=("clim:x",),
                        window=("2014-05-07T12:00Z", "2014-05-08T12:00Z"))
FULL = ("2014-05-07T12:00Z", "2014-05-08T12:00Z")


def test_data_score_ladder():
    assert data_score(RetrievedData((), None), REQUIRED) == 0
    # disjoint window caps at 1 regardless of variable coverage
    assert data_score(RetrievedData(("t", "u", "v", "clim:x"),
                                    ("2014-05-09T00:00Z", "2014-05-09T06:00Z")),
                      REQUIRED) == 1
    # core coverage under the floor also caps at 1
    assert data_score(RetrievedData(("clim:x",), FULL), REQUIRED) == 1
    # one of three core vars (33%) with a full window: missing core, score 2
    assert data_score(RetrievedData(("t",), FULL), REQUIRED) == 2
    # complete core, window covering less than half: score 2
    assert data_score(RetrievedData(("t", "u", "v", "clim:x"),
                                    ("2014-05-08T04:00Z", "2014-05-08T12:00Z")),
                      REQUIRED) == 2
    # complete core but auxiliary missing: score 3
    assert data_score(RetrievedData(("t", "u", "v"), FULL), REQUIRED) == 3
    # everything plus an unrequested extra: redundancy, score 4
    assert data_score(RetrievedData(("t", "u", "v", "clim:x", "w"), FULL),
                      REQUIRED) == 4
    assert data_score(RetrievedData(("t", "u", "v", "clim:x"), FULL),
                      REQUIRED) == 5


def test_data_window_semantics():
    instant = RequiredData(core=("t",),
                           window=("2014-05-08T12:00Z", "2014-05-08T12:00Z"))
    # zero-span requirement is containment
    assert data_score(RetrievedData(("t",), FULL), instant) == 5
    assert data_score(RetrievedData(("t",),
                                    ("2014-05-08T13:00Z", "2014-05-08T14:00Z")),
                      instant) == 1
    # no required window: any retrieval window is complete
    assert data_score(RetrievedData(("t",), None), RequiredData(core=("t",))) == 5
    backwards = RequiredData(core=("t",),
                             window=("2014-05-08T12:00Z", "2014-05-07T12:00Z"))
    with pytest.raises(HarnessError):
        data_score(RetrievedData(("t",), FULL), backwards)


def test_data_derivable_auxiliary_scores_four():
    need = RequiredData(core=("u", "v"), auxiliary=("wspd",), window=None)
    # wspd never fetched, but u and v derive it: counts as present-but-derived
    assert data_score(RetrievedData(("u", "v"), None), need) == 4
    assert data_score(RetrievedData(("u", "v", "wspd"), None), need) == 5
    assert data_score(RetrievedData(("u",), None), need) == 2


def test_data_cutoffs_configurable():
    got = RetrievedData(("t",), FULL)             # 1/3 core coverage
    assert data_score(got, REQUIRED) == 2
    assert data_score(got, REQUIRED, core_floor=0.5) == 1
    half = RetrievedData(("t", "u", "v", "clim:x"),
                         ("2014-05-08T00:00Z", "2014-05-08T12:00Z"))
    assert data_score(half, REQUIRED) == 3        # 50% window meets default floor
    assert data_score(half, REQUIRED, short_floor=0.75) == 2


# -- figure quality rubric -------------------------------------------------------

def test_figure_quality_branch_order():
    clean = _report()
    assert figure_quality_score(clean, render_ok=False, variables_complete=True) == 0
    assert figure_quality_score(clean, render_ok=True, variables_complete=False) == 1
    assert figure_quality_score(_report(n_errors=1, n_style=5), True, True) == 2
    assert figure_quality_score(_report(n_style=3), True, True) == 3
    assert figure_quality_score(_report(n_style=2), True, True) == 4
    assert figure_quality_score(_report(n_style=1), True, True) == 4
    assert figure_quality_score(clean, True, True) == 5


# -- report judge -----------------------------------------------------------------

def test_judge_report_parses_single_integer():
    assert judge_report("fine", "report/1", lambda p: "3") == 3
    assert judge_report("fine", "report/1", lambda p: " 4 \n") == 4
    for bad in ("7", "-1", "ok", "4.5", "", "4 5"):
        with pytest.raises(HarnessError):
            judge_report("fine", "report/1", lambda p: bad)


def test_judge_report_prompt_carries_rubric_and_text():
    judge = ScriptedJudge("5")
    judge_report("THE REPORT BODY", "report/1", judge)
    assert len(judge.prompts) == 1
    assert "Score the diagnostic report" in judge.prompts[0]
    assert "THE REPORT BODY" in judge.prompts[0]
    with pytest.raises(HarnessError):
        judge_report("x", "report/9", judge)


def test_scripted_judge_repeats_last_reply():
    judge = ScriptedJudge("2", "5")
    assert [judge("a"), judge("b"), judge("c")] == ["2", "5", "5"]
    with pytest.raises(HarnessError):
        ScriptedJudge()


# -- case files and suite loading ----------------------------------------------------

def _write_index_case(root: Path, case_id: str, gt: float, *,
                      index_id="Cold Pool Central Temperature") -> Path:
    lats = np.linspace(40.0, 50.0, 5)
    lons = np.linspace(100.0, 110.0, 5)
    field = make_field(name="t", units="K", levels=(850.0,), lats=lats, lons=lons,
                       values=np.full((1, 1, 5, 5), 250.0))
    write_store(root / f"fixtures/{case_id}", fields={"t": field})
    doc = {"schema": "index-case/1", "case_id": case_id,
           "question": "coldest point?", "index_id": index_id, "tier": "Easy",
           "inputs": {"fixture": f"fixtures/{case_id}", "params": {}},
           "gt": {"value": gt, "units": "K"}}
    path = root / f"{case_id}.json"
    path.write_text(json.dumps(doc), "utf-8")
    return path


def test_load_suite_sorts_and_rejects_duplicates(tmp_path):
    _write_index_case(tmp_path, "b-case", 250.0)
    _write_index_case(tmp_path, "a-case", 250.0)
    cases = load_suite(tmp_path)
    assert [c.case_id for c in cases] == ["a-case", "b-case"]

    dup = json.loads((tmp_path / "a-case.json").read_text())
    (tmp_path / "zz-dup.json").write_text(json.dumps(dup), "utf-8")
    with pytest.raises(HarnessError):
        load_suite(tmp_path)


def test_load_suite_empty_dir_errors(tmp_path):
    with pytest.raises(HarnessError):
        load_suite(tmp_path)


def test_load_case_rejects_unknown_schema(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"schema": "mystery/9", "case_id": "x"}), "utf-8")
    with pytest.raises(HarnessError):
        load_case(path)


def test_index_case_requires_finite_gt(tmp_path):
    path = _write_index_case(tmp_path, "bad-gt", float("nan"))
    with pytest.raises(HarnessError):
        load_case(path)


def test_qa_pair_requires_yes_no_answer():
    QAPair(question="q", answer="Yes", probe={"kind": "has_ref", "ref": "z@500"})
    with pytest.raises(HarnessError):
        QAPair(question="q", answer="maybe", probe={})


# -- probes ----------------------------------------------------------------------------

def test_answer_probe_kinds():
    spec = build_plot_spec("synoptic_z500_msl_barbs")
    svg = "<svg>title 500-hPa height, MSLP and 850-hPa wind</svg>"
    assert answer_probe({"kind": "has_ref", "ref": "z@500"}, spec, svg) == "yes"
    assert answer_probe({"kind": "has_ref", "ref": "q@700"}, spec, svg) == "no"
    assert answer_probe({"kind": "has_layer_kind", "value": "barbs"}, spec, svg) == "yes"
    assert answer_probe({"kind": "contour_interval", "ref": "msl@0", "value": 4.0},
                        spec, svg) == "yes"
    assert answer_probe({"kind": "contour_interval", "ref": "msl@0", "value": 2.0},
                        spec, svg) == "no"
    assert answer_probe({"kind": "barb_step_at_most", "value": 6}, spec, svg) == "yes"
    assert answer_probe({"kind": "title_contains", "text": "mslp"}, spec, svg) == "yes"
    assert answer_probe({"kind": "svg_contains", "text": "850-hPa wind"}, spec,
                        svg) == "yes"
    with pytest.raises(HarnessError):
        answer_probe({"kind": "telepathy"}, spec, svg)


# -- runner accounting --------------------------------------------------------------------

def test_run_benchmark_survives_broken_cases(tmp_path):
    _write_index_case(tmp_path, "good-1", 250.0)
    _write_index_case(tmp_path, "good-2", 250.0)
    _write_index_case(tmp_path, "broken", 250.0, index_id="No Such Index")
    summary = run_benchmark(load_suite(tmp_path), DeterministicSystem())
    assert summary["n_cases"] == 3
    assert summary["scored"] == 2 and summary["errored"] == 1
    assert summary["errors"][0]["case_id"] == "broken"
    assert "No Such Index" in summary["errors"][0]["error"]
    assert [r["case_id"] for r in summary["cases"]] == ["good-1", "good-2"]
    assert not summary["ok"]                    # an errored case is never ok


def test_run_benchmark_floor_failure(tmp_path):
    _write_index_case(tmp_path, "off-by-lots", 2500.0)     # true value is 250
    summary = run_benchmark(load_suite(tmp_path), DeterministicSystem(),
                            BenchConfig(floors={"index_gate": 1.0}))
    assert summary["index"]["gate_rate"] == 0.0
    assert summary["floor_failures"] and not summary["ok"]
    assert "NOT OK" in format_summary(summary)


def test_unknown_floor_metric_rejected():
    with pytest.raises(HarnessError):
        BenchConfig(floors={"vibes": 0.5})


def test_summary_serializes_deterministically(tmp_path):
    _write_index_case(tmp_path, "solo", 250.0)
    summary = run_benchmark(load_suite(tmp_path), DeterministicSystem())
    text = summary_to_json(summary)
    assert json.loads(text) == json.loads(summary_to_json(summary))
    assert text.index('"cases"') < text.index('"schema"')   # keys sorted


# -- shipped suites -----------------------------------------------------------------------

def test_shipped_index_suite_all_gates_pass():
    summary = run_benchmark(load_suite(BENCH_ROOT / "index"),
                            DeterministicSystem(),
                            BenchConfig(floors={"index_gate": 1.0}))
    assert summary["ok"] and summary["errored"] == 0
    assert summary["index"]["n"] == 30
    assert summary["index"]["gate_rate"] == 1.0
    tiers = summary["index"]["tiers"]
    assert {t: s["n"] for t, s in tiers.items()} == {"Easy": 11, "Medium": 14,
                                                     "Hard": 5}
    assert all(s["accuracy_pct"] == 100.0 for s in tiers.values())


def test_shipped_figure_suite_aligns_fully():
    summary = run_benchmark(load_suite(BENCH_ROOT / "figure"),
                            DeterministicSystem(),
                            BenchConfig(floors={"alignment": 1.0}))
    assert summary["ok"] and summary["errored"] == 0
    assert summary["figure"]["n"] == 10
    assert summary["figure"]["alignment_mean_pct"] == 100.0
    assert all(row["scores"]["figure"] == 5 for row in summary["cases"])


def test_shipped_e2e_suite_matches_frozen_expectations(tmp_path):
    summary = run_benchmark(load_suite(BENCH_ROOT / "e2e"),
                            DeterministicSystem(workdir=tmp_path))
    assert summary["ok"] and summary["errored"] == 0
    assert summary["expect_drift"] == 0
    by_id = {row["case_id"]: row for row in summary["cases"]}
    assert by_id["e2e-01-coldwave-accept"]["status"] == "accepted"
    assert by_id["e2e-02-rainstorm-replan"]["cycles"] == 2
    assert by_id["e2e-03-heatwave-exhaust"]["status"] == "exhausted"
    assert by_id["e2e-03-heatwave-exhaust"]["memory"] == 3
    assert by_id["e2e-05-rainstorm-moisture"]["event"] == "Rainstorm"


def test_expect_drift_flips_summary(tmp_path):
    cases = load_suite(BENCH_ROOT / "e2e")
    target = next(c for c in cases if c.case_id == "e2e-01-coldwave-accept")
    object.__setattr__(target, "expect", {**target.expect, "cycles": 2})
    summary = run_benchmark(cases, DeterministicSystem(workdir=tmp_path))
    assert not summary["ok"] and summary["expect_drift"] == 1
    assert "DRIFT" in format_summary(summary)


def test_benchmark_tree_rebuilds_byte_identically(tmp_path):
    from wxdiag.bench.suite import build_all
    build_all(tmp_path)
    shipped = sorted(p.relative_to(BENCH_ROOT) for p in BENCH_ROOT.rglob("*")
                     if p.is_file())
    rebuilt = sorted(p.relative_to(tmp_path) for p in tmp_path.rglob("*")
                     if p.is_file())
    assert shipped == rebuilt
    for rel in shipped:
        assert (tmp_path / rel).read_bytes() == (BENCH_ROOT / rel).read_bytes(), rel
