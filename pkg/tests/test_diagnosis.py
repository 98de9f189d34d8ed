import json
from pathlib import Path

import pytest

from wxdiag.agents import AgentRole, MessageKind, messages_from_jsonl, messages_to_jsonl
from wxdiag.diagnosis import (CycleRecord, DiagnosisError, DiagnosisOutcome,
                              EvidenceItem, LoopConfig, MemoryEntry,
                              find_index_id, make_executor, pick_template,
                              run_loop)
from wxdiag.indices import compute_index, registry
from wxdiag.synth import build_case, scenario_task

GOLDEN_DIR = Path(__file__).parent / "golden"

GOLDEN = [("scenario_a", "coldwave_accept"),
          ("scenario_b", "rainstorm_replan"),
          ("scenario_c", "heatwave_exhaust")]


def run_scenario(name, tmp_path, out_dir=None):
    store = build_case(name, tmp_path / "store")
    return run_loop(scenario_task(name), store, out_dir=out_dir)


# --- configuration and schema ------------------------------------------------

def test_loop_config_defaults():
    cfg = LoopConfig()
    assert cfg.max_cycles == 3
    assert cfg.sa_threshold == 2.0
    assert cfg.support_fraction == 2.0 / 3.0
    assert cfg.completeness_min == 0.75


def test_outcome_json_roundtrip(tmp_path):
    outcome, _ = run_scenario("rainstorm_replan", tmp_path)
    back = DiagnosisOutcome.from_json(outcome.to_json())
    assert back == outcome
    assert back.cycles[0].evidence[0] == outcome.cycles[0].evidence[0]


def test_outcome_rejects_wrong_schema():
    with pytest.raises(DiagnosisError, match="schema"):
        DiagnosisOutcome.from_mapping({"schema": "diagnosis/99"})


def test_nested_records_roundtrip():
    item = EvidenceItem("CAPE", "ok", value=800.0, units="J kg-1",
                        sa=3.0, significant=True)
    assert EvidenceItem.from_mapping(item.as_mapping()) == item
    rec = CycleRecord(1, "dynamics", "Refuted", 0.25, 0.8, (item,), retried=True)
    assert CycleRecord.from_mapping(rec.as_mapping()) == rec
    mem = MemoryEntry(1, "dynamics", "Refuted", 0.25, "note")
    assert MemoryEntry.from_mapping(mem.as_mapping()) == mem


# --- golden transcripts -------------------------------------------------------

@pytest.mark.parametrize("golden_name,scenario", GOLDEN)
def test_golden_transcripts_byte_exact(golden_name, scenario, tmp_path):
    store = build_case(scenario, tmp_path / "store")
    _, messages = run_loop(scenario_task(scenario), store,
                           out_dir=tmp_path / "figs")
    produced = messages_to_jsonl(messages).encode("utf-8")
    expected = (GOLDEN_DIR / f"{golden_name}.jsonl").read_bytes()
    assert produced == expected


@pytest.mark.parametrize("golden_name,scenario", GOLDEN)
def test_golden_transcripts_reload_cleanly(golden_name, scenario):
    messages = messages_from_jsonl(
        (GOLDEN_DIR / f"{golden_name}.jsonl").read_text("utf-8"))
    assert messages[0].sender is AgentRole.USER
    assert messages[-1].kind is MessageKind.REPORT
    assert [m.seq for m in messages] == list(range(len(messages)))


# --- scripted outcomes --------------------------------------------------------

def test_accept_first_cycle(tmp_path):
    outcome, messages = run_scenario("coldwave_accept", tmp_path,
                                     out_dir=tmp_path / "figs")
    assert outcome.status == "accepted" and outcome.accepted
    assert outcome.event == "ColdWave"
    assert len(outcome.cycles) == 1 and not outcome.memory
    cycle = outcome.cycles[0]
    assert cycle.category == "dynamics" and cycle.verdict == "Supported"
    # two of three significant sits exactly on the inclusive support boundary
    assert cycle.pass_fraction == pytest.approx(2.0 / 3.0, abs=1e-6)
    assert cycle.completeness == 1.0
    assert outcome.figure == "figure_c1_synoptic_z500_msl_barbs.svg"
    assert (tmp_path / "figs" / outcome.figure).read_text("utf-8").startswith("<svg")


def test_accept_engineered_anomalies(tmp_path):
    outcome, _ = run_scenario("coldwave_accept", tmp_path)
    by_id = {e.index_id: e for e in outcome.cycles[0].evidence}
    assert by_id["Cold High Pressure Intensity"].sa == pytest.approx(3.0, abs=1e-6)
    assert by_id["24-h Pressure Change Difference"].sa == pytest.approx(0.5, abs=1e-6)
    assert by_id["24-h Pressure Change Difference"].significant is False


def test_figure_handoff_precedes_final_verdict(tmp_path):
    _, messages = run_scenario("coldwave_accept", tmp_path)
    kinds = [(m.sender, m.body.get("verdict"), bool(m.body.get("handoff_to_plotter")))
             for m in messages]
    handoff_at = next(i for i, k in enumerate(kinds) if k[2])
    supported_at = next(i for i, k in enumerate(kinds) if k[1] == "Supported")
    review_at = next(i for i, m in enumerate(messages)
                     if m.sender is AgentRole.IMAGE_CHECKER)
    assert handoff_at < review_at < supported_at


def test_replan_after_refuted_cycle(tmp_path):
    outcome, _ = run_scenario("rainstorm_replan", tmp_path)
    assert outcome.status == "accepted"
    assert [c.verdict for c in outcome.cycles] == ["Refuted", "Supported"]
    assert [c.category for c in outcome.cycles] == ["dynamics", "thermodynamics"]
    first = outcome.cycles[0]
    assert first.pass_fraction == pytest.approx(0.25)
    assert first.completeness == pytest.approx(0.8)
    errs = [e for e in first.evidence if e.status == "error"]
    assert len(errs) == 1
    assert errs[0].index_id == "High-Level Convergence Extrema"
    assert "200" in errs[0].error
    assert len(outcome.memory) == 1
    assert outcome.memory[0].cycle == 1 and outcome.memory[0].verdict == "Refuted"
    assert outcome.figure == "figure_c2_theta_e_850_z500.svg"


def test_exhaust_walks_all_categories(tmp_path):
    outcome, _ = run_scenario("heatwave_exhaust", tmp_path)
    assert outcome.status == "exhausted" and not outcome.accepted
    assert [c.category for c in outcome.cycles] == \
        ["dynamics", "thermodynamics", "moisture"]
    assert all(c.verdict == "Refuted" for c in outcome.cycles)
    assert [m.cycle for m in outcome.memory] == [1, 2, 3]
    assert outcome.figure is None
    assert "exhausted" in outcome.report


def test_insufficient_evidence_retries_once_then_moves_on(tmp_path):
    store = build_case("heatwave_insufficient", tmp_path / "store")
    outcome, messages = run_loop(scenario_task("heatwave_exhaust"), store)
    first = outcome.cycles[0]
    assert first.verdict == "Insufficient" and first.retried
    assert first.completeness == pytest.approx(2.0 / 3.0, abs=1e-6)
    # the retry re-fetches and recomputes exactly once
    hypotheses = [m for m in messages
                  if m.body.get("phase") == "hypothesis"
                  and m.body.get("category") == "dynamics"]
    assert len(hypotheses) == 2
    assert [h.body["retry"] for h in hypotheses] == [False, True]
    assert outcome.status == "exhausted"
    assert len(outcome.cycles) == 3


def test_third_category_accept_keeps_two_memories(tmp_path):
    outcome, _ = run_scenario("rainstorm_moisture", tmp_path,
                              out_dir=tmp_path / "figs")
    assert outcome.status == "accepted"
    assert [c.verdict for c in outcome.cycles] == \
        ["Refuted", "Refuted", "Supported"]
    assert len(outcome.memory) == 2
    assert outcome.figure == "figure_c3_moisture_flux_925.svg"


def test_run_is_deterministic(tmp_path):
    def once(sub):
        store = build_case("rainstorm_moisture", tmp_path / sub)
        outcome, messages = run_loop(scenario_task("rainstorm_moisture"), store)
        return outcome.to_json(), messages_to_jsonl(messages)
    assert once("a") == once("b")


# --- index and figure tasks ---------------------------------------------------

def test_index_task_matches_direct_computation(tmp_path):
    store = build_case("rainstorm_replan", tmp_path / "store")
    reg = registry()
    spec = reg["Positive Vorticity"]
    inputs = {v: store.fetch_field(v) for v in spec.required_vars}
    expected = compute_index("Positive Vorticity", inputs,
                             store.meta["index_params"]["Positive Vorticity"],
                             reg=reg)
    outcome, _ = run_loop("Compute the Positive Vorticity for this case.", store)
    assert outcome.status == "answered" and outcome.accepted
    assert outcome.answer["value"] == expected.value
    assert outcome.answer["units"] == "s-1"
    assert outcome.task_kind == "index_calc"


def test_index_task_unknown_index_raises(tmp_path):
    store = build_case("coldwave_accept", tmp_path / "store")
    with pytest.raises(DiagnosisError, match="no known index"):
        run_loop("Compute the Imaginary Blocking Number now.", store)


def test_find_index_id_prefers_longest_match():
    reg = registry()
    text = "compute the cold pool central temperature please"
    assert find_index_id(text, reg) == "Cold Pool Central Temperature"
    assert find_index_id("temperature over the region, compute it", reg) == \
        "Temperature"


def test_pick_template_hints():
    assert pick_template("Plot the 200-hPa jet streaks") == "jet_200_z500"
    assert pick_template("Draw the theta-e ridge") == "theta_e_850_z500"
    assert pick_template("Map the moisture flux") == "moisture_flux_925"
    assert pick_template("Chart something synoptic") == "synoptic_z500_msl_barbs"


def test_figure_task_renders_and_passes_review(tmp_path):
    store = build_case("gale_accept", tmp_path / "store")
    outcome, messages = run_loop(
        "Plot the 500-hPa heights with surface pressure and wind barbs.",
        store, out_dir=tmp_path / "figs")
    assert outcome.status == "figure_done" and outcome.accepted
    assert outcome.figure.endswith("synoptic_z500_msl_barbs.svg")
    svg = (tmp_path / "figs" / outcome.figure).read_text("utf-8")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    reviews = [m for m in messages if m.body.get("phase") == "figure_review"]
    assert reviews and reviews[-1].body["verdict"] == "pass"


def test_no_out_dir_writes_nothing(tmp_path):
    outcome, _ = run_scenario("coldwave_accept", tmp_path)
    assert outcome.figure is not None
    assert not list(tmp_path.glob("**/*.svg"))


# --- executor surface -----------------------------------------------------------

def test_executor_ops(tmp_path):
    store = build_case("rainstorm_replan", tmp_path / "store")
    ex = make_executor(store, registry(), out_dir=tmp_path / "figs")
    got = ex.execute({"op": "fetch_field", "args": {"name": "u"}})
    assert got["status"] == "ok" and got["n_levels"] == 3
    got = ex.execute({"op": "fetch_sounding", "args": {"name": "sounding"}})
    assert got["ref"] == "sounding:sounding" and got["n_levels"] == 8
    got = ex.execute({"op": "prescan", "args": {}})
    assert got["event"] == "Rainstorm"
    got = ex.execute({"op": "compute_index",
                      "args": {"index_id": "High-Level Convergence Extrema"}})
    assert got["status"] == "error" and "200" in got["error"]


def test_transcripts_have_no_absolute_paths(tmp_path):
    store = build_case("rainstorm_replan", tmp_path / "store")
    _, messages = run_loop(scenario_task("rainstorm_replan"), store,
                           out_dir=tmp_path / "figs")
    text = messages_to_jsonl(messages)
    assert str(tmp_path) not in text
    assert "/tmp" not in text and "/root" not in text
