"""Benchmark metrics and the deterministic suite runner.

Index answers are gated on relative error, figures on binary QA alignment,
and pipeline stages on mechanized 0-5 rubrics (score > 4 passes).  Case
files are plain JSON living next to their data fixtures, so a suite
directory is self-contained and replayable.
"""

from __future__ import annotations

import json
import math
import re
import tempfile
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .agents import Message, MessageKind
from .anomaly import EventType
from .diagnosis import run_loop
from .figcheck import CheckReport, check_plot
from .grid import parse_timestamp
from .indices import compute_index, registry
from .kb import KB, coverage_dimensions, default_kb
from .plotspec import BarbLayer, ContourLayer, ShadingLayer, build_plot_spec
from .render import parse_field_ref, render_svg
from .store import DERIVED_BASES, CaseStore, StoreError, resolve_field_ref

INDEX_CASE_SCHEMA = "index-case/1"
FIGURE_CASE_SCHEMA = "figure-case/1"
SCENARIO_CASE_SCHEMA = "e2e-case/1"
SUMMARY_SCHEMA = "bench-summary/1"

GATE_EPS = 0.05
PASS_SCORE = 4          # a dimension passes only above this
# (upper edge, score); ε below the first matching edge takes that score,
# anything at or above 1e-1 falls through to 0
SCORE_BANDS = ((1e-5, 5), (1e-4, 4), (1e-3, 3), (1e-2, 2), (1e-1, 1))


class HarnessError(ValueError):
    """Bad metric input, malformed case file or unusable judge output."""


# ---------------------------------------------------------------------------
# index metrics

@dataclass(frozen=True)
class RelErr:
    """|GT-Reply|/|GT|, or |Reply| outright when GT is zero."""

    eps: float
    absolute_mode: bool


def relative_error(gt: float, reply: float) -> RelErr:
    gt, reply = float(gt), float(reply)
    if not math.isfinite(gt) or not math.isfinite(reply):
        raise HarnessError(f"relative error needs finite values, got GT={gt}, Reply={reply}")
    if gt == 0.0:
        return RelErr(eps=abs(reply), absolute_mode=True)
    return RelErr(eps=abs(gt - reply) / abs(gt), absolute_mode=False)


def index_gate(rel: RelErr) -> bool:
    return rel.eps < GATE_EPS


def index_score(rel: RelErr) -> int:
    for edge, score in SCORE_BANDS:
        if rel.eps < edge:
            return score
    return 0


# ---------------------------------------------------------------------------
# figure QA alignment

def _canon_answer(answer: Any) -> str:
    if isinstance(answer, bool):
        return "yes" if answer else "no"
    return str(answer).strip().lower()


def visualization_score(a_gen: Sequence[Any], a_gt: Sequence[Any]) -> float:
    """Exact-match fraction of the two answer vectors, as a percentage."""
    if len(a_gen) != len(a_gt):
        raise HarnessError(f"answer vectors differ in length: {len(a_gen)} vs {len(a_gt)}")
    if not a_gt:
        raise HarnessError("a figure case needs at least one QA pair")
    hits = sum(1 for gen, gt in zip(a_gen, a_gt) if _canon_answer(gen) == _canon_answer(gt))
    return 100.0 * hits / len(a_gt)


# ---------------------------------------------------------------------------
# hypothesis rubric

@dataclass(frozen=True)
class Hypothesis:
    """An event call plus the guideline entries selected to test it."""

    event: EventType | str
    selected: tuple[str, ...]


def hypothesis_score(h: Hypothesis, kb: KB) -> int:
    if not h.selected:
        return 0
    event = h.event if isinstance(h.event, EventType) else EventType(h.event)
    by_id = {entry.entry_id: entry for entry in kb.guidelines}
    known = [by_id[i] for i in h.selected if i in by_id]
    # an id the KB has never heard of is a fabricated entry: it counts
    # against conformity and contributes no coverage
    conform_n = sum(1 for entry in known if event in entry.applicable)
    total = len(h.selected)
    if conform_n == 0:
        return 0
    dims = len(coverage_dimensions(known))
    if 2 * conform_n < total and dims == 1:
        return 1
    if conform_n < total:
        return 2 if dims <= 2 else 3
    return 5 if dims == 3 else 4


# ---------------------------------------------------------------------------
# data-retrieval rubric

@dataclass(frozen=True)
class RequiredData:
    """What a task needs: core variables, nice-to-have auxiliaries, window."""

    core: tuple[str, ...]
    auxiliary: tuple[str, ...] = ()
    window: tuple[str, str] | None = None

    def as_mapping(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"core": list(self.core), "auxiliary": list(self.auxiliary)}
        if self.window is not None:
            doc["window"] = {"start": self.window[0], "end": self.window[1]}
        return doc

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]) -> "RequiredData":
        window = doc.get("window")
        return cls(core=tuple(doc.get("core", ())),
                   auxiliary=tuple(doc.get("auxiliary", ())),
                   window=(window["start"], window["end"]) if window else None)


@dataclass(frozen=True)
class RetrievedData:
    variables: tuple[str, ...]
    window: tuple[str, str] | None = None


def _window_overlap(retrieved: tuple[str, str] | None,
                    required: tuple[str, str] | None) -> float:
    """Fraction of the required window the retrieval covers."""
    if required is None:
        return 1.0
    if retrieved is None:
        return 0.0
    r0, r1 = (parse_timestamp(v) for v in required)
    g0, g1 = (parse_timestamp(v) for v in retrieved)
    if r1 < r0:
        raise HarnessError("required window runs backwards")
    span = (r1 - r0).total_seconds()
    if span == 0.0:
        return 1.0 if g0 <= r0 <= g1 else 0.0
    lo, hi = max(r0, g0), min(r1, g1)
    return max(0.0, (hi - lo).total_seconds()) / span


def _derivable(var: str, got: set[str]) -> bool:
    bases = DERIVED_BASES.get(var)
    return bases is not None and set(bases) <= got


def data_score(retrieved: RetrievedData, required: RequiredData, *,
               core_floor: float = 0.25, short_floor: float = 0.5) -> int:
    """0-5 retrieval rubric; the 25%/50% coverage cutoffs are configurable."""
    got = set(retrieved.variables)
    if not got:
        return 0
    core, aux = set(required.core), set(required.auxiliary)
    core_cov = len(core & got) / len(core) if core else 1.0
    overlap = _window_overlap(retrieved.window, required.window)
    if core_cov < core_floor or overlap == 0.0:
        return 1
    if core_cov < 1.0 or overlap < short_floor:
        return 2
    aux_missing = {a for a in aux if a not in got and not _derivable(a, got)}
    if aux_missing or overlap < 1.0:
        return 3
    aux_derived_only = {a for a in aux if a not in got}
    extras = got - core - aux
    if extras or aux_derived_only:
        return 4
    return 5


# ---------------------------------------------------------------------------
# figure rubric and report judge

def figure_quality_score(report: CheckReport, render_ok: bool,
                         variables_complete: bool) -> int:
    if not render_ok:
        return 0
    if not variables_complete:
        return 1
    if report.error_count > 0:
        return 2
    if report.style_count > 2:
        return 3
    if report.style_count > 0:
        return 4
    return 5


REPORT_RUBRICS: dict[str, str] = {
    "report/1": (
        "Score the diagnostic report 0-5.\n"
        "5: event typing, evidence chain, figure reference and conclusion all "
        "present, internally consistent and quantitatively supported.\n"
        "4: complete but with minor omissions in the evidence chain.\n"
        "3: conclusion present but key supporting values missing.\n"
        "2: fragmentary; event typing or conclusion unsupported.\n"
        "1: mostly boilerplate, little case-specific content.\n"
        "0: empty or off-topic.\n"
        "Answer with a single integer."
    ),
}


def judge_report(report_text: str, rubric_id: str,
                 judge: Callable[[str], str]) -> int:
    try:
        rubric = REPORT_RUBRICS[rubric_id]
    except KeyError:
        raise HarnessError(f"unknown report rubric {rubric_id!r}") from None
    prompt = f"{rubric}\n\n--- report under review ---\n{report_text}\n"
    reply = judge(prompt)
    matched = re.fullmatch(r"\s*([0-5])\s*", str(reply))
    if matched is None:
        raise HarnessError(f"judge reply {reply!r} is not a single integer 0-5")
    return int(matched.group(1))


class ScriptedJudge:
    """Canned judge replies, in order; the last reply repeats forever."""

    def __init__(self, *replies: str):
        if not replies:
            raise HarnessError("a scripted judge needs at least one reply")
        self._replies = list(replies)
        self._served = 0
        self.prompts: list[str] = []

    def __call__(self, prompt: str) -> str:
        self.prompts.append(prompt)
        reply = self._replies[min(self._served, len(self._replies) - 1)]
        self._served += 1
        return reply


# ---------------------------------------------------------------------------
# score cards

_DIMENSIONS = ("hypothesis", "data", "index", "figure", "report")


@dataclass(frozen=True)
class ScoreCard:
    """Per-dimension 0-5 scores; None means the dimension was not assessed."""

    hypothesis: int | None = None
    data: int | None = None
    index: int | None = None
    figure: int | None = None
    report: int | None = None

    def passes(self) -> dict[str, bool]:
        return {dim: getattr(self, dim) > PASS_SCORE
                for dim in _DIMENSIONS if getattr(self, dim) is not None}

    def as_mapping(self) -> dict[str, Any]:
        return {"scores": {dim: getattr(self, dim) for dim in _DIMENSIONS
                           if getattr(self, dim) is not None},
                "passes": self.passes()}


# ---------------------------------------------------------------------------
# case files

@dataclass(frozen=True)
class IndexCase:
    case_id: str
    question: str
    index_id: str
    tier: str
    fixture: Path                   # case-store directory
    params: Mapping[str, Any]
    gt_value: float
    gt_units: str
    sounding: str = "case"

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any], base: Path) -> "IndexCase":
        gt = doc["gt"]
        value = float(gt["value"])
        if not math.isfinite(value):
            raise HarnessError(f"case {doc.get('case_id')!r}: ground truth is not finite")
        inputs = doc["inputs"]
        return cls(case_id=doc["case_id"], question=doc.get("question", ""),
                   index_id=doc["index_id"], tier=doc["tier"],
                   fixture=base / inputs["fixture"],
                   params=dict(inputs.get("params", {})),
                   gt_value=value, gt_units=gt.get("units", ""),
                   sounding=inputs.get("sounding", "case"))


@dataclass(frozen=True)
class QAPair:
    question: str
    answer: str                     # "yes" | "no"
    probe: Mapping[str, Any]

    def __post_init__(self):
        if _canon_answer(self.answer) not in ("yes", "no"):
            raise HarnessError(f"QA answer must be yes/no, got {self.answer!r}")


@dataclass(frozen=True)
class FigureCase:
    case_id: str
    requirement: str
    template_id: str
    fixture: Path
    qa: tuple[QAPair, ...]

    def __post_init__(self):
        if not self.qa:
            raise HarnessError(f"figure case {self.case_id!r} has no QA pairs")

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any], base: Path) -> "FigureCase":
        qa = tuple(QAPair(question=q["question"], answer=q["answer"],
                          probe=dict(q["probe"])) for q in doc["qa"])
        return cls(case_id=doc["case_id"], requirement=doc.get("requirement", ""),
                   template_id=doc["template_id"], fixture=base / doc["fixture"],
                   qa=qa)


@dataclass(frozen=True)
class ScenarioCase:
    case_id: str
    scenario: str                   # deterministic scenario-generator name
    task: str
    required: RequiredData
    judge_reply: str
    expect: Mapping[str, Any]

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any], base: Path) -> "ScenarioCase":
        return cls(case_id=doc["case_id"], scenario=doc["scenario"],
                   task=doc["task"],
                   required=RequiredData.from_mapping(doc["required_data"]),
                   judge_reply=str(doc.get("judge_reply", "5")),
                   expect=dict(doc.get("expect", {})))


_CASE_PARSERS = {
    INDEX_CASE_SCHEMA: IndexCase.from_mapping,
    FIGURE_CASE_SCHEMA: FigureCase.from_mapping,
    SCENARIO_CASE_SCHEMA: ScenarioCase.from_mapping,
}

Case = IndexCase | FigureCase | ScenarioCase


def load_case(path) -> Case:
    path = Path(path)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise HarnessError(f"cannot read case file {path.name}: {exc}") from exc
    parser = _CASE_PARSERS.get(doc.get("schema"))
    if parser is None:
        raise HarnessError(f"{path.name}: unknown case schema {doc.get('schema')!r}")
    return parser(doc, path.parent)


def load_suite(suite_dir) -> list[Case]:
    suite_dir = Path(suite_dir)
    if not suite_dir.is_dir():
        raise HarnessError(f"suite directory {suite_dir} does not exist")
    paths = sorted(suite_dir.glob("*.json"))
    if not paths:
        raise HarnessError(f"suite directory {suite_dir} holds no case files")
    cases = [load_case(p) for p in paths]
    seen: set[str] = set()
    for case in cases:
        if case.case_id in seen:
            raise HarnessError(f"duplicate case id {case.case_id!r}")
        seen.add(case.case_id)
    return sorted(cases, key=lambda c: c.case_id)


# ---------------------------------------------------------------------------
# figure probes: machine-checkable readings of a rendered figure

def answer_probe(probe: Mapping[str, Any], spec, svg: str) -> str:
    """Evaluate one yes/no probe against the plot spec and its rendering."""
    kind = probe.get("kind")
    if kind == "has_ref":
        want = probe["ref"]
        hit = any(want in _layer_refs(layer) for layer in spec.layers)
    elif kind == "has_layer_kind":
        names = {ShadingLayer: "shading", ContourLayer: "contour", BarbLayer: "barbs"}
        hit = any(names[type(layer)] == probe["value"] for layer in spec.layers)
    elif kind == "contour_interval":
        hit = any(isinstance(layer, ContourLayer)
                  and layer.field_ref == probe["ref"]
                  and layer.interval is not None
                  and math.isclose(layer.interval, float(probe["value"]))
                  for layer in spec.layers)
    elif kind == "barb_step_at_most":
        hit = any(isinstance(layer, BarbLayer) and layer.step <= int(probe["value"])
                  for layer in spec.layers)
    elif kind == "title_contains":
        hit = probe["text"].lower() in spec.title.text.lower()
    elif kind == "svg_contains":
        hit = probe["text"] in svg
    else:
        raise HarnessError(f"unknown figure probe kind {kind!r}")
    return "yes" if hit else "no"


def _layer_refs(layer) -> tuple[str, ...]:
    if isinstance(layer, BarbLayer):
        return (layer.u_ref, layer.v_ref)
    return (layer.field_ref,)


# ---------------------------------------------------------------------------
# transcript readers used for end-to-end scoring

def hypothesis_from_messages(messages: Sequence[Message],
                             event: EventType | str) -> Hypothesis:
    """Pool the guideline selections of every hypothesis the run raised."""
    selected: list[str] = []
    for msg in messages:
        if msg.kind is MessageKind.TEXT and msg.body.get("phase") == "hypothesis":
            for entry_id in msg.body.get("guidelines", ()):
                if entry_id not in selected:
                    selected.append(entry_id)
    return Hypothesis(event=event, selected=tuple(selected))


def retrieved_from_messages(messages: Sequence[Message],
                            store: CaseStore) -> RetrievedData:
    prefixes = {"fetch_field": "", "fetch_sounding": "sounding:",
                "fetch_climatology": "clim:"}
    names: list[str] = []
    for msg in messages:
        if msg.kind is not MessageKind.TOOL_CALL or msg.body.get("phase") != "fetch":
            continue
        prefix = prefixes.get(msg.body.get("op", ""))
        if prefix is None:
            continue
        name = prefix + msg.body["args"]["name"]
        if name not in names:
            names.append(name)
    window = None
    stamps = [t for field_name in store.field_names()
              for t in store.fetch_field(field_name).times]
    if stamps:
        fmt = "%Y-%m-%dT%H:%MZ"
        window = (min(stamps).strftime(fmt), max(stamps).strftime(fmt))
    return RetrievedData(variables=tuple(names), window=window)


def figure_review_from_messages(messages: Sequence[Message]) -> CheckReport | None:
    report = None
    for msg in messages:
        if msg.kind is MessageKind.TEXT and msg.body.get("phase") == "figure_review":
            report = CheckReport.from_mapping(msg.body)
    return report


# ---------------------------------------------------------------------------
# the system under test

class DeterministicSystem:
    """Reference adapter that answers benchmark cases with the production
    pipeline: stored fixtures in, kernel/render/loop results out."""

    def __init__(self, *, kb: KB | None = None, reg=None, workdir=None):
        self.kb = kb if kb is not None else default_kb()
        self.registry = reg if reg is not None else registry()
        self.workdir = Path(workdir) if workdir is not None else \
            Path(tempfile.mkdtemp(prefix="wxbench-"))

    def answer_index(self, case: IndexCase) -> tuple[float, str]:
        store = CaseStore.open(case.fixture)
        spec = self.registry.get(case.index_id)
        if spec is None:
            raise HarnessError(f"case {case.case_id}: unknown index {case.index_id!r}")
        inputs: dict[str, Any] = {}
        for var in spec.required_vars:
            if var == "sounding":
                inputs[var] = store.fetch_sounding(case.sounding)
            else:
                inputs[var] = store.fetch_field(var)
        result = compute_index(case.index_id, inputs, dict(case.params))
        return result.value, result.units

    def answer_figure(self, case: FigureCase) -> dict[str, Any]:
        store = CaseStore.open(case.fixture)
        spec = build_plot_spec(case.template_id)
        fields: dict[str, Any] = {}
        complete = True
        for ref in spec.field_refs():
            var = parse_field_ref(ref)[0]
            if var in fields:
                continue
            try:
                fields[var] = resolve_field_ref(store, ref)
            except StoreError:
                complete = False
        try:
            svg = render_svg(spec, fields)
            render_ok = True
        except Exception:
            svg, render_ok = "", False
        answers = [answer_probe(q.probe, spec, svg) for q in case.qa]
        return {"answers": answers, "report": check_plot(spec),
                "render_ok": render_ok, "variables_complete": complete,
                "svg": svg}

    def run_scenario(self, case: ScenarioCase) -> dict[str, Any]:
        from .synth import build_case
        case_dir = self.workdir / case.case_id
        store = build_case(case.scenario, case_dir / "data")
        outcome, messages = run_loop(case.task, store, kb=self.kb,
                                     reg=self.registry,
                                     out_dir=case_dir / "figures")
        return {"outcome": outcome, "messages": messages,
                "retrieved": retrieved_from_messages(messages, store)}


# ---------------------------------------------------------------------------
# per-case evaluation

def evaluate_index_case(case: IndexCase, system) -> dict[str, Any]:
    value, units = system.answer_index(case)
    rel = relative_error(case.gt_value, value)
    card = ScoreCard(index=index_score(rel))
    return {"case_id": case.case_id, "kind": "index", "tier": case.tier,
            "index_id": case.index_id, "value": value, "units": units,
            "gt_value": case.gt_value, "gt_units": case.gt_units,
            "eps": rel.eps, "absolute_mode": rel.absolute_mode,
            "gate": index_gate(rel), **card.as_mapping()}


def evaluate_figure_case(case: FigureCase, system) -> dict[str, Any]:
    run = system.answer_figure(case)
    expected = [q.answer for q in case.qa]
    alignment = visualization_score(run["answers"], expected)
    card = ScoreCard(figure=figure_quality_score(
        run["report"], run["render_ok"], run["variables_complete"]))
    return {"case_id": case.case_id, "kind": "figure",
            "template_id": case.template_id, "alignment": alignment,
            "answers": list(run["answers"]), "expected": expected,
            "render_ok": run["render_ok"], **card.as_mapping()}


def evaluate_scenario_case(case: ScenarioCase, system,
                           judge: Callable[[str], str] | None = None) -> dict[str, Any]:
    run = system.run_scenario(case)
    outcome, messages = run["outcome"], run["messages"]
    hyp_score = None
    if outcome.event:
        hyp = hypothesis_from_messages(messages, outcome.event)
        hyp_score = hypothesis_score(hyp, system.kb)
    d_score = data_score(run["retrieved"], case.required)
    # the figure dimension is only assessed when the loop reached a handoff
    fig_score = None
    review = figure_review_from_messages(messages)
    if review is not None:
        fig_score = figure_quality_score(review, render_ok=outcome.figure is not None,
                                         variables_complete=True)
    r_score = judge_report(outcome.report, "report/1",
                           judge or ScriptedJudge(case.judge_reply))
    card = ScoreCard(hypothesis=hyp_score, data=d_score,
                     figure=fig_score, report=r_score)
    row = {"case_id": case.case_id, "kind": "e2e", "scenario": case.scenario,
           "status": outcome.status, "accepted": outcome.accepted,
           "event": outcome.event, "cycles": len(outcome.cycles),
           "memory": len(outcome.memory), **card.as_mapping()}
    row["expect_mismatches"] = _expect_mismatches(case.expect, row)
    return row


def _expect_mismatches(expect: Mapping[str, Any], row: Mapping[str, Any]) -> list[str]:
    """Pin a scenario row to the behavior frozen in the case file."""
    mismatches = []
    for key, want in sorted(expect.items()):
        if key == "scores":
            for dim, want_score in sorted(want.items()):
                got = row["scores"].get(dim)
                if got != want_score:
                    mismatches.append(f"scores.{dim}: expected {want_score}, got {got}")
            continue
        got = row.get(key)
        if got != want:
            mismatches.append(f"{key}: expected {want!r}, got {got!r}")
    return mismatches


# ---------------------------------------------------------------------------
# the runner

_FLOOR_METRICS = ("index_gate", "alignment") + _DIMENSIONS


@dataclass(frozen=True)
class BenchConfig:
    """Runner knobs: pass-rate floors (fractions) and an optional judge."""

    floors: Mapping[str, float] = field(default_factory=dict)
    judge: Callable[[str], str] | None = None

    def __post_init__(self):
        for name in self.floors:
            if name not in _FLOOR_METRICS:
                raise HarnessError(f"unknown floor metric {name!r}")


def _round(x: float) -> float:
    return round(x, 6)


def run_benchmark(cases: Sequence[Case], system,
                  cfg: BenchConfig | None = None) -> dict[str, Any]:
    """Evaluate every case, never aborting the run on a broken one."""
    cfg = cfg or BenchConfig()
    rows: list[dict[str, Any]] = []
    errored: list[dict[str, Any]] = []
    for case in sorted(cases, key=lambda c: c.case_id):
        try:
            if isinstance(case, IndexCase):
                rows.append(evaluate_index_case(case, system))
            elif isinstance(case, FigureCase):
                rows.append(evaluate_figure_case(case, system))
            elif isinstance(case, ScenarioCase):
                rows.append(evaluate_scenario_case(case, system, cfg.judge))
            else:
                raise HarnessError(f"unknown case type {type(case).__name__}")
        except Exception as exc:
            errored.append({"case_id": case.case_id,
                            "error": f"{type(exc).__name__}: {exc}"})

    index_rows = [r for r in rows if r["kind"] == "index"]
    figure_rows = [r for r in rows if r["kind"] == "figure"]
    tiers: dict[str, dict[str, Any]] = {}
    for row in index_rows:
        slot = tiers.setdefault(row["tier"], {"n": 0, "gate_passes": 0})
        slot["n"] += 1
        slot["gate_passes"] += bool(row["gate"])
    for slot in tiers.values():
        slot["accuracy_pct"] = _round(100.0 * slot["gate_passes"] / slot["n"])
    gate_rate = (sum(bool(r["gate"]) for r in index_rows) / len(index_rows)
                 if index_rows else None)
    alignment_mean = (sum(r["alignment"] for r in figure_rows) / len(figure_rows)
                      if figure_rows else None)

    pass_rates: dict[str, float] = {}
    for dim in _DIMENSIONS:
        flags = [r["passes"][dim] for r in rows if dim in r["passes"]]
        if flags:
            pass_rates[dim] = _round(sum(flags) / len(flags))

    observed: dict[str, float | None] = {"index_gate": gate_rate,
                                         "alignment": None if alignment_mean is None
                                         else alignment_mean / 100.0}
    observed.update(pass_rates)
    floor_failures = []
    for name, floor in sorted(cfg.floors.items()):
        seen = observed.get(name)
        if seen is None or seen < floor:
            shown = "n/a" if seen is None else f"{_round(seen)}"
            floor_failures.append(f"{name}: {shown} < floor {floor}")

    drifted = [r for r in rows if r.get("expect_mismatches")]
    return {
        "schema": SUMMARY_SCHEMA,
        "n_cases": len(cases), "scored": len(rows), "errored": len(errored),
        "cases": rows, "errors": sorted(errored, key=lambda e: e["case_id"]),
        "index": {"n": len(index_rows),
                  "gate_rate": None if gate_rate is None else _round(gate_rate),
                  "tiers": dict(sorted(tiers.items()))},
        "figure": {"n": len(figure_rows),
                   "alignment_mean_pct": None if alignment_mean is None
                   else _round(alignment_mean)},
        "dimension_pass_rates": pass_rates,
        "floors": dict(sorted(cfg.floors.items())),
        "floor_failures": floor_failures,
        "expect_drift": sum(len(r["expect_mismatches"]) for r in drifted),
        "ok": not floor_failures and not errored and not drifted,
    }


def summary_to_json(summary: Mapping[str, Any]) -> str:
    return json.dumps(summary, indent=1, sort_keys=True)


def format_summary(summary: Mapping[str, Any]) -> str:
    """Plain-text table for terminals; one line per case, then totals."""
    lines = [f"{'case':30s} {'kind':7s} result"]
    for row in summary["cases"]:
        if row["kind"] == "index":
            verdict = "pass" if row["gate"] else "FAIL"
            detail = (f"eps={row['eps']:.3e} gate={verdict} "
                      f"score={row['scores']['index']} [{row['tier']}]")
        elif row["kind"] == "figure":
            detail = (f"alignment={row['alignment']:.1f}% "
                      f"figure_score={row['scores']['figure']}")
        else:
            scored = ",".join(f"{k}={v}" for k, v in sorted(row["scores"].items()))
            detail = f"status={row['status']} {scored}"
        lines.append(f"{row['case_id']:30s} {row['kind']:7s} {detail}")
        for miss in row.get("expect_mismatches", ()):
            lines.append(f"{'':30s} DRIFT   {miss}")
    for err in summary["errors"]:
        lines.append(f"{err['case_id']:30s} ERROR   {err['error']}")
    lines.append(f"scored {summary['scored']} / errored {summary['errored']} "
                 f"of {summary['n_cases']}")
    if summary["index"]["n"]:
        tiers = " ".join(f"{tier}={slot['accuracy_pct']:.1f}%"
                         for tier, slot in summary["index"]["tiers"].items())
        lines.append(f"index gate rate {100.0 * summary['index']['gate_rate']:.1f}%  "
                     f"tiers: {tiers}")
    if summary["figure"]["n"]:
        lines.append(f"figure alignment mean {summary['figure']['alignment_mean_pct']:.1f}%")
    if summary["dimension_pass_rates"]:
        dims = " ".join(f"{k}={100.0 * v:.1f}%"
                        for k, v in sorted(summary["dimension_pass_rates"].items()))
        lines.append(f"dimension pass rates: {dims}")
    for failure in summary["floor_failures"]:
        lines.append(f"FLOOR FAILURE {failure}")
    lines.append("OK" if summary["ok"] else "NOT OK")
    return "\n".join(lines)
