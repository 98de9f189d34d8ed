"""Closed-loop event diagnosis.

One diagnosis is a conversation: a pre-scan names the anomalous event, the
diagnostician hypothesizes a mechanism category, evidence indices are
fetched and computed, and the cycle verdict decides what happens next.
Supported hypotheses get a chart and a final report; refuted ones are
remembered and the next category is tried; thin evidence earns exactly one
data retry.  Three categories, three cycles, then the loop admits defeat.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .agents import (AgentRole, ConversationEngine, Message, MessageKind,
                     TaskKind, ToolExecutor, classify_scenario)
from .anomaly import EventType, check_anomaly
from .figcheck import CheckReport, apply_suggestions, check_plot
from .indices import IndexSpec, compute_index, registry
from .kb import CATEGORY_ORDER, KB, default_kb, match_applicable
from .plotspec import PlotSpec, build_plot_spec
from .render import render_svg
from .store import CaseStore, base_vars_for_ref, resolve_field_ref

OUTCOME_SCHEMA = "diagnosis/1"


class DiagnosisError(RuntimeError):
    pass


@dataclass(frozen=True)
class LoopConfig:
    max_cycles: int = 3
    sa_threshold: float = 2.0          # |standardized anomaly| that counts as support
    support_fraction: float = 2.0 / 3.0
    completeness_min: float = 0.75
    max_figure_rounds: int = 3


@dataclass(frozen=True)
class EvidenceItem:
    index_id: str
    status: str                        # ok | error | no_climatology
    value: float | None = None
    units: str = ""
    sa: float | None = None
    significant: bool | None = None
    error: str = ""

    def as_mapping(self) -> dict[str, Any]:
        return {"index_id": self.index_id, "status": self.status,
                "value": self.value, "units": self.units, "sa": self.sa,
                "significant": self.significant, "error": self.error}

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]) -> "EvidenceItem":
        return cls(index_id=doc["index_id"], status=doc["status"],
                   value=doc.get("value"), units=doc.get("units", ""),
                   sa=doc.get("sa"), significant=doc.get("significant"),
                   error=doc.get("error", ""))


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    category: str
    verdict: str
    pass_fraction: float
    completeness: float
    evidence: tuple[EvidenceItem, ...]
    retried: bool = False
    figure: str | None = None

    def as_mapping(self) -> dict[str, Any]:
        return {"cycle": self.cycle, "category": self.category,
                "verdict": self.verdict, "pass_fraction": self.pass_fraction,
                "completeness": self.completeness,
                "evidence": [e.as_mapping() for e in self.evidence],
                "retried": self.retried, "figure": self.figure}

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]) -> "CycleRecord":
        return cls(cycle=int(doc["cycle"]), category=doc["category"],
                   verdict=doc["verdict"],
                   pass_fraction=float(doc["pass_fraction"]),
                   completeness=float(doc["completeness"]),
                   evidence=tuple(EvidenceItem.from_mapping(e)
                                  for e in doc.get("evidence", ())),
                   retried=bool(doc.get("retried", False)),
                   figure=doc.get("figure"))


@dataclass(frozen=True)
class MemoryEntry:
    cycle: int
    category: str
    verdict: str
    pass_fraction: float
    note: str

    def as_mapping(self) -> dict[str, Any]:
        return {"cycle": self.cycle, "category": self.category,
                "verdict": self.verdict, "pass_fraction": self.pass_fraction,
                "note": self.note}

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]) -> "MemoryEntry":
        return cls(cycle=int(doc["cycle"]), category=doc["category"],
                   verdict=doc["verdict"],
                   pass_fraction=float(doc["pass_fraction"]),
                   note=doc.get("note", ""))


@dataclass(frozen=True)
class DiagnosisOutcome:
    task_text: str
    task_kind: str
    status: str            # accepted | exhausted | answered | figure_done | failed | no_event
    accepted: bool
    event: str | None
    anomaly: Mapping[str, Any] | None
    cycles: tuple[CycleRecord, ...]
    memory: tuple[MemoryEntry, ...]
    answer: Mapping[str, Any] | None
    figure: str | None
    report: str

    def as_mapping(self) -> dict[str, Any]:
        return {
            "schema": OUTCOME_SCHEMA,
            "task_text": self.task_text,
            "task_kind": self.task_kind,
            "status": self.status,
            "accepted": self.accepted,
            "event": self.event,
            "anomaly": dict(self.anomaly) if self.anomaly is not None else None,
            "cycles": [c.as_mapping() for c in self.cycles],
            "memory": [m.as_mapping() for m in self.memory],
            "answer": dict(self.answer) if self.answer is not None else None,
            "figure": self.figure,
            "report": self.report,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_mapping(), indent=2)

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]) -> "DiagnosisOutcome":
        if doc.get("schema") != OUTCOME_SCHEMA:
            raise DiagnosisError(f"unsupported outcome schema {doc.get('schema')!r}")
        return cls(task_text=doc["task_text"], task_kind=doc["task_kind"],
                   status=doc["status"], accepted=bool(doc["accepted"]),
                   event=doc.get("event"), anomaly=doc.get("anomaly"),
                   cycles=tuple(CycleRecord.from_mapping(c)
                                for c in doc.get("cycles", ())),
                   memory=tuple(MemoryEntry.from_mapping(m)
                                for m in doc.get("memory", ())),
                   answer=doc.get("answer"), figure=doc.get("figure"),
                   report=doc.get("report", ""))

    @classmethod
    def from_json(cls, text: str) -> "DiagnosisOutcome":
        return cls.from_mapping(json.loads(text))


# ---------------------------------------------------------------------------
# executor operations

def make_executor(store: CaseStore, reg: Mapping[str, IndexSpec],
                  out_dir: str | Path | None = None) -> ToolExecutor:
    executor = ToolExecutor()

    def fetch_field(name: str):
        f = store.fetch_field(name)
        return {"ref": name, "units": f.units, "n_levels": len(f.levels),
                "n_times": len(f.times)}

    def fetch_sounding(name: str = "sounding"):
        s = store.fetch_sounding(name)
        return {"ref": f"sounding:{name}", "n_levels": int(s.p.size)}

    def fetch_climatology(name: str):
        sample = store.fetch_climatology(name)
        return {"ref": f"clim:{name}", "n": int(sample.size),
                "mean": float(sample.mean()), "std": float(sample.std())}

    def prescan():
        meta = store.meta
        candidates = {k: float(v)
                      for k, v in sorted(meta.get("prescan_candidates", {}).items())}
        available = set(store.climatology_names())
        climatology = {k: store.fetch_climatology(k)
                       for k in candidates if k in available}
        report = check_anomaly(candidates, climatology)
        if report is None:
            return {"event": None, "candidates": candidates}
        return dict(report.as_mapping(), candidates=candidates)

    def op_compute_index(index_id: str):
        try:
            spec = reg[index_id]
        except KeyError:
            raise DiagnosisError(f"unknown index id {index_id!r}")
        params = store.meta.get("index_params", {}).get(index_id, {})
        inputs: dict[str, Any] = {}
        for var in spec.required_vars:
            if var == "sounding":
                inputs[var] = store.fetch_sounding(
                    store.meta.get("sounding_name", "sounding"))
            else:
                inputs[var] = store.fetch_field(var)
        result = compute_index(index_id, inputs, params, reg=reg)
        return {"index_id": index_id, "value": result.value,
                "units": result.units, "provenance": result.provenance}

    def render_figure(spec: Mapping[str, Any], out_name: str):
        plot_spec = PlotSpec.from_mapping(spec)
        fields = {ref: resolve_field_ref(store, ref)
                  for ref in plot_spec.field_refs()}
        svg = render_svg(plot_spec, fields)
        if out_dir is not None:
            path = Path(out_dir) / out_name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(svg, "utf-8")
        digest = hashlib.sha256(svg.encode("utf-8")).hexdigest()[:16]
        return {"figure": out_name, "svg_sha256": digest, "svg_bytes": len(svg)}

    executor.register("fetch_field", fetch_field)
    executor.register("fetch_sounding", fetch_sounding)
    executor.register("fetch_climatology", fetch_climatology)
    executor.register("prescan", prescan)
    executor.register("compute_index", op_compute_index)
    executor.register("render_figure", render_figure)
    return executor


# ---------------------------------------------------------------------------
# loop state

@dataclass
class _CycleState:
    number: int
    category: str
    planned: list[str]
    queue: deque
    evidence: list[EvidenceItem] = field(default_factory=list)
    retried: bool = False
    fig_requested: bool = False
    figure: str | None = None


@dataclass
class _LoopState:
    task_kind: TaskKind | None = None
    target_index: str | None = None
    figure_template: str | None = None
    plans_made: int = 0
    pending_fetches: deque = field(default_factory=deque)
    batch_ok: list = field(default_factory=list)
    batch_missing: list = field(default_factory=list)
    clim_stats: dict = field(default_factory=dict)
    prescan_done: bool = False
    event: EventType | None = None
    anomaly: dict | None = None
    categories_tried: list = field(default_factory=list)
    cycle: _CycleState | None = None
    cycles: list = field(default_factory=list)
    memory: list = field(default_factory=list)
    answer: dict | None = None
    figure: str | None = None
    fig_rounds: int = 0
    current_spec: PlotSpec | None = None
    status: str = "incomplete"


def find_index_id(text: str, reg: Mapping[str, IndexSpec]) -> str:
    """The longest registry id mentioned in the task wording."""
    lowered = text.lower()
    hits = [iid for iid in reg if iid.lower() in lowered]
    if not hits:
        raise DiagnosisError(f"task names no known index: {text!r}")
    return max(hits, key=len)


_TEMPLATE_HINTS = (
    ("jet", "jet_200_z500"),
    ("theta", "theta_e_850_z500"),
    ("equivalent potential", "theta_e_850_z500"),
    ("moisture", "moisture_flux_925"),
    ("height anomaly", "z500_sa"),
    ("temperature anomaly", "t2m_sa_msl"),
    ("advection", "t850_adv_msl"),
    ("10-m wind", "wind10_speed_barbs"),
    ("surface wind", "wind10_speed_barbs"),
)


def pick_template(text: str) -> str:
    lowered = text.lower()
    for hint, template_id in _TEMPLATE_HINTS:
        if hint in lowered:
            return template_id
    return "synoptic_z500_msl_barbs"


# ---------------------------------------------------------------------------
# role handlers

def _make_handlers(state: _LoopState, store: CaseStore, kb: KB,
                   reg: Mapping[str, IndexSpec], config: LoopConfig,
                   executor: ToolExecutor):
    def schedule_fetches(vars_needed: Sequence[str], clim_ids: Sequence[str] = ()):
        state.pending_fetches.clear()
        state.batch_ok, state.batch_missing = [], []
        seen = set()
        sounding_name = store.meta.get("sounding_name", "sounding")
        for var in vars_needed:
            item = (("fetch_sounding", sounding_name) if var == "sounding"
                    else ("fetch_field", var))
            if item not in seen:
                seen.add(item)
                state.pending_fetches.append(item)
        for index_id in clim_ids:
            item = ("fetch_climatology", index_id)
            if item not in seen:
                seen.add(item)
                state.pending_fetches.append(item)

    def next_category() -> str | None:
        for category in CATEGORY_ORDER:
            if category not in state.categories_tried:
                return category
        return None

    def decomposer(engine: ConversationEngine):
        state.plans_made += 1
        if state.plans_made > 3:
            raise DiagnosisError("planning loop is not making progress")
        text = engine.messages[0].body.get("text", "")
        state.task_kind = classify_scenario(text)
        if state.task_kind is TaskKind.INDEX_CALC:
            state.target_index = find_index_id(text, reg)
            schedule_fetches(reg[state.target_index].required_vars)
            steps = ["fetch the inputs", f"compute {state.target_index}",
                     "report the value"]
        elif state.task_kind is TaskKind.FIGURE:
            state.figure_template = pick_template(text)
            spec = build_plot_spec(state.figure_template)
            vars_needed: list[str] = []
            for ref in spec.field_refs():
                for var in base_vars_for_ref(store, ref):
                    if var not in vars_needed:
                        vars_needed.append(var)
            schedule_fetches(vars_needed)
            steps = ["fetch the fields", f"compose {state.figure_template}",
                     "style check", "report"]
        else:
            candidates = sorted(store.meta.get("prescan_candidates", {}))
            schedule_fetches((), clim_ids=candidates)
            steps = ["pre-scan candidates against climatology",
                     "hypothesize a mechanism category",
                     "gather and compute evidence indices",
                     "verify against significance thresholds", "report"]
        return MessageKind.PLAN, {"task_kind": state.task_kind.value,
                                  "steps": steps}

    def data_specialist(engine: ConversationEngine):
        last = engine.messages[-1]
        if last.kind is MessageKind.EXECUTION_RESULT \
                and last.body.get("phase") == "fetch":
            request = engine.messages[-2].body
            name = request.get("args", {}).get("name", "?")
            if last.body.get("status") == "ok":
                state.batch_ok.append(last.body.get("ref", name))
                if request.get("op") == "fetch_climatology":
                    state.clim_stats[name] = (last.body["mean"], last.body["std"])
            else:
                state.batch_missing.append(name)
        if state.pending_fetches:
            op, name = state.pending_fetches.popleft()
            return MessageKind.TOOL_CALL, {"phase": "fetch", "op": op,
                                           "args": {"name": name}}
        return MessageKind.DATA_REF, {"phase": "data_ready",
                                      "refs": sorted(state.batch_ok),
                                      "missing": sorted(state.batch_missing)}

    def code_executor(engine: ConversationEngine):
        return MessageKind.EXECUTION_RESULT, executor.execute(engine.messages[-1].body)

    def emit_hypothesis(category: str, retry: bool = False):
        entries = match_applicable(kb, state.event, category=category,
                                   modality="Index")
        planned: list[str] = []
        for entry in entries:
            for index_id in entry.index_ids:
                if index_id not in planned:
                    planned.append(index_id)
        figure_entries = match_applicable(kb, state.event, category=category,
                                          modality="Figure")
        state.figure_template = (figure_entries[0].template_id
                                 if figure_entries else None)
        if retry:
            cyc = state.cycle
            cyc.retried = True
            cyc.evidence.clear()
            cyc.queue = deque(planned)
        else:
            state.categories_tried.append(category)
            cyc = _CycleState(number=len(state.categories_tried),
                              category=category, planned=planned,
                              queue=deque(planned))
            state.cycle = cyc
        vars_needed: list[str] = []
        for index_id in planned:
            for var in reg[index_id].required_vars:
                if var not in vars_needed:
                    vars_needed.append(var)
        schedule_fetches(vars_needed, clim_ids=planned)
        statement = (f"{state.event.value} driven primarily by {category} "
                     f"mechanisms; verify {len(planned)} evidence indices")
        return MessageKind.TEXT, {"phase": "hypothesis", "cycle": cyc.number,
                                  "event": state.event.value,
                                  "category": category, "statement": statement,
                                  "evidence_plan": planned,
                                  "guidelines": [e.entry_id for e in entries],
                                  "retry": retry}

    def record_evidence(engine: ConversationEngine, body: Mapping[str, Any]):
        if body.get("status") == "ok":
            index_id = body["index_id"]
            value = float(body["value"])
            stats = state.clim_stats.get(index_id)
            if stats is None or stats[1] <= 0:
                item = EvidenceItem(index_id, "no_climatology", value=value,
                                    units=body.get("units", ""))
            else:
                sa = (value - stats[0]) / stats[1]
                item = EvidenceItem(index_id, "ok", value=value,
                                    units=body.get("units", ""), sa=sa,
                                    significant=abs(sa) >= config.sa_threshold)
        else:
            index_id = engine.messages[-2].body.get("args", {}).get("index_id", "?")
            item = EvidenceItem(index_id, "error", error=body.get("error", ""))
        state.cycle.evidence.append(item)

    def cycle_stats():
        cyc = state.cycle
        computed = [e for e in cyc.evidence if e.status == "ok"]
        supporting = sum(1 for e in computed if e.significant)
        completeness = len(computed) / len(cyc.planned) if cyc.planned else 0.0
        pass_fraction = supporting / len(computed) if computed else 0.0
        return computed, supporting, pass_fraction, completeness

    def close_cycle(verdict: str, pass_fraction: float, completeness: float,
                    note: str):
        cyc = state.cycle
        state.cycles.append(CycleRecord(
            cycle=cyc.number, category=cyc.category, verdict=verdict,
            pass_fraction=round(pass_fraction, 6),
            completeness=round(completeness, 6),
            evidence=tuple(cyc.evidence), retried=cyc.retried,
            figure=cyc.figure))
        if verdict != "Supported":
            state.memory.append(MemoryEntry(
                cycle=cyc.number, category=cyc.category, verdict=verdict,
                pass_fraction=round(pass_fraction, 6), note=note))

    def finalize_supported():
        cyc = state.cycle
        computed, supporting, pass_fraction, completeness = cycle_stats()
        close_cycle("Supported", pass_fraction, completeness, "")
        state.status = "accepted"
        body = {"phase": "verdict", "verdict": "Supported",
                "cycle": cyc.number, "category": cyc.category,
                "pass_fraction": round(pass_fraction, 6),
                "completeness": round(completeness, 6),
                "event_detected": state.event.value}
        if cyc.figure:
            body["figure"] = cyc.figure
        return MessageKind.TEXT, body

    def verdict_message():
        cyc = state.cycle
        computed, supporting, pass_fraction, completeness = cycle_stats()
        common = {"phase": "verdict", "cycle": cyc.number,
                  "category": cyc.category,
                  "pass_fraction": round(pass_fraction, 6),
                  "completeness": round(completeness, 6)}
        if completeness < config.completeness_min:
            if not cyc.retried:
                return MessageKind.TEXT, dict(
                    common, verdict="Insufficient", replan=True, retry=True,
                    note="evidence below the completeness floor; "
                         "retrying data acquisition once")
            note = (f"{cyc.category} evidence incomplete even after a retry "
                    f"({len(computed)}/{len(cyc.planned)} computed)")
            close_cycle("Insufficient", pass_fraction, completeness, note)
            nxt = next_category()
            if nxt is not None and len(state.categories_tried) < config.max_cycles:
                return MessageKind.TEXT, dict(common, verdict="Insufficient",
                                              replan=True, note=note)
            state.status = "exhausted"
            return MessageKind.TEXT, dict(common, verdict="Insufficient",
                                          exhausted=True, note=note)
        if pass_fraction >= config.support_fraction:
            if state.figure_template and not cyc.fig_requested:
                cyc.fig_requested = True
                return MessageKind.TEXT, {
                    "phase": "handoff", "handoff_to_plotter": True,
                    "cycle": cyc.number, "template": state.figure_template,
                    "note": "verification passed; produce the supporting chart"}
            return finalize_supported()
        note = (f"{cyc.category} evidence unsupported "
                f"({supporting}/{len(computed)} significant)")
        close_cycle("Refuted", pass_fraction, completeness, note)
        nxt = next_category()
        if nxt is not None and len(state.categories_tried) < config.max_cycles:
            return MessageKind.TEXT, dict(common, verdict="Refuted", replan=True,
                                          note=note + f"; trying {nxt} next")
        state.status = "exhausted"
        return MessageKind.TEXT, dict(common, verdict="Refuted", exhausted=True,
                                      note=note + "; no categories left")

    def next_calc_or_verdict():
        cyc = state.cycle
        if cyc.queue:
            index_id = cyc.queue.popleft()
            return MessageKind.TOOL_CALL, {
                "phase": "calc", "op": "compute_index",
                "args": {"index_id": index_id}, "final_calc": not cyc.queue}
        return verdict_message()

    def diagnostician(engine: ConversationEngine):
        last = engine.messages[-1]
        body = last.body
        if state.task_kind is TaskKind.INDEX_CALC:
            if last.kind is MessageKind.DATA_REF:
                return MessageKind.TOOL_CALL, {
                    "phase": "calc", "op": "compute_index",
                    "args": {"index_id": state.target_index}, "final_calc": True}
            if last.kind is MessageKind.EXECUTION_RESULT:
                if body.get("status") == "ok":
                    state.answer = {"index_id": body["index_id"],
                                    "value": body["value"],
                                    "units": body.get("units", ""),
                                    "provenance": body.get("provenance", "")}
                else:
                    state.answer = {"index_id": state.target_index,
                                    "error": body.get("error", "")}
                return MessageKind.TEXT, dict({"phase": "answer"}, **state.answer)
            raise DiagnosisError(f"unexpected turn for an index task: {last.kind}")
        if last.kind is MessageKind.DATA_REF:
            if not state.prescan_done:
                return MessageKind.TOOL_CALL, {"phase": "calc", "op": "prescan",
                                               "args": {}, "step_id": "prescan"}
            return next_calc_or_verdict()
        if last.kind is MessageKind.EXECUTION_RESULT and body.get("phase") == "calc":
            if not state.prescan_done:
                state.prescan_done = True
                if body.get("status") != "ok" or not body.get("event"):
                    state.status = "no_event"
                    return MessageKind.TEXT, {
                        "phase": "verdict", "verdict": "Refuted",
                        "exhausted": True,
                        "note": "pre-scan found no anomalous candidate"}
                state.anomaly = {k: v for k, v in body.items()
                                 if k not in ("phase", "status", "step_id")}
                state.event = EventType(body["event"])
                return emit_hypothesis(next_category())
            record_evidence(engine, body)
            return next_calc_or_verdict()
        if last.kind is MessageKind.TEXT and last.sender is AgentRole.DIAGNOSTICIAN:
            # a replanning verdict came back around
            if body.get("retry"):
                return emit_hypothesis(state.cycle.category, retry=True)
            nxt = next_category()
            if nxt is None:
                raise DiagnosisError("replanned with no categories left")
            return emit_hypothesis(nxt)
        if last.kind is MessageKind.TEXT and last.sender is AgentRole.IMAGE_CHECKER:
            state.cycle.figure = body.get("figure")
            return finalize_supported()
        raise DiagnosisError(f"diagnostician cannot act on {last.kind}")

    def compose_spec(template_id: str) -> PlotSpec:
        subtitle = store.meta.get("valid_time", "")
        return build_plot_spec(template_id, subtitle=subtitle)

    def plotter(engine: ConversationEngine):
        last = engine.messages[-1]
        body = last.body
        if body.get("handoff_to_plotter"):
            state.current_spec = compose_spec(body.get("template")
                                              or state.figure_template)
            state.fig_rounds = 0
        elif last.kind is MessageKind.DATA_REF:
            state.current_spec = compose_spec(state.figure_template)
            state.fig_rounds = 0
        elif last.kind is MessageKind.TEXT and body.get("phase") == "figure_review":
            if state.fig_rounds >= config.max_figure_rounds:
                raise DiagnosisError("figure did not pass review within the "
                                     "repair budget")
            state.current_spec = apply_suggestions(state.current_spec,
                                                   CheckReport.from_mapping(body))
            state.fig_rounds += 1
        cycle_no = state.cycle.number if state.cycle else 0
        out_name = f"figure_c{cycle_no}_{state.current_spec.template_id}.svg"
        return MessageKind.CODE_BLOCK, {
            "phase": "plot", "op": "render_figure",
            "args": {"spec": state.current_spec.as_mapping(),
                     "out_name": out_name}}

    def image_checker(engine: ConversationEngine):
        spec_doc = None
        for message in reversed(engine.messages):
            if message.kind is MessageKind.CODE_BLOCK \
                    and message.body.get("phase") == "plot":
                spec_doc = message.body.get("args", {}).get("spec")
                break
        if spec_doc is None:
            raise DiagnosisError("no plot request to review")
        report = check_plot(PlotSpec.from_mapping(spec_doc))
        out = dict(report.as_mapping(), phase="figure_review")
        if report.passed:
            exec_body = engine.messages[-1].body
            out["figure"] = exec_body.get("figure")
            state.figure = exec_body.get("figure")
        return MessageKind.TEXT, out

    def reporter(engine: ConversationEngine):
        if state.task_kind is TaskKind.INDEX_CALC:
            answer = state.answer or {}
            if "error" in answer:
                state.status = "failed"
                text = (f"Could not compute {answer.get('index_id')}: "
                        f"{answer.get('error')}")
            else:
                state.status = "answered"
                text = (f"{answer['index_id']} = {answer['value']:.6g} "
                        f"{answer['units']} (provenance {answer['provenance']}).")
        elif state.task_kind is TaskKind.FIGURE:
            if state.figure:
                state.status = "figure_done"
                text = (f"Rendered {state.figure} from template "
                        f"{state.figure_template}; style review passed.")
            else:
                state.status = "failed"
                text = "No figure passed the style review."
        else:
            text = _diagnosis_report(state)
        return MessageKind.REPORT, {"final": True, "status": state.status,
                                    "text": text}

    return {
        AgentRole.DECOMPOSER: decomposer,
        AgentRole.DATA_SPECIALIST: data_specialist,
        AgentRole.CODE_EXECUTOR: code_executor,
        AgentRole.DIAGNOSTICIAN: diagnostician,
        AgentRole.PLOTTER: plotter,
        AgentRole.IMAGE_CHECKER: image_checker,
        AgentRole.REPORTER: reporter,
    }


def _diagnosis_report(state: _LoopState) -> str:
    lines = []
    if state.event is not None and state.anomaly:
        lines.append(f"Event: {state.event.value} "
                     f"(candidate {state.anomaly.get('variable')} at the "
                     f"{state.anomaly.get('exceedance_percentile'):.1f} percentile).")
    elif state.status == "no_event":
        return ("Pre-scan found no candidate beyond its climatological "
                "threshold; no event diagnosis was attempted.")
    for rec in state.cycles:
        lines.append(f"Cycle {rec.cycle} [{rec.category}]: {rec.verdict}; "
                     f"support {rec.pass_fraction:.2f}, "
                     f"completeness {rec.completeness:.2f}"
                     + (", retried" if rec.retried else "") + ".")
    if state.status == "accepted" and state.cycles:
        final = state.cycles[-1]
        keys = [f"{e.index_id} = {e.value:.6g} {e.units} (SA {e.sa:+.2f})"
                for e in final.evidence if e.significant]
        if keys:
            lines.append("Key evidence: " + "; ".join(keys) + ".")
        if final.figure:
            lines.append(f"Supporting chart: {final.figure}.")
        lines.append(f"Diagnosis accepted: {final.category} mechanisms "
                     f"verified for the {state.event.value}.")
    else:
        lines.append(f"Diagnosis exhausted after {len(state.cycles)} cycles; "
                     "no mechanism category met the support threshold.")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# entry point

def run_loop(task_text: str, store: CaseStore, *, kb: KB | None = None,
             reg: Mapping[str, IndexSpec] | None = None,
             config: LoopConfig | None = None,
             out_dir: str | Path | None = None,
             max_turns: int = 300) -> tuple[DiagnosisOutcome, list[Message]]:
    """Run one task end to end; returns the outcome and the full transcript."""
    kb = kb if kb is not None else default_kb()
    reg = reg if reg is not None else registry()
    config = config if config is not None else LoopConfig()
    state = _LoopState()
    executor = make_executor(store, reg, out_dir)
    handlers = _make_handlers(state, store, kb, reg, config, executor)
    engine = ConversationEngine(handlers, max_turns=max_turns)
    engine.seed(task_text)
    engine.run()
    report_text = engine.messages[-1].body.get("text", "")
    outcome = DiagnosisOutcome(
        task_text=task_text,
        task_kind=state.task_kind.value if state.task_kind else "diagnosis",
        status=state.status,
        accepted=state.status in ("accepted", "answered", "figure_done"),
        event=state.event.value if state.event else None,
        anomaly=state.anomaly,
        cycles=tuple(state.cycles),
        memory=tuple(state.memory),
        answer=state.answer,
        figure=state.figure,
        report=report_text,
    )
    return outcome, engine.messages
