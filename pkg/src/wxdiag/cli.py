"""Command-line surface tying the diagnostic pipeline together.

Exit codes: 0 success (diagnosis accepted), 2 diagnosis not accepted
(exhausted or no event found), 1 internal or data error, 64 usage error.
With ``--json`` every command prints exactly one JSON document on stdout;
all diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .agents import ReasonerError, make_reasoner, messages_to_jsonl
from .diagnosis import DiagnosisOutcome, LoopConfig, run_loop
from .figcheck import check_plot
from .grid import ANALYTIC_KINDS, GridError, GridSpec, gen_analytic, write_grd
from .harness import (BenchConfig, DeterministicSystem, HarnessError,
                      format_summary, load_suite, run_benchmark,
                      summary_to_json)
from .indices import compute_index, load_registry, registry
from .kb import default_kb, load_kb
from .plotspec import PlotSpec, PlotSpecError, build_plot_spec, templates
from .render import parse_field_ref, render_svg
from .store import CaseStore, resolve_field_ref

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_NOT_ACCEPTED = 2
EXIT_USAGE = 64


class UsageError(Exception):
    """Bad flags, paths, or identifiers: exits with the usage code."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; route through the usage code instead
    def error(self, message):
        raise UsageError(message)


def _note(text: str) -> None:
    print(text, file=sys.stderr)


def _emit(args, doc, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(doc, indent=1, sort_keys=True))
    else:
        print(text)


def _require_dir(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise UsageError(f"{what} {path!r} is not a directory")
    return p


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} {path!r} is not a file")
    return p


def _load_kb(args):
    if getattr(args, "kb", None):
        return load_kb(_require_file(args.kb, "knowledge base"))
    return default_kb()


def _load_registry(args):
    if getattr(args, "registry", None):
        return load_registry(str(_require_file(args.registry, "registry")))
    return registry()


def _parse_params(pairs) -> dict:
    """key=value pairs; values parse as JSON where possible, else strings."""
    params = {}
    for pair in pairs or ():
        key, sep, raw = pair.partition("=")
        if not key or not sep:
            raise UsageError(f"bad --param {pair!r}; expected key=value")
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    return params


def _reasoner_from(args):
    spec = getattr(args, "reasoner", None)
    if getattr(args, "deterministic", False):
        if spec is not None and not spec.startswith("scripted:"):
            raise UsageError("--deterministic requires a scripted reasoner")
    if spec is None:
        return None
    try:
        return make_reasoner(spec)
    except ReasonerError as exc:
        raise UsageError(str(exc))


# ---------------------------------------------------------------------------
# subcommands

def cmd_diagnose(args) -> int:
    kb = _load_kb(args)
    reg = _load_registry(args)
    _reasoner_from(args)                    # validates the mode combination
    store = CaseStore.open(_require_dir(args.data_dir, "data dir"))
    out_dir = Path(args.out or "wxdiag_run")
    out_dir.mkdir(parents=True, exist_ok=True)
    config = LoopConfig(max_cycles=args.max_cycles) if args.max_cycles else None

    outcome, messages = run_loop(args.query, store, kb=kb, reg=reg,
                                 config=config, out_dir=out_dir / "figures")

    (out_dir / "outcome.json").write_text(
        json.dumps(outcome.as_mapping(), indent=1, sort_keys=True) + "\n", "utf-8")
    (out_dir / "transcript.jsonl").write_text(messages_to_jsonl(messages), "utf-8")
    (out_dir / "report.txt").write_text(_sectioned_report(outcome) + "\n", "utf-8")
    _note(f"wrote outcome.json, transcript.jsonl, report.txt under {out_dir}")

    _emit(args, outcome.as_mapping(),
          f"status: {outcome.status}\n{_sectioned_report(outcome)}")
    if outcome.accepted:
        return EXIT_OK
    if outcome.status in ("exhausted", "no_event"):
        return EXIT_NOT_ACCEPTED
    return EXIT_INTERNAL


def _sectioned_report(outcome: DiagnosisOutcome) -> str:
    lines = ["== Event typing =="]
    if outcome.event:
        lines.append(f"Event: {outcome.event}.")
        if outcome.anomaly:
            lines.append(f"Trigger: {outcome.anomaly.get('variable')} at the "
                         f"{outcome.anomaly.get('exceedance_percentile'):.1f} "
                         "percentile of its climatology.")
    else:
        lines.append("No event type was established.")
    lines.append("")
    lines.append("== Hypothesis trail ==")
    if outcome.cycles:
        for rec in outcome.cycles:
            lines.append(f"Cycle {rec.cycle} [{rec.category}]: {rec.verdict} "
                         f"(support {rec.pass_fraction:.2f}, "
                         f"completeness {rec.completeness:.2f}"
                         + (", retried" if rec.retried else "") + ").")
        notes = [m.note for m in outcome.memory if m.note]
        lines.append("Lessons carried forward: "
                     + ("; ".join(notes) if notes else "none") + ".")
    else:
        lines.append("No verification cycles were run.")
    lines.append("")
    lines.append("== Evidence ==")
    final = outcome.cycles[-1] if outcome.cycles else None
    rows = [e for e in final.evidence if e.status == "ok"] if final else []
    if rows:
        for e in rows:
            flag = "significant" if e.significant else "not significant"
            lines.append(f"{e.index_id} = {e.value:.6g} {e.units} "
                         f"(SA {e.sa:+.2f}, {flag})")
        if final.figure:
            lines.append(f"Chart: {final.figure}")
    else:
        lines.append("No index evidence was computed.")
    lines.append("")
    lines.append("== Conclusion ==")
    lines.append(outcome.report or "(no report text)")
    return "\n".join(lines)


def cmd_index(args) -> int:
    reg = _load_registry(args)
    spec = reg.get(args.index_id)
    if spec is None:
        raise UsageError(f"unknown index {args.index_id!r}; valid ids:\n  "
                         + "\n  ".join(sorted(reg)))
    store = CaseStore.open(_require_dir(args.data_dir, "data dir"))
    params = _parse_params(args.param)
    inputs = {}
    for var in spec.required_vars:
        if var == "sounding":
            inputs[var] = store.fetch_sounding(args.sounding)
        else:
            inputs[var] = store.fetch_field(var)
    result = compute_index(args.index_id, inputs, params)
    doc = {"index_id": result.index_id, "tier": spec.tier,
           "value": result.value, "units": result.units,
           "provenance": result.provenance}
    _emit(args, doc, f"{result.index_id}: {result.value:.6g} {result.units}")
    return EXIT_OK


def cmd_plot(args) -> int:
    if args.template_id not in templates():
        raise UsageError(f"unknown template {args.template_id!r}; valid ids:\n  "
                         + "\n  ".join(sorted(templates())))
    store = CaseStore.open(_require_dir(args.data_dir, "data dir"))
    spec = build_plot_spec(args.template_id)
    fields = {}
    for ref in spec.field_refs():
        var = parse_field_ref(ref)[0]
        if var not in fields:
            fields[var] = resolve_field_ref(store, ref)
    svg = render_svg(spec, fields)
    out = Path(args.out or f"{args.template_id}.svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg, "utf-8")
    report = check_plot(spec)
    _note(f"wrote {out} ({len(svg)} bytes); checker "
          + ("pass" if report.passed else
             f"findings: {', '.join(f.rule_id for f in report.findings)}"))
    _emit(args, {"template_id": args.template_id, "out": str(out),
                 "passed": report.passed,
                 "findings": [f.as_mapping() for f in report.findings]},
          str(out))
    return EXIT_OK


def cmd_check_figure(args) -> int:
    path = _require_file(args.spec, "plot spec")
    try:
        doc = json.loads(path.read_text("utf-8"))
        spec = PlotSpec.from_mapping(doc)
    except (json.JSONDecodeError, PlotSpecError, KeyError, TypeError) as exc:
        _note(f"structural error in {path}: {exc}")
        return EXIT_INTERNAL
    report = check_plot(spec)
    text_lines = [f"{f.rule_id} [{f.severity}] {f.message}"
                  for f in report.findings] or ["pass"]
    _emit(args, report.as_mapping(), "\n".join(text_lines))
    return EXIT_OK if report.passed else EXIT_INTERNAL


_EVAL_FLOORS = {"index": {"index_gate": 1.0},
                "figure": {"alignment": 1.0},
                "e2e": {}}


def cmd_eval(args) -> int:
    suite_dir = _require_dir(args.dir, "suite dir")
    try:
        cases = load_suite(suite_dir)
    except HarnessError as exc:
        raise UsageError(str(exc))
    judge = None
    reasoner = _reasoner_from(args)
    if reasoner is not None:
        judge = lambda prompt: reasoner.complete("judge", prompt)
    system = DeterministicSystem(kb=_load_kb(args), reg=_load_registry(args))
    summary = run_benchmark(cases, system,
                            BenchConfig(floors=_EVAL_FLOORS[args.suite],
                                        judge=judge))
    if args.out:
        Path(args.out).write_text(summary_to_json(summary) + "\n", "utf-8")
        _note(f"wrote summary to {args.out}")
    _emit(args, summary, format_summary(summary))
    return EXIT_OK if summary["ok"] else EXIT_INTERNAL


def cmd_gen_data(args) -> int:
    if args.kind not in ANALYTIC_KINDS:
        raise UsageError(f"unknown kind {args.kind!r}; valid kinds: "
                         + ", ".join(ANALYTIC_KINDS))
    params = _parse_params(args.param)
    levels = params.pop("levels", [500.0])
    noise = float(params.pop("noise", 0.0))
    spec = GridSpec(lat_start=40.0, lat_stop=50.0, nlat=21,
                    lon_start=100.0, lon_stop=110.0, nlon=21,
                    levels=tuple(float(l) for l in levels))
    try:
        built = gen_analytic(args.kind, params, spec)
    except (GridError, KeyError) as exc:
        raise UsageError(f"cannot generate {args.kind!r}: {exc}")
    fields = list(built) if isinstance(built, tuple) else [built]
    rng = np.random.default_rng(args.seed)
    out_dir = Path(args.out or "wxdiag_data")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for field in fields:
        if noise > 0.0:
            field = field.with_values(field.values
                                      + rng.normal(0.0, noise, field.shape))
        written.append(str(write_grd(field, out_dir / f"{field.name}.grd")))
    _note(f"seed {args.seed}; wrote {len(written)} file(s) under {out_dir}")
    _emit(args, {"kind": args.kind, "seed": args.seed, "files": written},
          "\n".join(written))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _add_common(sub, *names):
    if "kb" in names:
        sub.add_argument("--kb", help="knowledge-base JSON path")
    if "registry" in names:
        sub.add_argument("--registry", help="index-registry JSON path")
    if "data-dir" in names:
        sub.add_argument("--data-dir", required=True,
                         help="case store directory")
    if "reasoner" in names:
        sub.add_argument("--reasoner",
                         help="scripted:<path> or remote:<url>")
        sub.add_argument("--deterministic", action="store_true",
                         help="forbid non-scripted reasoners")
    if "json" in names:
        sub.add_argument("--json", action="store_true",
                         help="print one JSON document on stdout")
    if "out" in names:
        sub.add_argument("--out", help="output path")


def _build_parser() -> _Parser:
    parser = _Parser(prog="wxdiag",
                     description="Closed-loop extreme-weather diagnostics.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("diagnose", help="run the full diagnostic loop")
    p.add_argument("query", help="task text, e.g. a diagnosis request")
    _add_common(p, "kb", "registry", "data-dir", "reasoner", "json", "out")
    p.add_argument("--max-cycles", type=int, help="verification cycle budget")
    p.set_defaults(func=cmd_diagnose)

    p = subs.add_parser("index", help="compute one diagnostic index")
    p.add_argument("index_id")
    _add_common(p, "registry", "data-dir", "json")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="kernel parameter (JSON value); repeatable")
    p.add_argument("--sounding", default="case",
                   help="sounding name inside the store")
    p.set_defaults(func=cmd_index)

    p = subs.add_parser("plot", help="render a template to an SVG file")
    p.add_argument("template_id")
    _add_common(p, "data-dir", "json", "out")
    p.set_defaults(func=cmd_plot)

    p = subs.add_parser("check-figure", help="run layout rules on a plot spec")
    p.add_argument("spec", help="plot-spec JSON path")
    _add_common(p, "json")
    p.set_defaults(func=cmd_check_figure)

    p = subs.add_parser("eval", help="run a benchmark suite")
    p.add_argument("suite", choices=("index", "figure", "e2e"))
    p.add_argument("dir", help="suite directory")
    _add_common(p, "kb", "registry", "reasoner", "json", "out")
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("gen-data", help="write analytic GRD1 test fields")
    p.add_argument("kind", help="one of: " + ", ".join(ANALYTIC_KINDS))
    _add_common(p, "json", "out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="generator parameter (JSON value); repeatable")
    p.set_defaults(func=cmd_gen_data)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _note(f"usage error: {exc}")
        return EXIT_USAGE
    except SystemExit as exc:          # argparse --help path
        return 0 if exc.code in (0, None) else EXIT_USAGE
    except Exception as exc:
        _note(f"error: {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
