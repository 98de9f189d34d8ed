"""wxdiag: extreme-weather diagnostics with a closed hypothesis-verify-replan loop."""

from .agents import (AgentRole, Message, MessageKind, ScriptedReasoner,
                     make_reasoner, messages_from_jsonl, messages_to_jsonl,
                     route_next)
from .anomaly import AnomalyReport, EventType, check_anomaly
from .diagnosis import (CycleRecord, DiagnosisOutcome, EvidenceItem,
                        LoopConfig, MemoryEntry, run_loop)
from .figcheck import (CheckFinding, CheckReport, apply_suggestions,
                       check_plot, fix_until_clean)
from .grid import GridField, GridSpec, gen_analytic, read_grd, write_grd
from .harness import (BenchConfig, DeterministicSystem, RelErr, data_score,
                      figure_quality_score, format_summary, hypothesis_score,
                      index_gate, index_score, judge_report, load_suite,
                      relative_error, run_benchmark, visualization_score)
from .indices import IndexResult, compute_index, load_registry, registry
from .kb import default_kb, load_kb, match_applicable
from .plotspec import PlotSpec, build_plot_spec, patch_spec, templates
from .render import render_svg
from .store import CaseStore, write_store
from .thermo import Sounding, cape_jkg, isotherm_height_m, precipitable_water_mm

__version__ = "0.1.0"

__all__ = [
    "AgentRole", "AnomalyReport", "BenchConfig", "CaseStore", "CheckFinding",
    "CheckReport", "CycleRecord", "DeterministicSystem", "DiagnosisOutcome",
    "EventType", "EvidenceItem", "GridField", "GridSpec", "IndexResult",
    "LoopConfig", "MemoryEntry", "Message", "MessageKind", "PlotSpec",
    "RelErr", "ScriptedReasoner", "Sounding", "apply_suggestions",
    "build_plot_spec",
    "cape_jkg", "check_anomaly", "check_plot", "compute_index", "data_score",
    "default_kb", "figure_quality_score", "fix_until_clean", "format_summary",
    "gen_analytic", "hypothesis_score", "index_gate", "index_score",
    "isotherm_height_m", "judge_report", "load_kb", "load_registry",
    "load_suite", "make_reasoner", "match_applicable", "messages_from_jsonl",
    "messages_to_jsonl", "patch_spec", "precipitable_water_mm", "read_grd",
    "registry", "relative_error", "render_svg", "route_next", "run_benchmark",
    "run_loop", "templates", "visualization_score", "write_grd", "write_store",
]
