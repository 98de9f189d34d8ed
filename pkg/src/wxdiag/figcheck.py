"""Rule-based review of plot specs before rendering.

Ten numbered rules; "error" findings block acceptance outright, "style"
findings are tolerated up to two per figure.  Every finding carries patch
suggestions so a failed check can be repaired mechanically and re-checked.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable

from .plotspec import (BarbLayer, ContourLayer, PlotSpec, PlotSpecError,
                       ShadingLayer, patch_spec)
from .render import parse_field_ref

MAX_STYLE_FINDINGS = 2
MSLP_VARS = frozenset({"msl", "mslp", "slp", "prmsl"})
HEIGHT_VARS = frozenset({"z", "hgt", "gh"})

SIGMA_RANGE = (1.5, 3.0)
SIGMA_REDUCED_FLOOR = 1.0
MSLP_INTERVALS = (2.5, 4.0)
Z500_INTERVAL = 40.0
CONTOUR_LW_RANGE = (0.8, 1.2)
BARB_STEP_RANGE = (3, 6)
BARB_LW_RANGE = (0.5, 0.7)
BARB_LENGTH_RANGE = (5.0, 6.0)
GRID_LW_RANGE = (0.5, 0.8)
GRID_ALPHA_RANGE = (0.3, 0.5)
EXPORT_SCALE_RANGE = (200.0, 300.0)
TITLE_SIZE_RANGE = (14.0, 18.0)
SUBTITLE_SIZE_RANGE = (11.0, 13.0)
COLORBAR_LABEL_MAX = 40


@dataclass(frozen=True)
class CheckFinding:
    rule_id: str
    severity: str               # "error" or "style"
    message: str
    patches: tuple[tuple[str, Any], ...] = ()

    def as_mapping(self) -> dict[str, Any]:
        return {"rule_id": self.rule_id, "severity": self.severity,
                "message": self.message,
                "patches": [[p, v] for p, v in self.patches]}

    @classmethod
    def from_mapping(cls, doc) -> "CheckFinding":
        return cls(rule_id=doc["rule_id"], severity=doc["severity"],
                   message=doc.get("message", ""),
                   patches=tuple((p, v) for p, v in doc.get("patches", ())))


@dataclass(frozen=True)
class CheckReport:
    findings: tuple[CheckFinding, ...]

    @property
    def error_count(self) -> int:
        return sum(1 for f in self.findings if f.severity == "error")

    @property
    def style_count(self) -> int:
        return sum(1 for f in self.findings if f.severity == "style")

    @property
    def passed(self) -> bool:
        return self.error_count == 0 and self.style_count <= MAX_STYLE_FINDINGS

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "revise"

    def rule_ids(self) -> list[str]:
        return [f.rule_id for f in self.findings]

    def as_mapping(self) -> dict[str, Any]:
        return {"verdict": self.verdict, "error_count": self.error_count,
                "style_count": self.style_count,
                "findings": [f.as_mapping() for f in self.findings]}

    def to_json(self) -> str:
        return json.dumps(self.as_mapping(), indent=2)

    @classmethod
    def from_mapping(cls, doc) -> "CheckReport":
        return cls(tuple(CheckFinding.from_mapping(f)
                         for f in doc.get("findings", ())))


def _in(value: float, bounds: tuple[float, float]) -> bool:
    return bounds[0] <= value <= bounds[1]


def check_plot(spec: PlotSpec) -> CheckReport:
    findings: list[CheckFinding] = []
    add = findings.append

    for i, layer in enumerate(spec.layers):
        at = f"layers[{i}]"
        if isinstance(layer, ContourLayer):
            floor = SIGMA_REDUCED_FLOOR if layer.allow_reduced_smoothing else SIGMA_RANGE[0]
            if not floor <= layer.smoothing_sigma <= SIGMA_RANGE[1]:
                add(CheckFinding("R1", "style",
                                 f"{at}: contour smoothing sigma {layer.smoothing_sigma:g} "
                                 f"outside [{floor:g}, {SIGMA_RANGE[1]:g}]",
                                 ((f"{at}.smoothing_sigma", 2.0),)))
            var, level = parse_field_ref(layer.field_ref)
            if var.lower() in MSLP_VARS and layer.interval is not None \
                    and layer.interval not in MSLP_INTERVALS:
                add(CheckFinding("R3", "error",
                                 f"{at}: MSLP contour interval {layer.interval:g} hPa; "
                                 f"use one of {MSLP_INTERVALS}",
                                 ((f"{at}.interval", 4.0),)))
            if var.lower() in HEIGHT_VARS and level == 500.0 \
                    and layer.interval is not None and layer.interval != Z500_INTERVAL:
                add(CheckFinding("R4", "error",
                                 f"{at}: 500-hPa height interval {layer.interval:g} gpm; "
                                 f"must be {Z500_INTERVAL:g}",
                                 ((f"{at}.interval", Z500_INTERVAL),)))
            if not _in(layer.linewidth, CONTOUR_LW_RANGE):
                add(CheckFinding("R5", "style",
                                 f"{at}: contour linewidth {layer.linewidth:g} outside "
                                 f"[{CONTOUR_LW_RANGE[0]:g}, {CONTOUR_LW_RANGE[1]:g}]",
                                 ((f"{at}.linewidth", 1.0),)))
        elif isinstance(layer, BarbLayer):
            if layer.smoothing_sigma > 0:
                add(CheckFinding("R2", "error",
                                 f"{at}: wind barbs must show unsmoothed winds "
                                 f"(sigma {layer.smoothing_sigma:g})",
                                 ((f"{at}.smoothing_sigma", 0.0),)))
            if layer.step != int(layer.step) or not _in(layer.step, BARB_STEP_RANGE):
                add(CheckFinding("R6", "style",
                                 f"{at}: barb thinning step {layer.step} outside "
                                 f"{BARB_STEP_RANGE}",
                                 ((f"{at}.step", 4),)))
            if not _in(layer.linewidth, BARB_LW_RANGE):
                add(CheckFinding("R6", "style",
                                 f"{at}: barb linewidth {layer.linewidth:g} outside "
                                 f"[{BARB_LW_RANGE[0]:g}, {BARB_LW_RANGE[1]:g}]",
                                 ((f"{at}.linewidth", 0.6),)))
            if not _in(layer.length, BARB_LENGTH_RANGE):
                add(CheckFinding("R6", "style",
                                 f"{at}: barb length {layer.length:g} outside "
                                 f"[{BARB_LENGTH_RANGE[0]:g}, {BARB_LENGTH_RANGE[1]:g}]",
                                 ((f"{at}.length", 5.5),)))

    if spec.gridlines.show:
        if not _in(spec.gridlines.linewidth, GRID_LW_RANGE):
            add(CheckFinding("R7", "style",
                             f"gridline width {spec.gridlines.linewidth:g} outside "
                             f"[{GRID_LW_RANGE[0]:g}, {GRID_LW_RANGE[1]:g}]",
                             (("gridlines.linewidth", 0.6),)))
        if not _in(spec.gridlines.alpha, GRID_ALPHA_RANGE):
            add(CheckFinding("R7", "style",
                             f"gridline alpha {spec.gridlines.alpha:g} outside "
                             f"[{GRID_ALPHA_RANGE[0]:g}, {GRID_ALPHA_RANGE[1]:g}]",
                             (("gridlines.alpha", 0.35),)))

    if not _in(spec.export.scale, EXPORT_SCALE_RANGE):
        add(CheckFinding("R8", "style",
                         f"export scale {spec.export.scale:g} outside "
                         f"[{EXPORT_SCALE_RANGE[0]:g}, {EXPORT_SCALE_RANGE[1]:g}]",
                         (("export.scale", 300.0),)))

    shading = [l for l in spec.layers if isinstance(l, ShadingLayer)]
    if shading:
        label = spec.colorbar.label
        if not spec.colorbar.present or not label or len(label) > COLORBAR_LABEL_MAX:
            fallback = (shading[0].label or shading[0].field_ref)[:COLORBAR_LABEL_MAX]
            patches = [("colorbar.present", True)]
            if not label or len(label) > COLORBAR_LABEL_MAX:
                patches.append(("colorbar.label", fallback))
            add(CheckFinding("R9", "error",
                             "shaded figures need a colorbar with a short label "
                             f"(at most {COLORBAR_LABEL_MAX} characters)",
                             tuple(patches)))

    title = spec.title
    if not _in(title.size, TITLE_SIZE_RANGE):
        add(CheckFinding("R10", "style",
                         f"title size {title.size:g} outside "
                         f"[{TITLE_SIZE_RANGE[0]:g}, {TITLE_SIZE_RANGE[1]:g}]",
                         (("title.size", 16.0),)))
    if title.subtitle:
        if not _in(title.subtitle_size, SUBTITLE_SIZE_RANGE):
            add(CheckFinding("R10", "style",
                             f"subtitle size {title.subtitle_size:g} outside "
                             f"[{SUBTITLE_SIZE_RANGE[0]:g}, {SUBTITLE_SIZE_RANGE[1]:g}]",
                             (("title.subtitle_size", 12.0),)))
        elif title.size <= title.subtitle_size:
            add(CheckFinding("R10", "style",
                             "title must be larger than the subtitle",
                             (("title.size", 16.0), ("title.subtitle_size", 12.0))))

    return CheckReport(tuple(findings))


def apply_suggestions(spec: PlotSpec, report: CheckReport) -> PlotSpec:
    """Apply every patch suggested by the report; conflicting patches fail."""
    seen: dict[str, Any] = {}
    for finding in report.findings:
        for path, value in finding.patches:
            if path in seen and seen[path] != value:
                raise PlotSpecError(
                    f"conflicting patches for {path!r}: {seen[path]!r} vs {value!r}")
            seen[path] = value
    for path, value in seen.items():
        spec = patch_spec(spec, path, value)
    return spec


def fix_until_clean(spec: PlotSpec, max_rounds: int = 3) -> tuple[PlotSpec, CheckReport, int]:
    """Check-and-repair loop; returns (spec, final report, rounds applied)."""
    rounds = 0
    report = check_plot(spec)
    while not report.passed and rounds < max_rounds:
        before = len(report.findings)
        spec = apply_suggestions(spec, report)
        rounds += 1
        report = check_plot(spec)
        if len(report.findings) >= before:
            break                       # a round must strictly shrink the list
    return spec, report, rounds
