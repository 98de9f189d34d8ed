"""Declarative chart specifications and the shipped template catalog.

A PlotSpec is plain data: layers (shading under contours under barbs),
title block, gridlines, colorbar, and export settings.  The style checker
inspects these specs and the renderer consumes them, so both sides agree
on one schema and specs survive a JSON round trip bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources as importlib_resources
from typing import Any, Mapping, Sequence

PLOTSPEC_SCHEMA = "plotspec/1"
TEMPLATES_SCHEMA = "plot-templates/1"


class PlotSpecError(ValueError):
    pass


@dataclass(frozen=True)
class ShadingLayer:
    field_ref: str
    colormap: str = "blues"
    label: str = ""
    vmin: float | None = None
    vmax: float | None = None


@dataclass(frozen=True)
class ContourLayer:
    field_ref: str
    interval: float | None = None
    levels: tuple[float, ...] | None = None
    smoothing_sigma: float = 2.0
    # set when a small domain cannot stand full smoothing; relaxes the style floor
    allow_reduced_smoothing: bool = False
    linewidth: float = 1.0
    color: str = "#333333"

    def __post_init__(self):
        if (self.interval is None) == (self.levels is None):
            raise PlotSpecError("contour layer needs exactly one of interval, levels")
        if self.levels is not None:
            object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))


@dataclass(frozen=True)
class BarbLayer:
    u_ref: str
    v_ref: str
    step: int = 4
    linewidth: float = 0.6
    length: float = 5.5
    smoothing_sigma: float = 0.0


Layer = ShadingLayer | ContourLayer | BarbLayer
_LAYER_RANK = {ShadingLayer: 0, ContourLayer: 1, BarbLayer: 2}
_LAYER_KIND = {ShadingLayer: "shading", ContourLayer: "contour", BarbLayer: "barbs"}
_KIND_LAYER = {v: k for k, v in _LAYER_KIND.items()}


@dataclass(frozen=True)
class TitleSpec:
    text: str
    size: float = 16.0
    subtitle: str = ""
    subtitle_size: float = 12.0


@dataclass(frozen=True)
class GridlineSpec:
    show: bool = True
    linewidth: float = 0.6
    alpha: float = 0.35


@dataclass(frozen=True)
class ColorbarSpec:
    present: bool = True
    label: str = ""


@dataclass(frozen=True)
class ExportSpec:
    scale: float = 250.0


@dataclass(frozen=True)
class PlotSpec:
    template_id: str
    title: TitleSpec
    layers: tuple[Layer, ...]
    gridlines: GridlineSpec = field(default_factory=GridlineSpec)
    colorbar: ColorbarSpec = field(default_factory=ColorbarSpec)
    export: ExportSpec = field(default_factory=ExportSpec)

    def __post_init__(self):
        if not self.layers:
            raise PlotSpecError("a plot spec needs at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        ranks = [_LAYER_RANK[type(l)] for l in self.layers]
        if ranks != sorted(ranks):
            raise PlotSpecError("layer order must be shading, then contours, then barbs")

    def field_refs(self) -> list[str]:
        refs = []
        for layer in self.layers:
            if isinstance(layer, BarbLayer):
                refs.extend([layer.u_ref, layer.v_ref])
            else:
                refs.append(layer.field_ref)
        return refs

    def as_mapping(self) -> dict[str, Any]:
        layers = []
        for layer in self.layers:
            item = {"kind": _LAYER_KIND[type(layer)]}
            for name, value in vars(layer).items():
                item[name] = list(value) if isinstance(value, tuple) else value
            layers.append(item)
        return {
            "schema": PLOTSPEC_SCHEMA,
            "template_id": self.template_id,
            "title": dict(vars(self.title)),
            "layers": layers,
            "gridlines": dict(vars(self.gridlines)),
            "colorbar": dict(vars(self.colorbar)),
            "export": dict(vars(self.export)),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_mapping(), indent=2, sort_keys=False)

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]) -> "PlotSpec":
        if doc.get("schema") != PLOTSPEC_SCHEMA:
            raise PlotSpecError(f"unsupported plot spec schema {doc.get('schema')!r}")
        layers = []
        for item in doc["layers"]:
            kind = item.get("kind")
            if kind not in _KIND_LAYER:
                raise PlotSpecError(f"unknown layer kind {kind!r}")
            kwargs = {k: v for k, v in item.items() if k != "kind"}
            layers.append(_KIND_LAYER[kind](**kwargs))
        return cls(
            template_id=doc["template_id"],
            title=TitleSpec(**doc["title"]),
            layers=tuple(layers),
            gridlines=GridlineSpec(**doc.get("gridlines", {})),
            colorbar=ColorbarSpec(**doc.get("colorbar", {})),
            export=ExportSpec(**doc.get("export", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "PlotSpec":
        return cls.from_mapping(json.loads(text))


def patch_spec(spec: PlotSpec, path: str, value: Any) -> PlotSpec:
    """Return a copy of the spec with one dotted-path attribute replaced.

    Paths look like "layers[1].interval", "colorbar.label", "title.size".
    """
    head, _, rest = path.partition(".")
    if head.startswith("layers["):
        if not head.endswith("]"):
            raise PlotSpecError(f"bad patch path {path!r}")
        idx = int(head[len("layers["):-1])
        if not 0 <= idx < len(spec.layers):
            raise PlotSpecError(f"patch path {path!r} is out of range")
        if not rest:
            raise PlotSpecError(f"patch path {path!r} must name a layer attribute")
        layer = spec.layers[idx]
        if not hasattr(layer, rest):
            raise PlotSpecError(f"layer has no attribute {rest!r}")
        new_layer = replace(layer, **{rest: value})
        layers = spec.layers[:idx] + (new_layer,) + spec.layers[idx + 1:]
        return replace(spec, layers=layers)
    if not hasattr(spec, head):
        raise PlotSpecError(f"plot spec has no attribute {head!r}")
    if not rest:
        return replace(spec, **{head: value})
    section = getattr(spec, head)
    if not hasattr(section, rest):
        raise PlotSpecError(f"{head} has no attribute {rest!r}")
    return replace(spec, **{head: replace(section, **{rest: value})})


# ---------------------------------------------------------------------------
# template catalog

_TEMPLATE_CACHE: dict[str, dict[str, Any]] | None = None


def load_templates(path=None) -> dict[str, dict[str, Any]]:
    """Template catalog keyed by template_id; default loads the packaged one."""
    if path is None:
        text = (importlib_resources.files("wxdiag") / "resources" /
                "templates.json").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    if doc.get("schema") != TEMPLATES_SCHEMA:
        raise PlotSpecError(f"unsupported template schema {doc.get('schema')!r}")
    catalog: dict[str, dict[str, Any]] = {}
    for entry in doc["templates"]:
        tid = entry["template_id"]
        if tid in catalog:
            raise PlotSpecError(f"duplicate template id {tid!r}")
        if not entry.get("layers"):
            raise PlotSpecError(f"template {tid!r} has no layers")
        catalog[tid] = entry
    return catalog


def templates() -> dict[str, dict[str, Any]]:
    global _TEMPLATE_CACHE
    if _TEMPLATE_CACHE is None:
        _TEMPLATE_CACHE = load_templates()
    return _TEMPLATE_CACHE


def build_plot_spec(template_id: str, *, title: str | None = None,
                    subtitle: str = "", catalog: Mapping[str, Any] | None = None,
                    overrides: Sequence[tuple[str, Any]] = ()) -> PlotSpec:
    """Instantiate a catalog template; overrides are (patch-path, value) pairs."""
    catalog = templates() if catalog is None else catalog
    if template_id not in catalog:
        raise PlotSpecError(f"unknown template {template_id!r} "
                            f"(one of {sorted(catalog)})")
    entry = catalog[template_id]
    layers = []
    for item in entry["layers"]:
        kind = item["kind"]
        kwargs = {k: v for k, v in item.items() if k != "kind"}
        layers.append(_KIND_LAYER[kind](**kwargs))
    shading_label = next((l.label or l.field_ref for l in layers
                          if isinstance(l, ShadingLayer)), "")
    spec = PlotSpec(
        template_id=template_id,
        title=TitleSpec(text=title if title is not None else entry["title"],
                        subtitle=subtitle),
        layers=tuple(layers),
        colorbar=ColorbarSpec(present=any(isinstance(l, ShadingLayer) for l in layers),
                              label=shading_label),
    )
    for path, value in overrides:
        spec = patch_spec(spec, path, value)
    return spec
