"""Case-directory data access: fields, soundings, climatology samples.

A case directory is self-contained: a manifest.json names every artifact,
fields live in the binary grid container, soundings and climatology samples
in JSON.  The store is the only thing agents are allowed to read data
through, which keeps transcripts honest about what was fetched.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import spherical, thermo
from .grid import GridField, read_grd, write_grd
from .render import parse_field_ref
from .thermo import Sounding

STORE_SCHEMA = "case-store/1"


class StoreError(ValueError):
    pass


def _safe_name(name: str) -> str:
    slug = re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower() or "item"
    digest = hashlib.sha1(name.encode("utf-8")).hexdigest()[:6]
    return f"{slug}-{digest}"


@dataclass
class CaseStore:
    root: Path
    manifest: Mapping[str, Any]
    _fields: dict[str, GridField] = field(default_factory=dict)
    _soundings: dict[str, Sounding] = field(default_factory=dict)
    _climatology: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def open(cls, root) -> "CaseStore":
        root = Path(root)
        manifest_path = root / "manifest.json"
        if not manifest_path.is_file():
            raise StoreError(f"no manifest.json under {root}")
        manifest = json.loads(manifest_path.read_text("utf-8"))
        if manifest.get("schema") != STORE_SCHEMA:
            raise StoreError(f"unsupported store schema {manifest.get('schema')!r}")
        return cls(root=root, manifest=manifest)

    @property
    def meta(self) -> dict[str, Any]:
        return dict(self.manifest.get("meta", {}))

    def field_names(self) -> list[str]:
        return sorted(self.manifest.get("fields", {}))

    def sounding_names(self) -> list[str]:
        return sorted(self.manifest.get("soundings", {}))

    def climatology_names(self) -> list[str]:
        return sorted(self.manifest.get("climatology", {}))

    def has_field(self, name: str) -> bool:
        return name in self.manifest.get("fields", {})

    def _relpath(self, section: str, name: str) -> Path:
        table = self.manifest.get(section, {})
        if name not in table:
            raise StoreError(f"store has no {section[:-1]} named {name!r} "
                             f"(has {sorted(table)})")
        return self.root / table[name]

    def fetch_field(self, name: str) -> GridField:
        if name not in self._fields:
            self._fields[name] = read_grd(self._relpath("fields", name))
        return self._fields[name]

    def fetch_sounding(self, name: str) -> Sounding:
        if name not in self._soundings:
            doc = json.loads(self._relpath("soundings", name).read_text("utf-8"))
            self._soundings[name] = Sounding.from_mapping(doc)
        return self._soundings[name]

    def fetch_climatology(self, name: str) -> np.ndarray:
        if name not in self._climatology:
            doc = json.loads(self._relpath("climatology", name).read_text("utf-8"))
            sample = np.asarray(doc, dtype=np.float64)
            if sample.ndim != 1 or sample.size == 0:
                raise StoreError(f"climatology {name!r} must be a flat list")
            self._climatology[name] = sample
        return self._climatology[name]


def write_store(root, *, fields: Mapping[str, GridField] | None = None,
                soundings: Mapping[str, Sounding] | None = None,
                climatology: Mapping[str, Sequence[float]] | None = None,
                meta: Mapping[str, Any] | None = None) -> CaseStore:
    """Lay out a case directory and return a store opened on it."""
    root = Path(root)
    manifest: dict[str, Any] = {"schema": STORE_SCHEMA, "fields": {},
                                "soundings": {}, "climatology": {},
                                "meta": dict(meta or {})}
    for name, grid_field in (fields or {}).items():
        rel = f"fields/{_safe_name(name)}.grd"
        write_grd(grid_field, root / rel)
        manifest["fields"][name] = rel
    for name, sounding in (soundings or {}).items():
        rel = f"soundings/{_safe_name(name)}.json"
        (root / "soundings").mkdir(parents=True, exist_ok=True)
        (root / rel).write_text(json.dumps(sounding.as_mapping(), indent=1), "utf-8")
        manifest["soundings"][name] = rel
    for name, sample in (climatology or {}).items():
        rel = f"climatology/{_safe_name(name)}.json"
        (root / "climatology").mkdir(parents=True, exist_ok=True)
        (root / rel).write_text(json.dumps([float(v) for v in sample]), "utf-8")
        manifest["climatology"][name] = rel
    root.mkdir(parents=True, exist_ok=True)
    (root / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True),
                                        "utf-8")
    return CaseStore(root=root, manifest=manifest)


class RemoteFetcherStub:
    """Placeholder for a live data service; always refuses.

    Kept so the wiring point exists: swap this for a real fetcher and the
    rest of the pipeline does not change.
    """

    def __init__(self, endpoint: str = "remote archive"):
        self.endpoint = endpoint

    def fetch_field(self, name: str) -> GridField:
        raise NotImplementedError(
            f"no live access to {self.endpoint}; "
            "point the pipeline at a case directory instead")

    fetch_sounding = fetch_field
    fetch_climatology = fetch_field


# ---------------------------------------------------------------------------
# derived field references

DERIVED_BASES: dict[str, tuple[str, ...]] = {
    "wspd": ("u", "v"),
    "wspd10": ("u10", "v10"),
    "mfd": ("q", "u", "v"),
    "tadv": ("t", "u", "v"),
    "theta_e": ("t", "td"),
}


def base_vars_for_ref(store: CaseStore, ref: str) -> tuple[str, ...]:
    """Which stored variables a layer reference ultimately needs."""
    var, _ = parse_field_ref(ref)
    if store.has_field(var) or var not in DERIVED_BASES:
        return (var,)
    return DERIVED_BASES[var]


def resolve_field_ref(store: CaseStore, ref: str) -> GridField:
    """Fetch a reference, deriving wind speed, moisture flux divergence,
    temperature advection or theta-e when the raw variable is absent."""
    var, _ = parse_field_ref(ref)
    if store.has_field(var):
        return store.fetch_field(var)
    if var not in DERIVED_BASES:
        raise StoreError(f"cannot resolve field reference {ref!r}")
    try:
        if var in ("wspd", "wspd10"):
            u_name, v_name = DERIVED_BASES[var]
            out = spherical.wind_speed(store.fetch_field(u_name),
                                       store.fetch_field(v_name))
        elif var == "mfd":
            out = spherical.moisture_flux_divergence(store.fetch_field("q"),
                                                     store.fetch_field("u"),
                                                     store.fetch_field("v"))
        elif var == "tadv":
            out = spherical.advection(store.fetch_field("t"),
                                      store.fetch_field("u"),
                                      store.fetch_field("v"))
        else:  # theta_e
            t = store.fetch_field("t")
            td = store.fetch_field("td")
            p = np.broadcast_to(np.asarray(t.levels)[None, :, None, None], t.shape)
            values = thermo.theta_e(p, t.values, td.values)
            out = t.with_values(np.asarray(values, dtype=np.float64), units="K")
    except StoreError:
        raise
    except Exception as exc:
        raise StoreError(f"cannot derive {var!r} for {ref!r}: {exc}") from exc
    return out.with_values(out.values, name=var)
