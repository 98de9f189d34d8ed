"""Diagnostic guideline knowledge base and tool-doc retrieval.

Two kinds of records.  Guideline entries say which index calculations and
chart templates bear on a given event type, tagged with the mechanism
category they probe (dynamics, thermodynamics, moisture).  Tool docs
describe the computational tools themselves and are retrieved by keyword
with a small tf-idf ranker.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources as importlib_resources
from typing import Any, Iterable, Mapping, Sequence

from .anomaly import EventType

KB_SCHEMA = "guideline-kb/1"
CATEGORY_ORDER = ("dynamics", "thermodynamics", "moisture")
MODALITIES = ("Index", "Figure")


class KBError(ValueError):
    pass


@dataclass(frozen=True)
class GuidelineEntry:
    entry_id: str
    category: str
    modality: str
    applicable: tuple[EventType, ...]
    guidance: str
    index_ids: tuple[str, ...] = ()
    template_id: str = ""

    def as_mapping(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "entry_id": self.entry_id, "category": self.category,
            "modality": self.modality,
            "applicable": [e.value for e in self.applicable],
            "guidance": self.guidance,
        }
        if self.modality == "Index":
            doc["index_ids"] = list(self.index_ids)
        else:
            doc["template_id"] = self.template_id
        return doc


@dataclass(frozen=True)
class ToolDocEntry:
    doc_id: str
    name: str
    required_inputs: tuple[str, ...]
    output_definition: str
    usage: str

    def token_bag(self) -> Counter:
        text = " ".join((self.name, *self.required_inputs,
                         self.output_definition, self.usage))
        return Counter(tokenize(text))


@dataclass(frozen=True)
class KB:
    guidelines: tuple[GuidelineEntry, ...]
    tool_docs: tuple[ToolDocEntry, ...]


def tokenize(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def _parse_guideline(item: Mapping[str, Any]) -> GuidelineEntry:
    entry_id = item.get("entry_id", "")
    if not entry_id:
        raise KBError("guideline entry without an entry_id")
    category = item.get("category")
    if category not in CATEGORY_ORDER:
        raise KBError(f"{entry_id}: category {category!r} not in {CATEGORY_ORDER}")
    modality = item.get("modality")
    if modality not in MODALITIES:
        raise KBError(f"{entry_id}: modality {modality!r} not in {MODALITIES}")
    raw = item.get("applicable") or ()
    try:
        applicable = tuple(EventType(v) for v in raw)
    except ValueError as exc:
        raise KBError(f"{entry_id}: {exc}")
    if not applicable:
        raise KBError(f"{entry_id}: empty applicability list")
    if len(set(applicable)) != len(applicable):
        raise KBError(f"{entry_id}: duplicate event types")
    index_ids = tuple(item.get("index_ids") or ())
    template_id = item.get("template_id", "")
    if modality == "Index":
        if not index_ids or template_id:
            raise KBError(f"{entry_id}: Index entries carry index_ids only")
    else:
        if not template_id or index_ids:
            raise KBError(f"{entry_id}: Figure entries carry a template_id only")
    return GuidelineEntry(entry_id=entry_id, category=category, modality=modality,
                          applicable=applicable, guidance=item.get("guidance", ""),
                          index_ids=index_ids, template_id=template_id)


def _parse_tool_doc(item: Mapping[str, Any]) -> ToolDocEntry:
    doc_id = item.get("doc_id", "")
    if not doc_id:
        raise KBError("tool doc without a doc_id")
    doc = ToolDocEntry(doc_id=doc_id, name=item.get("name", ""),
                       required_inputs=tuple(item.get("required_inputs") or ()),
                       output_definition=item.get("output_definition", ""),
                       usage=item.get("usage", ""))
    if not doc.name:
        raise KBError(f"{doc_id}: tool doc needs a name")
    if not doc.token_bag():
        raise KBError(f"{doc_id}: tool doc has no searchable text")
    return doc


def load_kb(path=None, *, registry_ids: Iterable[str] | None = None,
            template_ids: Iterable[str] | None = None) -> KB:
    """Load and validate a KB document; default is the packaged seed.

    When registry_ids or template_ids are given, guideline payloads must
    point at known indices and chart templates.
    """
    if path is None:
        text = (importlib_resources.files("wxdiag") / "resources" /
                "seed_kb.json").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    if doc.get("schema") != KB_SCHEMA:
        raise KBError(f"unsupported KB schema {doc.get('schema')!r}")
    guidelines = tuple(_parse_guideline(item) for item in doc.get("guidelines", ()))
    tool_docs = tuple(_parse_tool_doc(item) for item in doc.get("tool_docs", ()))
    seen: set[str] = set()
    for entry in guidelines:
        if entry.entry_id in seen:
            raise KBError(f"duplicate entry_id {entry.entry_id!r}")
        seen.add(entry.entry_id)
    seen.clear()
    for tool in tool_docs:
        if tool.doc_id in seen:
            raise KBError(f"duplicate doc_id {tool.doc_id!r}")
        seen.add(tool.doc_id)
    if registry_ids is not None:
        known = set(registry_ids)
        for entry in guidelines:
            for index_id in entry.index_ids:
                if index_id not in known:
                    raise KBError(f"{entry.entry_id}: unknown index {index_id!r}")
    if template_ids is not None:
        known = set(template_ids)
        for entry in guidelines:
            if entry.template_id and entry.template_id not in known:
                raise KBError(f"{entry.entry_id}: unknown template "
                              f"{entry.template_id!r}")
    return KB(guidelines=guidelines, tool_docs=tool_docs)


_DEFAULT_KB: KB | None = None


def default_kb() -> KB:
    """Packaged seed KB, validated against the index registry and templates."""
    global _DEFAULT_KB
    if _DEFAULT_KB is None:
        from .indices import registry
        from .plotspec import templates
        _DEFAULT_KB = load_kb(registry_ids=registry().keys(),
                              template_ids=templates().keys())
    return _DEFAULT_KB


def match_applicable(kb: KB, event: EventType, *, modality: str | None = None,
                     category: str | None = None) -> list[GuidelineEntry]:
    """Entries applicable to the event, optionally filtered, sorted by id."""
    hits = [e for e in kb.guidelines
            if event in e.applicable
            and (modality is None or e.modality == modality)
            and (category is None or e.category == category)]
    return sorted(hits, key=lambda e: e.entry_id)


def coverage_dimensions(entries: Iterable[GuidelineEntry]) -> frozenset[str]:
    return frozenset(e.category for e in entries)


def coverage_problems(kb: KB, min_per_modality: int = 3) -> list[str]:
    """Seed-content lint: every event needs depth and category breadth."""
    problems = []
    for event in EventType:
        for modality in MODALITIES:
            entries = match_applicable(kb, event, modality=modality)
            if len(entries) < min_per_modality:
                problems.append(f"{event.value}/{modality}: only {len(entries)} "
                                f"entries, need {min_per_modality}")
            missing = set(CATEGORY_ORDER) - coverage_dimensions(entries)
            if missing:
                problems.append(f"{event.value}/{modality}: no entries for "
                                f"{sorted(missing)}")
    return problems


def retrieve_tool_docs(kb: KB, query: str | Sequence[str],
                       k: int = 5) -> list[tuple[ToolDocEntry, float]]:
    """Top-k tool docs by tf-idf against the query terms.

    idf(t) = ln(N / df(t)); terms not in the corpus contribute nothing and
    zero-score docs are dropped.  Ties break on doc_id ascending.
    """
    if isinstance(query, str):
        terms = tokenize(query)
    else:
        terms = [t for chunk in query for t in tokenize(chunk)]
    terms = sorted(set(terms))
    if not terms or not kb.tool_docs:
        return []
    bags = {doc.doc_id: doc.token_bag() for doc in kb.tool_docs}
    n_docs = len(kb.tool_docs)
    idf = {}
    for term in terms:
        df = sum(1 for bag in bags.values() if term in bag)
        if df:
            idf[term] = math.log(n_docs / df)
    scored = []
    for doc in kb.tool_docs:
        bag = bags[doc.doc_id]
        score = sum(bag[t] * w for t, w in idf.items() if t in bag)
        if score > 0:
            scored.append((doc, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0].doc_id))
    return scored[:k]
