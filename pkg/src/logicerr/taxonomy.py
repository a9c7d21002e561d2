"""The ten logical-error types, their program-flow groups, overlap graph and priority ordering.

Everything here is loaded from a JSON data file so that group placement and
overlap edges can be corrected without touching code.  The loaded
:class:`Taxonomy` is immutable and safe to share between threads.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable

from logicerr.errors import InvalidArgument, TaxonomyError

DEFAULT_TAXONOMY_PATH = Path(__file__).parent / "data" / "taxonomy.json"

TYPE_IDS = tuple("ABCDEFGHIJ")
GLOBAL_TYPE = "J"


class StructuralGroup(enum.Enum):
    INPUT = "Input"
    PROCESS_DECL_INIT = "ProcessDeclInit"
    PROCESS_REMAINING = "ProcessRemaining"
    OUTPUT = "Output"
    GLOBAL = "Global"

    @property
    def sequence_position(self) -> int | None:
        return _POSITIONS.get(self)


_POSITIONS = {
    StructuralGroup.INPUT: 1,
    StructuralGroup.PROCESS_DECL_INIT: 2,
    StructuralGroup.PROCESS_REMAINING: 3,
    StructuralGroup.OUTPUT: 4,
}


@dataclass(frozen=True)
class ErrorType:
    id: str
    name: str
    description: str
    occurrence_examples: tuple[str, ...]
    group: StructuralGroup
    rank: int

    @property
    def label(self) -> str:
        return f"({self.id}) {self.name}"


@dataclass(frozen=True)
class CoincidenceEdge:
    endpoints: frozenset[str]
    note: str

    def other(self, type_id: str) -> str:
        (rest,) = self.endpoints - {type_id}
        return rest


@dataclass(frozen=True)
class Dominant:
    maximal_set: frozenset[str]
    canonical: str | None


def check_type_id(type_id) -> str:
    if not isinstance(type_id, str) or type_id not in TYPE_IDS:
        raise InvalidArgument(f"unknown error type id {type_id!r}; expected one of A-J")
    return type_id


class Taxonomy:
    def __init__(self, types: Iterable[ErrorType], edges: Iterable[CoincidenceEdge]):
        self._types = {t.id: t for t in sorted(types, key=lambda t: t.id)}
        self.edges = tuple(edges)
        adjacency: dict[str, set[str]] = {t: set() for t in TYPE_IDS}
        for edge in self.edges:
            a, b = sorted(edge.endpoints)
            adjacency[a].add(b)
            adjacency[b].add(a)
        self._neighbors = {t: frozenset(n) for t, n in adjacency.items()}
        self._notes = {edge.endpoints: edge.note for edge in self.edges}

    @property
    def types(self) -> tuple[ErrorType, ...]:
        return tuple(self._types.values())

    def get(self, type_id: str) -> ErrorType:
        return self._types[check_type_id(type_id)]

    def rank(self, type_id: str) -> int:
        return self.get(type_id).rank

    def group_of(self, type_id: str) -> StructuralGroup:
        return self.get(type_id).group

    def coincidence_neighbors(self, type_id: str) -> frozenset[str]:
        return self._neighbors[check_type_id(type_id)]

    def overlap_note(self, a: str, b: str) -> str | None:
        return self._notes.get(frozenset((check_type_id(a), check_type_id(b))))

    def dominant(self, detected: Iterable[str]) -> Dominant:
        """Resolve a set of detected types to the highest-ranked member(s).

        Ties (only E and G in the default table) keep every tied member in
        ``maximal_set``; ``canonical`` picks the alphabetically first one.
        """
        detected = {check_type_id(t) for t in detected}
        if not detected:
            return Dominant(frozenset(), None)
        top = max(self.rank(t) for t in detected)
        maximal = frozenset(t for t in detected if self.rank(t) == top)
        return Dominant(maximal, min(maximal))

    def higher_ranked_neighbors(self, type_id: str) -> list[str]:
        """Overlapping types that take precedence over ``type_id``, highest first."""
        own = self.rank(type_id)
        higher = [n for n in self.coincidence_neighbors(type_id) if self.rank(n) > own]
        return sorted(higher, key=lambda n: (-self.rank(n), n))

    def ordering(self) -> list[list[str]]:
        """Types grouped into tiers of equal rank, highest tier first."""
        tiers: dict[int, list[str]] = {}
        for t in self.types:
            tiers.setdefault(t.rank, []).append(t.id)
        return [sorted(tiers[r]) for r in sorted(tiers, reverse=True)]

    def ordering_string(self) -> str:
        return " > ".join(" = ".join(f"({t})" for t in tier) for tier in self.ordering())


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise TaxonomyError(message)


def parse_taxonomy(doc: dict) -> Taxonomy:
    """Validate a decoded taxonomy document and build a :class:`Taxonomy`."""
    _require(isinstance(doc, dict), "taxonomy document must be an object")
    for key in ("types", "ranks", "groups", "edges"):
        _require(key in doc, f"taxonomy document is missing {key!r}")

    records = doc["types"]
    _require(isinstance(records, list) and len(records) == 10,
             f"taxonomy must define exactly ten types, got {len(records) if isinstance(records, list) else records!r}")
    ids = [r.get("id") for r in records]
    _require(sorted(ids) == list(TYPE_IDS), f"type ids must be A-J exactly once each, got {ids}")

    ranks = doc["ranks"]
    groups = doc["groups"]
    types = []
    for record in records:
        tid = record["id"]
        for field in ("name", "description"):
            _require(isinstance(record.get(field), str) and record[field].strip() != "",
                     f"type {tid}: missing or empty {field}")
        examples = record.get("occurrence_examples")
        _require(isinstance(examples, list) and examples and all(isinstance(e, str) for e in examples),
                 f"type {tid}: occurrence_examples must be a non-empty list of strings")
        _require(isinstance(ranks.get(tid), int), f"type {tid}: missing integer rank")
        try:
            group = StructuralGroup(groups.get(tid))
        except ValueError:
            raise TaxonomyError(f"type {tid}: unknown structural group {groups.get(tid)!r}") from None
        types.append(ErrorType(tid, record["name"], record["description"], tuple(examples), group, ranks[tid]))

    _require((StructuralGroup(groups[GLOBAL_TYPE]) is StructuralGroup.GLOBAL),
             "type J must be in the Global group")
    others_global = [t.id for t in types if t.group is StructuralGroup.GLOBAL and t.id != GLOBAL_TYPE]
    _require(not others_global, f"only J may be Global, got {others_global}")

    edges = []
    seen = set()
    for i, record in enumerate(doc["edges"]):
        ends = record.get("endpoints")
        _require(isinstance(ends, list) and len(ends) == 2, f"edge {i}: endpoints must be a pair")
        for e in ends:
            _require(e in TYPE_IDS, f"edge {i}: unknown endpoint {e!r}")
        _require(ends[0] != ends[1], f"edge {i}: endpoints must be distinct, got {ends}")
        key = frozenset(ends)
        _require(key not in seen, f"edge {i}: duplicate edge {sorted(key)}")
        seen.add(key)
        note = record.get("note", "")
        _require(isinstance(note, str) and note.strip() != "", f"edge {i}: missing note")
        edges.append(CoincidenceEdge(key, note))

    missing = [t for t in TYPE_IDS if t != GLOBAL_TYPE and frozenset((t, GLOBAL_TYPE)) not in seen]
    _require(not missing, f"J must overlap every other type; no edge J-{','.join(missing)}")
    return Taxonomy(types, edges)


def load_taxonomy(path: str | os.PathLike | None = None) -> Taxonomy:
    path = Path(path) if path is not None else DEFAULT_TAXONOMY_PATH
    if path == DEFAULT_TAXONOMY_PATH:
        return _default()
    return _load(path)


def _load(path: Path) -> Taxonomy:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise TaxonomyError(f"{path}: invalid JSON: {e}") from e
    except OSError as e:
        raise TaxonomyError(f"{path}: {e.strerror}") from e
    return parse_taxonomy(doc)


@lru_cache(maxsize=1)
def _default() -> Taxonomy:
    return _load(DEFAULT_TAXONOMY_PATH)


# convenience wrappers over the packaged taxonomy

def rank(type_id: str) -> int:
    return _default().rank(type_id)


def dominant(detected: Iterable[str]) -> Dominant:
    return _default().dominant(detected)


def coincidence_neighbors(type_id: str) -> frozenset[str]:
    return _default().coincidence_neighbors(type_id)


def group_of(type_id: str) -> StructuralGroup:
    return _default().group_of(type_id)
