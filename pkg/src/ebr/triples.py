"""Knowledge-graph view of a KB: indexed (head, relation, tail) triples.

Only four axiom shapes become triples::

    A(a)        -> (a, rdf:type, A)
    r(a, b)     -> (a, r, b)
    A ⊑ B       -> (A, rdfs:subClassOf, B)       (both sides atomic)
    r ⊑ s       -> (r, rdfs:subPropertyOf, s)

Everything else (complex GCIs, complex class assertions, Tra/Fun) is left to
the symbolic oracle.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .dl import AtomicConcept, ClassAssertion, KnowledgeBase, PropertyAssertion, SubClassOf, SubPropertyOf

RDF_TYPE = "rdf:type"
RDFS_SUBCLASSOF = "rdfs:subClassOf"
RDFS_SUBPROPERTYOF = "rdfs:subPropertyOf"

_RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
_RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
STANDARD_IRIS = {
    RDF_TYPE: _RDF_NS + "type",
    RDFS_SUBCLASSOF: _RDFS_NS + "subClassOf",
    RDFS_SUBPROPERTYOF: _RDFS_NS + "subPropertyOf",
}
_IRI_TO_STANDARD = {v: k for k, v in STANDARD_IRIS.items()}


class NTriplesError(ValueError):
    """Malformed N-Triples input."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


@dataclass(frozen=True, eq=False)
class TripleGraph:
    """De-duplicated triples over lexicographically ordered vocabularies.

    ``triples`` is an ``(n, 3)`` int64 array of (head, relation, tail) ids,
    sorted row-wise.
    """

    entities: tuple[str, ...]
    relations: tuple[str, ...]
    triples: np.ndarray
    _by_head_rel: dict = field(init=False, repr=False)
    _by_rel_tail: dict = field(init=False, repr=False)
    _keys: frozenset = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)
        t.setflags(write=False)
        object.__setattr__(self, "triples", t)
        by_hr, by_rt = defaultdict(list), defaultdict(list)
        for h, r, tl in t.tolist():
            by_hr[(h, r)].append(tl)
            by_rt[(r, tl)].append(h)
        object.__setattr__(self, "_by_head_rel", dict(by_hr))
        object.__setattr__(self, "_by_rel_tail", dict(by_rt))
        object.__setattr__(self, "_keys", frozenset(map(tuple, t.tolist())))

    @classmethod
    def from_named(cls, named: Iterable[tuple[str, str, str]]) -> "TripleGraph":
        """Build a graph from (head, relation, tail) name triples."""
        named = set(named)
        entities = tuple(sorted({h for h, _, _ in named} | {t for _, _, t in named}))
        relations = tuple(sorted({r for _, r, _ in named}))
        eid = {n: i for i, n in enumerate(entities)}
        rid = {n: i for i, n in enumerate(relations)}
        ids = sorted((eid[h], rid[r], eid[t]) for h, r, t in named)
        return cls(entities, relations, np.array(ids, dtype=np.int64).reshape(-1, 3))

    def __len__(self) -> int:
        return len(self.triples)

    def __eq__(self, other):
        if not isinstance(other, TripleGraph):
            return NotImplemented
        return (self.entities == other.entities and self.relations == other.relations
                and np.array_equal(self.triples, other.triples))

    def __hash__(self):
        return hash((self.entities, self.relations, self._keys))

    def __contains__(self, triple) -> bool:
        return tuple(triple) in self._keys

    def entity_id(self, name: str) -> int:
        return self.entities.index(name)

    def relation_id(self, name: str) -> int:
        return self.relations.index(name)

    def tails(self, head: int, relation: int) -> list[int]:
        return self._by_head_rel.get((head, relation), [])

    def heads(self, relation: int, tail: int) -> list[int]:
        return self._by_rel_tail.get((relation, tail), [])

    def named_triples(self) -> list[tuple[str, str, str]]:
        return [(self.entities[h], self.relations[r], self.entities[t]) for h, r, t in self.triples.tolist()]

    def encoded_keys(self) -> np.ndarray:
        """Triples packed into one int64 per row, for fast membership tests."""
        ne, nr = len(self.entities), max(len(self.relations), 1)
        t = self.triples
        return np.sort((t[:, 0] * nr + t[:, 1]) * ne + t[:, 2])


def extract_triples(kb: KnowledgeBase) -> TripleGraph:
    """Map the atomic assertions and taxonomy axioms of ``kb`` onto triples."""
    named = []
    for ax in kb.abox:
        if isinstance(ax, ClassAssertion) and isinstance(ax.concept, AtomicConcept):
            named.append((ax.individual, RDF_TYPE, ax.concept.name))
        elif isinstance(ax, PropertyAssertion):
            named.append((ax.subject, ax.role, ax.object))
    for ax in kb.tbox:
        if isinstance(ax.sub, AtomicConcept) and isinstance(ax.sup, AtomicConcept):
            named.append((ax.sub.name, RDFS_SUBCLASSOF, ax.sup.name))
    for ax in kb.rbox:
        if isinstance(ax, SubPropertyOf):
            named.append((ax.sub, RDFS_SUBPROPERTYOF, ax.sup))
    return TripleGraph.from_named(named)


def _local_iri(base: str, name: str) -> str:
    sep = "" if base.endswith(("#", "/")) else "#"
    return f"<{base}{sep}{name}>"


def export_ntriples(g: TripleGraph, base_iri: str) -> str:
    """Serialize ``g`` as sorted N-Triples lines with IRIs under ``base_iri``."""
    lines = []
    for h, r, t in g.named_triples():
        pred = f"<{STANDARD_IRIS[r]}>" if r in STANDARD_IRIS else _local_iri(base_iri, r)
        lines.append(f"{_local_iri(base_iri, h)} {pred} {_local_iri(base_iri, t)} .")
    lines.sort()
    return "".join(line + "\n" for line in lines)


_NT_LINE = re.compile(r"^\s*<([^<>\s\"]+)>\s+<([^<>\s\"]+)>\s+(\S.*?)\s*\.\s*$")
_IRI_TERM = re.compile(r"^<([^<>\s\"]+)>$")


def _local_name(iri: str) -> str:
    if iri in _IRI_TO_STANDARD:
        return _IRI_TO_STANDARD[iri]
    cut = max(iri.rfind("#"), iri.rfind("/"))
    return iri[cut + 1:]


def import_ntriples(text: str) -> TripleGraph:
    """Parse IRI-only N-Triples back into a graph, keeping local names only."""
    named = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if not line.rstrip().endswith("."):
            raise NTriplesError("missing terminating '.'", lineno)
        m = _NT_LINE.match(line)
        if not m:
            raise NTriplesError("expected '<subject> <predicate> <object> .'", lineno)
        obj = m.group(3)
        if obj.startswith('"'):
            raise NTriplesError("literal terms are not supported", lineno)
        om = _IRI_TERM.match(obj)
        if not om:
            raise NTriplesError(f"object is not an IRI: {obj!r}", lineno)
        named.append((_local_name(m.group(1)), _local_name(m.group(2)), _local_name(om.group(1))))
    return TripleGraph.from_named(named)
