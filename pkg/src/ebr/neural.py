"""Instance retrieval under neural semantics.

Every constructor is evaluated as a set operation over thresholded link
predictions: ``x`` is an instance of atomic ``A`` iff
``p(x, rdf:type, A) >= gamma`` and ``(x, y)`` is in role ``r`` iff
``p(x, r, y) >= gamma``. Universal restrictions are rewritten as
``not (r some not C)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from . import kge
from .dl import (AtLeast, AtMost, AtomicConcept, AtomicRole, Bottom, ConceptExpr, Conjunction, Disjunction,
                 Existential, InverseRole, KnowledgeBase, Negation, Nominal, RoleExpr, Top, Universal,
                 UniversalRole, UnknownNameError, is_simple_role, iter_subconcepts)
from .oracle import MaterializedKB
from .triples import RDF_TYPE


class NonSimpleRoleWarning(UserWarning):
    pass


class Predictor(Protocol):
    """Link predictor returning truth probabilities for named triples.

    Vector-valued methods are aligned with ``entities``; unknown names score 0.
    """

    entities: tuple[str, ...]

    def predict(self, h: str, r: str, t: str) -> float: ...

    def predict_all_tails(self, h: str, r: str) -> np.ndarray: ...

    def predict_all_heads(self, r: str, t: str) -> np.ndarray: ...


class EmbeddingPredictor:
    """Sigmoid of a trained embedding model's score."""

    def __init__(self, model: kge.EmbeddingModel):
        self.model = model
        self.entities = model.entities

    def predict(self, h: str, r: str, t: str) -> float:
        m = self.model
        if not (m.has_entity(h) and m.has_relation(r) and m.has_entity(t)):
            return 0.0
        return kge.predict(m, m.entity_index(h), m.relation_index(r), m.entity_index(t))

    def predict_all_tails(self, h: str, r: str) -> np.ndarray:
        m = self.model
        if not (m.has_entity(h) and m.has_relation(r)):
            return np.zeros(len(self.entities))
        return kge.sigmoid(kge.score_all_tails(m, m.entity_index(h), m.relation_index(r)))

    def predict_all_heads(self, r: str, t: str) -> np.ndarray:
        m = self.model
        if not (m.has_entity(t) and m.has_relation(r)):
            return np.zeros(len(self.entities))
        return kge.sigmoid(kge.score_all_heads(m, m.relation_index(r), m.entity_index(t)))


class PerfectPredictor:
    """0/1 predictor that answers exactly the facts of a materialized KB."""

    def __init__(self, mkb: MaterializedKB):
        self.mkb = mkb
        self.entities = tuple(mkb.individuals) + tuple(sorted(mkb.memberships))
        self._index = {n: i for i, n in enumerate(self.entities)}
        self._succ: dict[tuple[str, str], list[int]] = {}
        self._pred: dict[tuple[str, str], list[int]] = {}
        for concept, inds in mkb.memberships.items():
            for a in inds:
                self._succ.setdefault((a, RDF_TYPE), []).append(self._index[concept])
                self._pred.setdefault((RDF_TYPE, concept), []).append(self._index[a])
        for role, pairs in mkb.role_extensions.items():
            for a, b in pairs:
                self._succ.setdefault((a, role), []).append(self._index[b])
                self._pred.setdefault((role, b), []).append(self._index[a])

    def predict(self, h: str, r: str, t: str) -> float:
        if r == RDF_TYPE:
            return 1.0 if self.mkb.has_type(h, t) else 0.0
        return 1.0 if self.mkb.has_pair(r, h, t) else 0.0

    def predict_all_tails(self, h: str, r: str) -> np.ndarray:
        out = np.zeros(len(self.entities))
        out[self._succ.get((h, r), [])] = 1.0
        return out

    def predict_all_heads(self, r: str, t: str) -> np.ndarray:
        out = np.zeros(len(self.entities))
        out[self._pred.get((r, t), [])] = 1.0
        return out


def make_perfect_predictor(mkb: MaterializedKB) -> PerfectPredictor:
    return PerfectPredictor(mkb)


@dataclass(frozen=True)
class NeuralDomain:
    """Candidate individuals and decision threshold for neural retrieval.

    If ``kb`` is given, concept names are checked against its signature and
    non-simple roles inside cardinality restrictions trigger a warning.
    """

    individuals: tuple[str, ...]
    gamma: float = 0.5
    kb: Optional[KnowledgeBase] = None

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie strictly between 0 and 1, got {self.gamma}")
        object.__setattr__(self, "individuals", tuple(self.individuals))

    @classmethod
    def from_kb(cls, kb: KnowledgeBase, gamma: float = 0.5) -> "NeuralDomain":
        return cls(kb.signature.individuals, gamma, kb)


class _Evaluator:
    def __init__(self, p: Predictor, dom: NeuralDomain):
        self.p = p
        self.dom = dom
        self.gamma = dom.gamma
        index = {n: i for i, n in enumerate(p.entities)}
        self.cols = np.array([index.get(n, -1) for n in dom.individuals], dtype=np.int64)
        self.known = self.cols >= 0
        self.n = len(dom.individuals)
        self.memo: dict = {}
        self.role_memo: dict = {}

    def _restrict(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n)
        out[self.known] = vec[self.cols[self.known]]
        return out

    def role_matrix(self, role: RoleExpr) -> np.ndarray:
        if role in self.role_memo:
            return self.role_memo[role]
        if isinstance(role, UniversalRole):
            mat = np.ones((self.n, self.n), dtype=bool)
        elif isinstance(role, InverseRole):
            mat = self.role_matrix(AtomicRole(role.name)).T
        else:
            mat = np.zeros((self.n, self.n), dtype=bool)
            for i, h in enumerate(self.dom.individuals):
                mat[i] = self._restrict(self.p.predict_all_tails(h, role.name)) >= self.gamma
        self.role_memo[role] = mat
        return mat

    def mask(self, c: ConceptExpr) -> np.ndarray:
        if c in self.memo:
            return self.memo[c]
        if isinstance(c, AtomicConcept):
            m = self._restrict(self.p.predict_all_heads(RDF_TYPE, c.name)) >= self.gamma
        elif isinstance(c, Top):
            m = np.ones(self.n, dtype=bool)
        elif isinstance(c, Bottom):
            m = np.zeros(self.n, dtype=bool)
        elif isinstance(c, Nominal):
            m = np.array([x == c.individual for x in self.dom.individuals], dtype=bool)
        elif isinstance(c, Negation):
            m = ~self.mask(c.operand)
        elif isinstance(c, Conjunction):
            m = self.mask(c.left) & self.mask(c.right)
        elif isinstance(c, Disjunction):
            m = self.mask(c.left) | self.mask(c.right)
        elif isinstance(c, Universal):
            m = self.mask(Negation(Existential(c.role, Negation(c.filler))))
        elif isinstance(c, Existential):
            m = (self.role_matrix(c.role) & self.mask(c.filler)).any(axis=1)
        elif isinstance(c, AtLeast):
            m = (self.role_matrix(c.role) & self.mask(c.filler)).sum(axis=1) >= c.n
        elif isinstance(c, AtMost):
            m = (self.role_matrix(c.role) & self.mask(c.filler)).sum(axis=1) <= c.n
        else:
            raise TypeError(f"not a concept expression: {c!r}")
        self.memo[c] = m
        return m

    def to_set(self, m: np.ndarray) -> frozenset[str]:
        return frozenset(self.dom.individuals[i] for i in np.flatnonzero(m))


def _validate(c: ConceptExpr, dom: NeuralDomain) -> None:
    if dom.kb is None:
        return
    dom.kb.signature.check_concept(c)
    for sub in iter_subconcepts(c):
        if isinstance(sub, (AtLeast, AtMost)) and isinstance(sub.role, (AtomicRole, InverseRole)):
            if not is_simple_role(sub.role.name, dom.kb):
                warnings.warn(f"non-simple role {sub.role.name!r} in a cardinality restriction",
                              NonSimpleRoleWarning, stacklevel=3)


def retrieve(c: ConceptExpr, p: Predictor, dom: NeuralDomain) -> frozenset[str]:
    """Individuals of ``dom`` that are instances of ``c`` under predictor ``p``."""
    _validate(c, dom)
    ev = _Evaluator(p, dom)
    return ev.to_set(ev.mask(c))


def role_pairs(r: RoleExpr, p: Predictor, dom: NeuralDomain) -> frozenset[tuple[str, str]]:
    """Pairs of ``dom`` individuals predicted to stand in role ``r``."""
    if dom.kb is not None and isinstance(r, (AtomicRole, InverseRole)) and r.name not in dom.kb.signature.roles:
        raise UnknownNameError(f"unknown role name {r.name!r}")
    ev = _Evaluator(p, dom)
    mat = ev.role_matrix(r)
    names = dom.individuals
    return frozenset((names[i], names[j]) for i, j in zip(*np.nonzero(mat)))
