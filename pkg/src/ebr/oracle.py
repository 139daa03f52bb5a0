"""Materialization-based structural reasoner used as ground truth.

The closure covers atomic subsumption, role inclusions and transitivity.
Negation is a closed-world complement over the KB's individuals, so the
oracle is sound-but-incomplete with respect to full SHOIQ entailment. Complex
GCIs are ignored; class assertions whose concept is a conjunction are split
into their conjuncts, any other complex class assertion is ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .dl import (AtLeast, AtMost, AtomicConcept, AtomicRole, Bottom, ClassAssertion, Conjunction,
                 ConceptExpr, Disjunction, Existential, Functional, InverseRole, KnowledgeBase, Negation,
                 Nominal, PropertyAssertion, RoleExpr, SubClassOf, SubPropertyOf, Top, Transitive, Universal,
                 UniversalRole, UnknownNameError)


class InconsistentKBError(RuntimeError):
    """Raised by strict retrieval when the KB contains a clash."""

    def __init__(self, clashes: list["Clash"]):
        super().__init__(f"knowledge base is inconsistent ({len(clashes)} clash(es))")
        self.clashes = clashes


@dataclass(frozen=True)
class Clash:
    kind: str  # "disjointness" | "functionality"
    individuals: tuple[str, ...]
    axiom: object

    def describe(self) -> str:
        from .dl import render_axiom
        return f"{self.kind} clash on {', '.join(self.individuals)}: {render_axiom(self.axiom)}"


@dataclass
class MaterializedKB:
    individuals: tuple[str, ...]
    memberships: dict[str, frozenset[str]]
    role_extensions: dict[str, frozenset[tuple[str, str]]]
    subclass_closure: dict[str, frozenset[str]]
    subrole_closure: dict[str, frozenset[str]]
    kb: Optional[KnowledgeBase] = field(default=None, repr=False)

    def members(self, concept: str) -> frozenset[str]:
        return self.memberships.get(concept, frozenset())

    def pairs(self, role: str) -> frozenset[tuple[str, str]]:
        return self.role_extensions.get(role, frozenset())

    def has_type(self, individual: str, concept: str) -> bool:
        return individual in self.members(concept)

    def has_pair(self, role: str, subject: str, obj: str) -> bool:
        return (subject, obj) in self.pairs(role)

    def as_kb(self) -> KnowledgeBase:
        """The closed facts recast as a KB (keeping the source TBox/RBox)."""
        abox = [ClassAssertion(AtomicConcept(c), a) for c, inds in sorted(self.memberships.items())
                for a in sorted(inds)]
        abox += [PropertyAssertion(r, a, b) for r, prs in sorted(self.role_extensions.items())
                 for a, b in sorted(prs)]
        src = self.kb or KnowledgeBase()
        return KnowledgeBase(src.tbox, src.rbox, tuple(abox), src.signature)


def _reflexive_transitive(names, edges) -> dict[str, frozenset[str]]:
    """For each name, every name reachable through ``edges`` (including itself)."""
    succ: dict[str, set[str]] = {n: set() for n in names}
    for a, b in edges:
        succ.setdefault(a, set()).add(b)
        succ.setdefault(b, set())
    out = {}
    for n in succ:
        seen = {n}
        stack = [n]
        while stack:
            for m in succ[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        out[n] = frozenset(seen)
    return out


def _transitive_closure(pairs: set[tuple[str, str]]) -> set[tuple[str, str]]:
    succ: dict[str, set[str]] = {}
    for a, b in pairs:
        succ.setdefault(a, set()).add(b)
    closed = set()
    for a in succ:
        seen: set[str] = set()
        stack = list(succ[a])
        while stack:
            b = stack.pop()
            if b in seen:
                continue
            seen.add(b)
            stack.extend(succ.get(b, ()))
        closed.update((a, b) for b in seen)
    return closed


def _atomic_conjuncts(c: ConceptExpr) -> list[str] | None:
    if isinstance(c, AtomicConcept):
        return [c.name]
    if isinstance(c, Conjunction):
        left, right = _atomic_conjuncts(c.left), _atomic_conjuncts(c.right)
        if left is not None and right is not None:
            return left + right
    return None


def materialize(kb: KnowledgeBase) -> MaterializedKB:
    """Least fixpoint of atomic subsumption, role inclusion and transitivity."""
    sig = kb.signature
    sub_edges = [(ax.sub.name, ax.sup.name) for ax in kb.tbox
                 if isinstance(ax.sub, AtomicConcept) and isinstance(ax.sup, AtomicConcept)]
    subclass = _reflexive_transitive(sig.concepts, sub_edges)
    role_edges = [(ax.sub, ax.sup) for ax in kb.rbox if isinstance(ax, SubPropertyOf)]
    subrole = _reflexive_transitive(sig.roles, role_edges)
    transitive = sorted({ax.role for ax in kb.rbox if isinstance(ax, Transitive)})

    members: dict[str, set[str]] = {c: set() for c in sig.concepts}
    roles: dict[str, set[tuple[str, str]]] = {r: set() for r in sig.roles}
    for ax in kb.abox:
        if isinstance(ax, ClassAssertion):
            for name in _atomic_conjuncts(ax.concept) or ():
                for sup in subclass[name]:
                    members[sup].add(ax.individual)
        else:
            roles[ax.role].add((ax.subject, ax.object))

    # role inclusions and transitivity interact, so iterate to a fixpoint
    changed = True
    while changed:
        changed = False
        for r in sig.roles:
            for s in subrole[r]:
                if s != r and not roles[r] <= roles[s]:
                    roles[s] |= roles[r]
                    changed = True
        for r in transitive:
            closed = _transitive_closure(roles[r])
            if not closed <= roles[r]:
                roles[r] |= closed
                changed = True

    return MaterializedKB(
        individuals=sig.individuals,
        memberships={c: frozenset(v) for c, v in members.items()},
        role_extensions={r: frozenset(v) for r, v in roles.items()},
        subclass_closure=subclass,
        subrole_closure=subrole,
        kb=kb,
    )


def detect_clashes(mkb: MaterializedKB, kb: KnowledgeBase | None = None) -> list[Clash]:
    """Disjointness (``X and Y ⊑ Bottom``) and functionality violations."""
    kb = kb if kb is not None else mkb.kb
    if kb is None:
        return []
    clashes = []
    for ax in kb.tbox:
        if (isinstance(ax.sup, Bottom) and isinstance(ax.sub, Conjunction)
                and isinstance(ax.sub.left, AtomicConcept) and isinstance(ax.sub.right, AtomicConcept)):
            both = mkb.members(ax.sub.left.name) & mkb.members(ax.sub.right.name)
            for ind in sorted(both):
                clashes.append(Clash("disjointness", (ind,), ax))
    for ax in kb.rbox:
        if isinstance(ax, Functional):
            succ: dict[str, set[str]] = {}
            for a, b in mkb.pairs(ax.role):
                succ.setdefault(a, set()).add(b)
            for a in sorted(succ):
                if len(succ[a]) > 1:
                    clashes.append(Clash("functionality", (a, *sorted(succ[a])), ax))
    return clashes


def _role_pairs(role: RoleExpr, mkb: MaterializedKB) -> set[tuple[str, str]]:
    if isinstance(role, UniversalRole):
        return {(a, b) for a in mkb.individuals for b in mkb.individuals}
    if role.name not in mkb.role_extensions:
        raise UnknownNameError(f"unknown role name {role.name!r}")
    pairs = mkb.pairs(role.name)
    if isinstance(role, InverseRole):
        return {(b, a) for a, b in pairs}
    return set(pairs)


def _successors(role: RoleExpr, mkb: MaterializedKB) -> dict[str, set[str]]:
    succ: dict[str, set[str]] = {}
    for a, b in _role_pairs(role, mkb):
        succ.setdefault(a, set()).add(b)
    return succ


def _extension(c: ConceptExpr, mkb: MaterializedKB, domain: frozenset[str]) -> frozenset[str]:
    if isinstance(c, AtomicConcept):
        if c.name not in mkb.memberships:
            raise UnknownNameError(f"unknown concept name {c.name!r}")
        return mkb.members(c.name) & domain
    if isinstance(c, Top):
        return domain
    if isinstance(c, Bottom):
        return frozenset()
    if isinstance(c, Nominal):
        if c.individual not in domain:
            raise UnknownNameError(f"unknown individual name {c.individual!r}")
        return frozenset({c.individual})
    if isinstance(c, Negation):
        return domain - _extension(c.operand, mkb, domain)
    if isinstance(c, Conjunction):
        return _extension(c.left, mkb, domain) & _extension(c.right, mkb, domain)
    if isinstance(c, Disjunction):
        return _extension(c.left, mkb, domain) | _extension(c.right, mkb, domain)
    filler = _extension(c.filler, mkb, domain)
    succ = _successors(c.role, mkb)
    if isinstance(c, Existential):
        return frozenset(a for a in domain if succ.get(a, set()) & filler)
    if isinstance(c, Universal):
        return frozenset(a for a in domain if succ.get(a, set()) <= filler)
    if isinstance(c, AtLeast):
        return frozenset(a for a in domain if len(succ.get(a, set()) & filler) >= c.n)
    if isinstance(c, AtMost):
        return frozenset(a for a in domain if len(succ.get(a, set()) & filler) <= c.n)
    raise TypeError(f"not a concept expression: {c!r}")


def oracle_retrieve(c: ConceptExpr, mkb: MaterializedKB, strict: bool = False) -> frozenset[str]:
    """Instances of ``c`` in the materialized interpretation.

    In strict mode a KB with any clash is refused with
    :class:`InconsistentKBError`, as a classical reasoner would.
    """
    if strict:
        clashes = detect_clashes(mkb)
        if clashes:
            raise InconsistentKBError(clashes)
    return _extension(c, mkb, frozenset(mkb.individuals))
