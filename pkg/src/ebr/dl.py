"""Description-logic data model, concept grammar and KB file parser.

Concepts use a Manchester-like infix syntax::

    Person and (hasChild min 2 (Male or {bob}))
    inverse(hasChild) only not Female

KB documents hold one functional-style axiom per line (``#`` starts a comment)::

    SubClassOf(Father Male)
    SubClassOf((Male and Female) Bottom)
    SubObjectPropertyOf(hasSon hasChild)
    TransitiveObjectProperty(hasAncestor)
    FunctionalObjectProperty(hasMother)
    ClassAssertion(Father bob)
    ObjectPropertyAssertion(hasChild bob ann)

``Declaration(Class(A))``, ``Declaration(ObjectProperty(r))`` and
``Declaration(NamedIndividual(a))`` add a name to the signature without adding
an axiom.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

__all__ = [
    "AtomicConcept", "Top", "Bottom", "Negation", "Conjunction", "Disjunction",
    "Existential", "Universal", "AtLeast", "AtMost", "Nominal", "ConceptExpr",
    "AtomicRole", "InverseRole", "UniversalRole", "RoleExpr", "inverse",
    "SubClassOf", "SubPropertyOf", "Transitive", "Functional", "ClassAssertion",
    "PropertyAssertion", "Axiom", "Signature", "KnowledgeBase",
    "DLSyntaxError", "NameKindError", "UnknownNameError",
    "parse_concept", "render_concept", "parse_kb", "render_kb",
    "is_simple_role", "constructor_class", "concept_names", "CONSTRUCTOR_CLASSES",
]


class DLSyntaxError(ValueError):
    """Malformed concept expression or KB document."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class NameKindError(ValueError):
    """A name is used as more than one of concept / role / individual."""


class UnknownNameError(KeyError):
    """A concept, role or individual name outside the signature."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown name"


# ---------------------------------------------------------------------------
# Roles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomicRole:
    name: str


@dataclass(frozen=True)
class InverseRole:
    name: str


@dataclass(frozen=True)
class UniversalRole:
    pass


RoleExpr = Union[AtomicRole, InverseRole, UniversalRole]


def inverse(role: RoleExpr) -> RoleExpr:
    """Invert a role; double inversion collapses back to the atomic role."""
    if isinstance(role, AtomicRole):
        return InverseRole(role.name)
    if isinstance(role, InverseRole):
        return AtomicRole(role.name)
    return role


# ---------------------------------------------------------------------------
# Concepts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomicConcept:
    name: str


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Negation:
    operand: "ConceptExpr"


@dataclass(frozen=True)
class Conjunction:
    left: "ConceptExpr"
    right: "ConceptExpr"


@dataclass(frozen=True)
class Disjunction:
    left: "ConceptExpr"
    right: "ConceptExpr"


@dataclass(frozen=True)
class Existential:
    role: RoleExpr
    filler: "ConceptExpr"


@dataclass(frozen=True)
class Universal:
    role: RoleExpr
    filler: "ConceptExpr"


@dataclass(frozen=True)
class AtLeast:
    n: int
    role: RoleExpr
    filler: "ConceptExpr"

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"cardinality must be a non-negative integer, got {self.n!r}")


@dataclass(frozen=True)
class AtMost:
    n: int
    role: RoleExpr
    filler: "ConceptExpr"

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 0:
            raise ValueError(f"cardinality must be a non-negative integer, got {self.n!r}")


@dataclass(frozen=True)
class Nominal:
    individual: str


ConceptExpr = Union[AtomicConcept, Top, Bottom, Negation, Conjunction, Disjunction,
                    Existential, Universal, AtLeast, AtMost, Nominal]

#: Root constructor buckets used for benchmark aggregation.
CONSTRUCTOR_CLASSES = (
    "atomic", "negation", "conjunction", "disjunction", "existential",
    "universal", "min-restriction", "max-restriction", "nominal",
)

_CLASS_TAGS = {
    AtomicConcept: "atomic", Negation: "negation", Conjunction: "conjunction",
    Disjunction: "disjunction", Existential: "existential", Universal: "universal",
    AtLeast: "min-restriction", AtMost: "max-restriction", Nominal: "nominal",
    Top: "top", Bottom: "bottom",
}


def constructor_class(c: ConceptExpr) -> str:
    """Tag of the outermost constructor of ``c``."""
    return _CLASS_TAGS[type(c)]


def concept_names(c: ConceptExpr) -> tuple[set[str], set[str], set[str]]:
    """Return the (concept, role, individual) names occurring in ``c``."""
    concepts: set[str] = set()
    roles: set[str] = set()
    individuals: set[str] = set()

    def visit(e):
        if isinstance(e, AtomicConcept):
            concepts.add(e.name)
        elif isinstance(e, Nominal):
            individuals.add(e.individual)
        elif isinstance(e, Negation):
            visit(e.operand)
        elif isinstance(e, (Conjunction, Disjunction)):
            visit(e.left)
            visit(e.right)
        elif isinstance(e, (Existential, Universal, AtLeast, AtMost)):
            if isinstance(e.role, (AtomicRole, InverseRole)):
                roles.add(e.role.name)
            visit(e.filler)

    visit(c)
    return concepts, roles, individuals


# ---------------------------------------------------------------------------
# Axioms and knowledge bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubClassOf:
    sub: ConceptExpr
    sup: ConceptExpr


@dataclass(frozen=True)
class SubPropertyOf:
    sub: str
    sup: str


@dataclass(frozen=True)
class Transitive:
    role: str


@dataclass(frozen=True)
class Functional:
    role: str


@dataclass(frozen=True)
class ClassAssertion:
    concept: ConceptExpr
    individual: str


@dataclass(frozen=True)
class PropertyAssertion:
    role: str
    subject: str
    object: str


Axiom = Union[SubClassOf, SubPropertyOf, Transitive, Functional, ClassAssertion, PropertyAssertion]


@dataclass(frozen=True)
class Signature:
    concepts: tuple[str, ...] = ()
    roles: tuple[str, ...] = ()
    individuals: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "concepts", tuple(sorted(set(self.concepts))))
        object.__setattr__(self, "roles", tuple(sorted(set(self.roles))))
        object.__setattr__(self, "individuals", tuple(sorted(set(self.individuals))))
        _check_disjoint(self.concepts, self.roles, self.individuals)

    def union(self, other: "Signature") -> "Signature":
        return Signature(self.concepts + other.concepts, self.roles + other.roles,
                         self.individuals + other.individuals)

    def check_concept(self, c: ConceptExpr) -> None:
        """Raise :class:`UnknownNameError` if ``c`` mentions a name outside the signature."""
        cs, rs, inds = concept_names(c)
        for names, known, kind in ((cs, self.concepts, "concept"), (rs, self.roles, "role"),
                                   (inds, self.individuals, "individual")):
            missing = sorted(names - set(known))
            if missing:
                raise UnknownNameError(f"unknown {kind} name {missing[0]!r}")


def _check_disjoint(concepts, roles, individuals):
    kinds = (("concept", set(concepts)), ("role", set(roles)), ("individual", set(individuals)))
    for i, (ka, a) in enumerate(kinds):
        for kb, b in kinds[i + 1:]:
            both = sorted(a & b)
            if both:
                raise NameKindError(f"name {both[0]!r} used both as {ka} and as {kb}")


@dataclass(frozen=True)
class KnowledgeBase:
    tbox: tuple[SubClassOf, ...] = ()
    rbox: tuple[Union[SubPropertyOf, Transitive, Functional], ...] = ()
    abox: tuple[Union[ClassAssertion, PropertyAssertion], ...] = ()
    signature: Signature = field(default_factory=Signature)

    @classmethod
    def from_axioms(cls, axioms: Iterable[Axiom], declared: Signature | None = None) -> "KnowledgeBase":
        """Sort axioms into boxes and collect the signature (plus ``declared`` names)."""
        tbox, rbox, abox = [], [], []
        for ax in axioms:
            if isinstance(ax, SubClassOf):
                tbox.append(ax)
            elif isinstance(ax, (SubPropertyOf, Transitive, Functional)):
                rbox.append(ax)
            elif isinstance(ax, (ClassAssertion, PropertyAssertion)):
                abox.append(ax)
            else:
                raise TypeError(f"not an axiom: {ax!r}")
        sig = _collect_signature(tbox + rbox + abox)
        if declared is not None:
            sig = sig.union(declared)
        return cls(tuple(tbox), tuple(rbox), tuple(abox), sig)

    @property
    def axioms(self) -> tuple[Axiom, ...]:
        return self.tbox + self.rbox + self.abox

    def replace_abox(self, abox: Iterable[Union[ClassAssertion, PropertyAssertion]]) -> "KnowledgeBase":
        """Same TBox/RBox and declared signature, new ABox."""
        abox = tuple(abox)
        sig = self.signature.union(_collect_signature(abox))
        return KnowledgeBase(self.tbox, self.rbox, abox, sig)


def _collect_signature(axioms: Iterable[Axiom]) -> Signature:
    concepts: set[str] = set()
    roles: set[str] = set()
    individuals: set[str] = set()

    def add_concept(c):
        cs, rs, inds = concept_names(c)
        concepts.update(cs)
        roles.update(rs)
        individuals.update(inds)

    for ax in axioms:
        if isinstance(ax, SubClassOf):
            add_concept(ax.sub)
            add_concept(ax.sup)
        elif isinstance(ax, SubPropertyOf):
            roles.update((ax.sub, ax.sup))
        elif isinstance(ax, (Transitive, Functional)):
            roles.add(ax.role)
        elif isinstance(ax, ClassAssertion):
            add_concept(ax.concept)
            individuals.add(ax.individual)
        elif isinstance(ax, PropertyAssertion):
            roles.add(ax.role)
            individuals.update((ax.subject, ax.object))
    return Signature(tuple(concepts), tuple(roles), tuple(individuals))


def is_simple_role(s: str, kb: KnowledgeBase) -> bool:
    """True iff no transitive role lies below ``s`` in the role hierarchy.

    Subsumption is the reflexive-transitive closure of the RIAs. Since RIAs
    relate role names only, Tra(r) and Tra(inverse(r)) coincide here.
    """
    if s not in kb.signature.roles:
        raise UnknownNameError(f"unknown role name {s!r}")
    below = {s}
    frontier = [s]
    while frontier:
        sup = frontier.pop()
        for ax in kb.rbox:
            if isinstance(ax, SubPropertyOf) and ax.sup == sup and ax.sub not in below:
                below.add(ax.sub)
                frontier.append(ax.sub)
    transitive = {ax.role for ax in kb.rbox if isinstance(ax, Transitive)}
    return not (below & transitive)


# ---------------------------------------------------------------------------
# Tokenizer and concept parser
# ---------------------------------------------------------------------------

KEYWORDS = frozenset({"and", "or", "not", "some", "only", "min", "max", "inverse", "Top", "Bottom", "U"})
NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_TOKEN_RE = re.compile(r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[(){}])|(?P<bad>\S))")


@dataclass
class _Token:
    kind: str  # "int" | "name" | "punct" | "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str, line: int = 1, col0: int = 1) -> list[_Token]:
    tokens = []
    pos = 0
    while True:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            break
        kind = m.lastgroup
        start = m.start(kind)
        if kind == "bad":
            raise DLSyntaxError(f"unexpected character {m.group(kind)!r}", line, col0 + start)
        tokens.append(_Token(kind, m.group(kind), line, col0 + start))
        pos = m.end()
    tokens.append(_Token("eof", "", line, col0 + len(text.rstrip())))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.toks = tokens
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: _Token | None = None):
        tok = tok or self.tok
        raise DLSyntaxError(msg, tok.line, tok.col)

    def advance(self) -> _Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "eof":
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def name(self, what: str) -> str:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            self.error(f"expected {what} name, found {t.text or 'end of input'!r}")
        return self.advance().text

    # or-expr := and-expr ("or" and-expr)*
    def or_expr(self) -> ConceptExpr:
        left = self.and_expr()
        while self.tok.kind == "name" and self.tok.text == "or":
            self.advance()
            left = Disjunction(left, self.and_expr())
        return left

    def and_expr(self) -> ConceptExpr:
        left = self.unary()
        while self.tok.kind == "name" and self.tok.text == "and":
            self.advance()
            left = Conjunction(left, self.unary())
        return left

    def unary(self) -> ConceptExpr:
        t = self.tok
        if t.kind == "name" and t.text == "not":
            self.advance()
            return Negation(self.unary())
        if self._at_role():
            return self.restriction()
        return self.primary()

    def _at_role(self) -> bool:
        t = self.tok
        if t.kind != "name":
            return False
        if t.text == "inverse" or t.text == "U":
            return True
        nxt = self.peek()
        return t.text not in KEYWORDS and nxt.kind == "name" and nxt.text in ("some", "only", "min", "max")

    def role(self) -> RoleExpr:
        t = self.tok
        if t.kind == "name" and t.text == "U":
            self.advance()
            return UniversalRole()
        if t.kind == "name" and t.text == "inverse":
            self.advance()
            self.expect("(")
            inner = self.role()
            self.expect(")")
            return inverse(inner)
        return AtomicRole(self.name("role"))

    def restriction(self) -> ConceptExpr:
        role = self.role()
        t = self.tok
        if t.kind == "name" and t.text in ("some", "only"):
            self.advance()
            filler = self.unary()
            return Existential(role, filler) if t.text == "some" else Universal(role, filler)
        if t.kind == "name" and t.text in ("min", "max"):
            self.advance()
            if self.tok.kind != "int":
                self.error(f"expected cardinality, found {self.tok.text or 'end of input'!r}")
            n = int(self.advance().text)
            filler = self.unary()
            return AtLeast(n, role, filler) if t.text == "min" else AtMost(n, role, filler)
        self.error(f"expected 'some', 'only', 'min' or 'max', found {t.text or 'end of input'!r}")

    def primary(self) -> ConceptExpr:
        t = self.tok
        if t.kind == "punct" and t.text == "(":
            self.advance()
            inner = self.or_expr()
            self.expect(")")
            return inner
        if t.kind == "punct" and t.text == "{":
            self.advance()
            ind = self.name("individual")
            self.expect("}")
            return Nominal(ind)
        if t.kind == "name" and t.text == "Top":
            self.advance()
            return Top()
        if t.kind == "name" and t.text == "Bottom":
            self.advance()
            return Bottom()
        return AtomicConcept(self.name("concept"))


def _check_cardinality_text(text: str, line: int = 1, col0: int = 1):
    m = re.search(r"\b(min|max)\s*-\s*\d", text)
    if m:
        raise DLSyntaxError("cardinality must be a non-negative integer", line, col0 + m.start())


def parse_concept(text: str) -> ConceptExpr:
    """Parse an infix concept expression.

    Negation and restrictions bind tighter than ``and``, which binds tighter
    than ``or``; both binary operators associate to the left.
    """
    _check_cardinality_text(text)
    p = _Parser(_tokenize(text))
    c = p.or_expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return c


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _render_role(r: RoleExpr) -> str:
    if isinstance(r, AtomicRole):
        return r.name
    if isinstance(r, InverseRole):
        return f"inverse({r.name})"
    return "U"


def _render_unary(c: ConceptExpr) -> str:
    s = render_concept(c)
    return f"({s})" if isinstance(c, (Conjunction, Disjunction)) else s


def render_concept(c: ConceptExpr) -> str:
    """Render ``c`` in the infix grammar, parenthesizing only where needed."""
    if isinstance(c, AtomicConcept):
        return c.name
    if isinstance(c, Top):
        return "Top"
    if isinstance(c, Bottom):
        return "Bottom"
    if isinstance(c, Nominal):
        return "{" + c.individual + "}"
    if isinstance(c, Negation):
        return "not " + _render_unary(c.operand)
    if isinstance(c, Conjunction):
        left = render_concept(c.left)
        if isinstance(c.left, Disjunction):
            left = f"({left})"
        return f"{left} and {_render_unary(c.right)}"
    if isinstance(c, Disjunction):
        right = render_concept(c.right)
        if isinstance(c.right, Disjunction):
            right = f"({right})"
        return f"{render_concept(c.left)} or {right}"
    if isinstance(c, Existential):
        return f"{_render_role(c.role)} some {_render_unary(c.filler)}"
    if isinstance(c, Universal):
        return f"{_render_role(c.role)} only {_render_unary(c.filler)}"
    if isinstance(c, AtLeast):
        return f"{_render_role(c.role)} min {c.n} {_render_unary(c.filler)}"
    if isinstance(c, AtMost):
        return f"{_render_role(c.role)} max {c.n} {_render_unary(c.filler)}"
    raise TypeError(f"not a concept expression: {c!r}")


def _render_arg(c: ConceptExpr) -> str:
    s = render_concept(c)
    return s if isinstance(c, (AtomicConcept, Top, Bottom, Nominal)) else f"({s})"


def render_axiom(ax: Axiom) -> str:
    if isinstance(ax, SubClassOf):
        return f"SubClassOf({_render_arg(ax.sub)} {_render_arg(ax.sup)})"
    if isinstance(ax, SubPropertyOf):
        return f"SubObjectPropertyOf({ax.sub} {ax.sup})"
    if isinstance(ax, Transitive):
        return f"TransitiveObjectProperty({ax.role})"
    if isinstance(ax, Functional):
        return f"FunctionalObjectProperty({ax.role})"
    if isinstance(ax, ClassAssertion):
        return f"ClassAssertion({_render_arg(ax.concept)} {ax.individual})"
    if isinstance(ax, PropertyAssertion):
        return f"ObjectPropertyAssertion({ax.role} {ax.subject} {ax.object})"
    raise TypeError(f"not an axiom: {ax!r}")


def render_kb(kb: KnowledgeBase, declarations: bool = True) -> str:
    """Serialize ``kb`` as a ``.dl`` document.

    With ``declarations`` the full signature is written first, so names that
    no longer occur in any axiom survive a save/load cycle.
    """
    lines = []
    if declarations:
        used = _collect_signature(kb.axioms)
        sig = kb.signature
        lines += [f"Declaration(Class({n}))" for n in sig.concepts if n not in used.concepts]
        lines += [f"Declaration(ObjectProperty({n}))" for n in sig.roles if n not in used.roles]
        lines += [f"Declaration(NamedIndividual({n}))" for n in sig.individuals if n not in used.individuals]
    lines += [render_axiom(ax) for ax in kb.axioms]
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# KB documents
# ---------------------------------------------------------------------------

_DECL_KINDS = {"Class": "concept", "ObjectProperty": "role", "NamedIndividual": "individual"}


def _parse_axiom_line(p: _Parser) -> tuple[Axiom | None, tuple[str, str] | None]:
    head = p.tok
    keyword = p.name("axiom keyword")
    p.expect("(")
    decl = None
    ax: Axiom | None = None
    if keyword == "SubClassOf":
        ax = SubClassOf(p.primary(), p.primary())
    elif keyword == "SubObjectPropertyOf":
        ax = SubPropertyOf(p.name("role"), p.name("role"))
    elif keyword == "TransitiveObjectProperty":
        ax = Transitive(p.name("role"))
    elif keyword == "FunctionalObjectProperty":
        ax = Functional(p.name("role"))
    elif keyword == "ClassAssertion":
        ax = ClassAssertion(p.primary(), p.name("individual"))
    elif keyword == "ObjectPropertyAssertion":
        ax = PropertyAssertion(p.name("role"), p.name("individual"), p.name("individual"))
    elif keyword == "Declaration":
        kind_tok = p.tok
        kind = p.name("declaration kind")
        if kind not in _DECL_KINDS:
            p.error(f"unknown declaration kind {kind!r}", kind_tok)
        p.expect("(")
        decl = (_DECL_KINDS[kind], p.name("declared"))
        p.expect(")")
    else:
        p.error(f"unknown axiom keyword {keyword!r}", head)
    p.expect(")")
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r} after axiom")
    return ax, decl


def parse_kb(text: str) -> KnowledgeBase:
    """Parse a ``.dl`` document into a :class:`KnowledgeBase`.

    Raises :class:`DLSyntaxError` (with line and column) on malformed input
    and :class:`NameKindError` if a name appears in two different positions.
    """
    axioms: list[Axiom] = []
    declared: dict[str, set[str]] = {"concept": set(), "role": set(), "individual": set()}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        _check_cardinality_text(line, lineno)
        p = _Parser(_tokenize(line, lineno))
        ax, decl = _parse_axiom_line(p)
        if ax is not None:
            axioms.append(ax)
        if decl is not None:
            declared[decl[0]].add(decl[1])
    declared_sig = Signature(tuple(declared["concept"]), tuple(declared["role"]), tuple(declared["individual"]))
    return KnowledgeBase.from_axioms(axioms, declared_sig)


def iter_subconcepts(c: ConceptExpr) -> Iterator[ConceptExpr]:
    """Yield ``c`` and all of its sub-expressions, pre-order."""
    yield c
    if isinstance(c, Negation):
        yield from iter_subconcepts(c.operand)
    elif isinstance(c, (Conjunction, Disjunction)):
        yield from iter_subconcepts(c.left)
        yield from iter_subconcepts(c.right)
    elif isinstance(c, (Existential, Universal, AtLeast, AtMost)):
        yield from iter_subconcepts(c.filler)
