"""Corruption, concept sampling, Jaccard scoring and benchmark reports."""

from __future__ import annotations

import csv
import io
import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import kge
from .dl import (CONSTRUCTOR_CLASSES, AtLeast, AtMost, AtomicConcept, AtomicRole, ClassAssertion, ConceptExpr,
                 Conjunction, Disjunction, Existential, InverseRole, KnowledgeBase, Negation, Nominal,
                 PropertyAssertion, Signature, Universal, constructor_class, render_concept)
from .neural import EmbeddingPredictor, NeuralDomain, PerfectPredictor, Predictor, retrieve
from .oracle import InconsistentKBError, MaterializedKB, detect_clashes, materialize, oracle_retrieve
from .triples import extract_triples

CSV_HEADER = ("concept", "class", "oracle_size", "neural_size", "jaccard", "millis")


class CorruptionError(ValueError):
    pass


class DegenerateSignatureError(ValueError):
    pass


def jaccard(a: Iterable, b: Iterable) -> float:
    """|a ∩ b| / |a ∪ b|, and 1.0 when both sets are empty."""
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


@dataclass(frozen=True)
class CorruptionSpec:
    mode: str  # "noise" | "remove"
    ratio: float
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("noise", "remove"):
            raise ValueError(f"mode must be 'noise' or 'remove', got {self.mode!r}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio must lie in [0, 1], got {self.ratio}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


def inject_noise(kb: KnowledgeBase, spec: CorruptionSpec) -> KnowledgeBase:
    """Append round(ratio * |ABox|) random assertions that the clean KB does not entail.

    Each candidate first picks a kind (class or role assertion, 50/50), then a
    uniform concept/individual or role/subject/object over the signature.
    """
    if spec.mode != "noise":
        raise ValueError("inject_noise needs a spec with mode='noise'")
    count = round_half_away(spec.ratio * len(kb.abox))
    if count == 0:
        return kb
    sig = kb.signature
    inds, concepts, roles = sig.individuals, sig.concepts, sig.roles
    if not inds or not (concepts or roles):
        raise CorruptionError("signature has no assertion candidates")
    mkb = materialize(kb)
    existing = set(kb.abox)

    def entailed(ax) -> bool:
        if isinstance(ax, ClassAssertion):
            return mkb.has_type(ax.individual, ax.concept.name)
        return mkb.has_pair(ax.role, ax.subject, ax.object)

    n_class = sum(1 for c in concepts for a in inds if not mkb.has_type(a, c))
    n_role = sum(1 for r in roles for a in inds for b in inds if not mkb.has_pair(r, a, b))
    if n_class + n_role < count:
        raise CorruptionError(f"only {n_class + n_role} false assertions available, {count} requested")

    rng = np.random.default_rng(spec.seed)
    added: list = []
    chosen = set()
    while len(added) < count:
        use_class = (rng.random() < 0.5 if concepts and roles else bool(concepts))
        if use_class and n_class == 0:
            use_class = False
        elif not use_class and n_role == 0:
            use_class = True
        if use_class:
            ax = ClassAssertion(AtomicConcept(concepts[rng.integers(len(concepts))]), inds[rng.integers(len(inds))])
        else:
            ax = PropertyAssertion(roles[rng.integers(len(roles))], inds[rng.integers(len(inds))],
                                   inds[rng.integers(len(inds))])
        if ax in chosen or ax in existing or entailed(ax):
            continue
        chosen.add(ax)
        added.append(ax)
    return kb.replace_abox(kb.abox + tuple(added))


def remove_axioms(kb: KnowledgeBase, spec: CorruptionSpec) -> KnowledgeBase:
    """Drop round(ratio * |ABox|) assertions chosen uniformly without replacement."""
    if spec.mode != "remove":
        raise ValueError("remove_axioms needs a spec with mode='remove'")
    n = len(kb.abox)
    count = round_half_away(spec.ratio * n)
    if count > n:
        warnings.warn(f"cannot remove {count} of {n} assertions; removing all", stacklevel=2)
        count = n
    if count == 0:
        return kb
    rng = np.random.default_rng(spec.seed)
    drop = set(rng.choice(n, size=count, replace=False).tolist())
    return kb.replace_abox(ax for i, ax in enumerate(kb.abox) if i not in drop)


def corrupt_kb(kb: KnowledgeBase, spec: CorruptionSpec) -> KnowledgeBase:
    return inject_noise(kb, spec) if spec.mode == "noise" else remove_axioms(kb, spec)


# ---------------------------------------------------------------------------
# Concept sampling
# ---------------------------------------------------------------------------

class _Sampler:
    def __init__(self, sig: Signature, rng: np.random.Generator, inverse_prob: float = 0.2):
        self.sig = sig
        self.rng = rng
        self.inverse_prob = inverse_prob

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def role(self):
        name = self.pick(self.sig.roles)
        return InverseRole(name) if self.rng.random() < self.inverse_prob else AtomicRole(name)

    def atomic(self):
        return AtomicConcept(self.pick(self.sig.concepts))

    def sub(self, depth: int) -> ConceptExpr:
        # children: an atomic leaf or any constructor that fits the remaining depth
        if depth <= 0:
            return self.atomic()
        options = ("atomic",) + tuple(c for c in CONSTRUCTOR_CLASSES if c not in ("atomic", "nominal"))
        return self.build(self.pick(options), depth)

    def build(self, cls: str, depth: int) -> ConceptExpr:
        if cls == "atomic":
            return self.atomic()
        if cls == "nominal":
            return Nominal(self.pick(self.sig.individuals))
        d = depth - 1
        if cls == "negation":
            return Negation(self.sub(d))
        if cls == "conjunction":
            return Conjunction(self.sub(d), self.sub(d))
        if cls == "disjunction":
            return Disjunction(self.sub(d), self.sub(d))
        n = int(self.rng.integers(1, 4))
        if cls == "existential":
            return Existential(self.role(), self.sub(d))
        if cls == "universal":
            return Universal(self.role(), self.sub(d))
        if cls == "min-restriction":
            return AtLeast(n, self.role(), self.sub(d))
        if cls == "max-restriction":
            return AtMost(n, self.role(), self.sub(d))
        raise ValueError(cls)


def sample_concepts(sig: Signature, n: int, max_depth: int = 3, seed: int = 0,
                    mkb: Optional[MaterializedKB] = None, max_resample: int = 20) -> list[ConceptExpr]:
    """Draw ``n`` random concepts, stratified over the nine root constructor classes.

    Roots cycle through shuffled blocks of the nine classes, so any nine
    consecutive draws cover every class once. When ``mkb`` is given, a concept
    whose oracle extension is empty or the whole domain is redrawn (same root
    class) up to ``max_resample`` times before being kept.
    """
    if not sig.concepts or not sig.roles or not sig.individuals:
        raise DegenerateSignatureError("need at least one concept, role and individual name")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    rng = np.random.default_rng(seed)
    s = _Sampler(sig, rng)
    out: list[ConceptExpr] = []
    roots: list[str] = []
    full = frozenset(mkb.individuals) if mkb is not None else None
    while len(out) < n:
        if not roots:
            roots = [CONSTRUCTOR_CLASSES[i] for i in rng.permutation(len(CONSTRUCTOR_CLASSES))]
        cls = roots.pop(0)
        c = s.build(cls, max_depth)
        if mkb is not None:
            for _ in range(max_resample):
                ext = oracle_retrieve(c, mkb)
                if ext and ext != full:
                    break
                c = s.build(cls, max_depth)
        out.append(c)
    return out


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------

@dataclass
class BenchRow:
    concept: str
    cls: str
    oracle_size: Optional[int]
    neural_size: int
    jaccard: Optional[float]  # None when the strict oracle refused
    millis: float

    @property
    def refused(self) -> bool:
        return self.jaccard is None


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)

    def class_means(self) -> dict[str, float]:
        by: dict[str, list[float]] = {}
        for r in self.rows:
            if not r.refused:
                by.setdefault(r.cls, []).append(r.jaccard)
        return {c: float(np.mean(by[c])) for c in CONSTRUCTOR_CLASSES if c in by}

    def mean_jaccard(self) -> float:
        vals = [r.jaccard for r in self.rows if not r.refused]
        return float(np.mean(vals)) if vals else float("nan")

    def to_csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow([
                r.concept, r.cls,
                "" if r.oracle_size is None else r.oracle_size,
                r.neural_size,
                "refused" if r.refused else f"{r.jaccard:.6f}",
                f"{r.millis:.3f}" if timing else "",
            ])
        for cls, mean in self.class_means().items():
            buf.write(f"#agg,{cls},{mean:.6f}\n")
        buf.write(f"#agg,all,{self.mean_jaccard():.6f}\n")
        return buf.getvalue()


def run_benchmark(kb: KnowledgeBase,
                  predictor: Union[Predictor, kge.EmbeddingModel, str],
                  gamma: float = 0.5,
                  concepts: Optional[Sequence[ConceptExpr]] = None,
                  samples: int = 100, depth: int = 3, seed: int = 7,
                  strict: bool = False,
                  clean_kb: Optional[KnowledgeBase] = None) -> BenchReport:
    """Compare neural retrieval with oracle ground truth on sampled concepts.

    ``kb`` is the KB the predictor sees (possibly corrupted); ground truth and
    concept sampling use ``clean_kb`` when given, else ``kb``. ``predictor``
    may be a trained model, any :class:`Predictor`, or ``"perfect"`` for a
    perfect predictor over the materialized ``kb``. Rows keep sample order.
    """
    truth_kb = clean_kb if clean_kb is not None else kb
    truth = materialize(truth_kb)
    if isinstance(predictor, str):
        if predictor != "perfect":
            raise ValueError(f"unknown predictor {predictor!r}")
        predictor = PerfectPredictor(materialize(kb))
    elif isinstance(predictor, kge.EmbeddingModel):
        kge.check_fingerprint(predictor, extract_triples(kb))
        predictor = EmbeddingPredictor(predictor)
    if concepts is None:
        concepts = sample_concepts(truth_kb.signature, samples, depth, seed, mkb=truth)
    dom = NeuralDomain(truth_kb.signature.individuals, gamma)
    refused = strict and bool(detect_clashes(truth))

    report = BenchReport()
    for c in concepts:
        t0 = time.perf_counter()
        neural = retrieve(c, predictor, dom)
        millis = (time.perf_counter() - t0) * 1000.0
        if refused:
            report.rows.append(BenchRow(render_concept(c), constructor_class(c), None, len(neural), None, millis))
            continue
        try:
            gold = oracle_retrieve(c, truth, strict=strict)
        except InconsistentKBError:
            report.rows.append(BenchRow(render_concept(c), constructor_class(c), None, len(neural), None, millis))
            continue
        report.rows.append(BenchRow(render_concept(c), constructor_class(c), len(gold), len(neural),
                                    jaccard(neural, gold), millis))
    return report
