"""Knowledge-graph embedding models: ComplEx, DistMult and TransE in numpy.

Parameters are stored as two float64 matrices. For ComplEx each row holds the
real half followed by the imaginary half (``2 * dim`` columns); the other
scorers use ``dim`` columns.

Training minimizes binary cross-entropy over the positives of a
:class:`~ebr.triples.TripleGraph` and ``k`` uniformly corrupted negatives per
positive, with analytic gradients and a dense Adam (or plain SGD) update.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .triples import TripleGraph

logger = logging.getLogger(__name__)

SCORERS = ("complex", "distmult", "transe")
FORMAT_VERSION = 1
LOG_CLAMP = 1e-12
MAX_RESAMPLE = 100


class TrainingError(RuntimeError):
    pass


class ModelFormatError(ValueError):
    pass


class FingerprintWarning(UserWarning):
    pass


def vocab_fingerprint(entities, relations) -> str:
    """FNV-1a 64-bit hash (hex) of the sorted entity and relation vocabularies.

    Names are joined with U+001F inside a vocabulary and the two vocabularies
    with U+001E before hashing the UTF-8 bytes.
    """
    data = ("\x1f".join(sorted(entities)) + "\x1e" + "\x1f".join(sorted(relations))).encode("utf-8")
    h = 0xcbf29ce484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001b3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


@dataclass(eq=False)
class EmbeddingModel:
    scorer: str
    dim: int
    entities: tuple[str, ...]
    relations: tuple[str, ...]
    entity_params: np.ndarray
    relation_params: np.ndarray

    def __post_init__(self):
        if self.scorer not in SCORERS:
            raise ValueError(f"unknown scorer {self.scorer!r}; expected one of {SCORERS}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        self.entities = tuple(self.entities)
        self.relations = tuple(self.relations)
        self.entity_params = np.asarray(self.entity_params, dtype=np.float64)
        self.relation_params = np.asarray(self.relation_params, dtype=np.float64)
        width = self.width
        if self.entity_params.shape != (len(self.entities), width):
            raise ValueError(f"entity_params shape {self.entity_params.shape} != {(len(self.entities), width)}")
        if self.relation_params.shape != (len(self.relations), width):
            raise ValueError(f"relation_params shape {self.relation_params.shape} != {(len(self.relations), width)}")
        self._eidx = {n: i for i, n in enumerate(self.entities)}
        self._ridx = {n: i for i, n in enumerate(self.relations)}

    @property
    def width(self) -> int:
        return 2 * self.dim if self.scorer == "complex" else self.dim

    @property
    def fingerprint(self) -> str:
        return vocab_fingerprint(self.entities, self.relations)

    def entity_index(self, name: str) -> int:
        return self._eidx[name]

    def relation_index(self, name: str) -> int:
        return self._ridx[name]

    def has_entity(self, name: str) -> bool:
        return name in self._eidx

    def has_relation(self, name: str) -> bool:
        return name in self._ridx

    def same_params(self, other: "EmbeddingModel") -> bool:
        return (self.scorer == other.scorer and self.dim == other.dim
                and self.entities == other.entities and self.relations == other.relations
                and np.array_equal(self.entity_params, other.entity_params)
                and np.array_equal(self.relation_params, other.relation_params))


@dataclass
class TrainConfig:
    epochs: int = 256
    lr: float = 0.01
    negatives: int = 8
    batch_size: int = 512
    seed: int = 42
    optimizer: str = "adam"
    init_scale: float = 0.1
    scorer: str = "complex"
    dim: int = 32
    both_prob: float = 1.0 / 3.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")
        if not self.init_scale > 0:
            raise ValueError("init_scale must be > 0")
        if self.scorer not in SCORERS:
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def _check_ids(m: EmbeddingModel, h=None, r=None, t=None):
    ne, nr = len(m.entities), len(m.relations)
    for v, n, what in ((h, ne, "entity"), (t, ne, "entity"), (r, nr, "relation")):
        if v is not None and not (0 <= int(v) < n):
            raise IndexError(f"{what} id {v} out of vocabulary (size {n})")


def _halves(a: np.ndarray, d: int):
    return a[..., :d], a[..., d:]


def _tail_query(m: EmbeddingModel, h: int, r: int) -> np.ndarray:
    """Vector q with score(h, r, t) = sum(q * E[t]) (transe: translated head)."""
    x, rel = m.entity_params[h], m.relation_params[r]
    if m.scorer == "complex":
        xr, xi = _halves(x, m.dim)
        rr, ri = _halves(rel, m.dim)
        return np.concatenate([xr * rr - xi * ri, xr * ri + xi * rr])
    if m.scorer == "distmult":
        return x * rel
    return x + rel


def _score_rows(m: EmbeddingModel, q: np.ndarray, tails: np.ndarray) -> np.ndarray:
    # tails: (n, width); identical arithmetic for one row or many keeps results bit-equal
    if m.scorer == "transe":
        diff = q - tails
        return -np.sqrt((diff * diff).sum(axis=-1))
    return (tails * q).sum(axis=-1)


def score(m: EmbeddingModel, h: int, r: int, t: int) -> float:
    _check_ids(m, h, r, t)
    return float(_score_rows(m, _tail_query(m, h, r), m.entity_params[t]))


def score_all_tails(m: EmbeddingModel, h: int, r: int) -> np.ndarray:
    """Scores of (h, r, t) for every entity t in one vectorized pass."""
    _check_ids(m, h, r)
    return _score_rows(m, _tail_query(m, h, r), m.entity_params)


def score_all_heads(m: EmbeddingModel, r: int, t: int) -> np.ndarray:
    """Scores of (x, r, t) for every entity x in one vectorized pass."""
    _check_ids(m, None, r, t)
    y, rel = m.entity_params[t], m.relation_params[r]
    E = m.entity_params
    if m.scorer == "complex":
        yr, yi = _halves(y, m.dim)
        rr, ri = _halves(rel, m.dim)
        q = np.concatenate([rr * yr + ri * yi, rr * yi - ri * yr])
        return (E * q).sum(axis=1)
    if m.scorer == "distmult":
        return (E * (rel * y)).sum(axis=1)
    diff = E + (rel - y)
    return -np.sqrt((diff * diff).sum(axis=1))


def score_batch(m: EmbeddingModel, triples: np.ndarray) -> np.ndarray:
    """Scores for an ``(n, 3)`` array of id triples."""
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    x = m.entity_params[triples[:, 0]]
    rel = m.relation_params[triples[:, 1]]
    y = m.entity_params[triples[:, 2]]
    if m.scorer == "complex":
        d = m.dim
        xr, xi = _halves(x, d)
        rr, ri = _halves(rel, d)
        yr, yi = _halves(y, d)
        return (xr * rr * yr + xr * ri * yi + xi * rr * yi - xi * ri * yr).sum(axis=1)
    if m.scorer == "distmult":
        return (x * rel * y).sum(axis=1)
    diff = x + rel - y
    return -np.sqrt((diff * diff).sum(axis=1))


def sigmoid(x):
    """Numerically stable logistic function (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def predict(m: EmbeddingModel, h: int, r: int, t: int) -> float:
    return sigmoid(score(m, h, r, t))


# ---------------------------------------------------------------------------
# Loss and gradients
# ---------------------------------------------------------------------------

@dataclass
class Gradients:
    entity: np.ndarray
    relation: np.ndarray


def _score_grads(m: EmbeddingModel, triples: np.ndarray):
    """Per-row d score / d (head, relation, tail) parameters."""
    x = m.entity_params[triples[:, 0]]
    rel = m.relation_params[triples[:, 1]]
    y = m.entity_params[triples[:, 2]]
    if m.scorer == "complex":
        d = m.dim
        xr, xi = _halves(x, d)
        rr, ri = _halves(rel, d)
        yr, yi = _halves(y, d)
        gx = np.concatenate([rr * yr + ri * yi, rr * yi - ri * yr], axis=1)
        gr = np.concatenate([xr * yr + xi * yi, xr * yi - xi * yr], axis=1)
        gy = np.concatenate([xr * rr - xi * ri, xr * ri + xi * rr], axis=1)
        return gx, gr, gy
    if m.scorer == "distmult":
        return rel * y, x * y, x * rel
    diff = x + rel - y
    norm = np.sqrt((diff * diff).sum(axis=1, keepdims=True))
    g = -np.divide(diff, norm, out=np.zeros_like(diff), where=norm > 0)
    return g, g, -g


def bce_terms(scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-item -[y log s(x) + (1-y) log(1-s(x))], with the logs clamped at 1e-12."""
    cap = -math.log(LOG_CLAMP)
    pos_loss = np.minimum(np.logaddexp(0.0, -scores), cap)
    neg_loss = np.minimum(np.logaddexp(0.0, scores), cap)
    return labels * pos_loss + (1.0 - labels) * neg_loss


def loss_and_grad(m: EmbeddingModel, triples: np.ndarray, labels: np.ndarray) -> tuple[float, Gradients]:
    """Mean binary cross-entropy over a labeled batch and its analytic gradient."""
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != (len(triples),):
        raise ValueError("labels must have one entry per triple")
    if np.any((labels != 0) & (labels != 1)):
        raise ValueError("labels must be 0 or 1")
    n = len(triples)
    s = score_batch(m, triples)
    loss = float(bce_terms(s, labels).mean()) if n else 0.0
    coef = ((sigmoid(s) - labels) / max(n, 1))[:, None]
    gx, gr, gy = _score_grads(m, triples)
    ge = np.zeros_like(m.entity_params)
    grel = np.zeros_like(m.relation_params)
    np.add.at(ge, triples[:, 0], coef * gx)
    np.add.at(grel, triples[:, 1], coef * gr)
    np.add.at(ge, triples[:, 2], coef * gy)
    return loss, Gradients(ge, grel)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def init_model(g: TripleGraph, cfg: TrainConfig, rng: np.random.Generator) -> EmbeddingModel:
    width = 2 * cfg.dim if cfg.scorer == "complex" else cfg.dim
    ent = rng.uniform(-cfg.init_scale, cfg.init_scale, size=(len(g.entities), width))
    rel = rng.uniform(-cfg.init_scale, cfg.init_scale, size=(len(g.relations), width))
    return EmbeddingModel(cfg.scorer, cfg.dim, g.entities, g.relations, ent, rel)


def corrupt(pos: np.ndarray, k: int, n_entities: int, n_relations: int, known_keys: np.ndarray,
            rng: np.random.Generator, both_prob: float = 0.0) -> np.ndarray:
    """k negatives per positive by replacing head or tail with a uniform entity.

    With probability ``both_prob`` a negative replaces head and tail at once.
    A corruption that is itself a known triple is redrawn, up to 100 times.
    """
    neg = np.repeat(pos, k, axis=0)
    u = rng.random(len(neg))
    side = np.where(u < 0.5, 0, 2)
    rows = np.arange(len(neg))
    neg[rows, side] = rng.integers(0, n_entities, size=len(neg))
    both = np.flatnonzero(rng.random(len(neg)) < both_prob)
    neg[both, 2 - side[both]] = rng.integers(0, n_entities, size=len(both))

    def known(t):
        keys = (t[:, 0] * n_relations + t[:, 1]) * n_entities + t[:, 2]
        idx = np.searchsorted(known_keys, keys)
        idx = np.minimum(idx, len(known_keys) - 1)
        return known_keys[idx] == keys

    for _ in range(MAX_RESAMPLE):
        bad = np.flatnonzero(known(neg))
        if not len(bad):
            break
        neg[bad, side[bad]] = rng.integers(0, n_entities, size=len(bad))
    return neg


class _Adam:
    def __init__(self, shapes, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(g: TripleGraph, cfg: TrainConfig | None = None,
          on_epoch: Optional[Callable[[int, float], None]] = None) -> EmbeddingModel:
    """Fit an embedding model to ``g``; deterministic for a fixed ``cfg``.

    ``on_epoch(epoch, mean_loss)`` is called after every epoch (epochs count
    from 1). Raises :class:`TrainingError` on an empty graph or a non-finite
    loss.
    """
    cfg = cfg or TrainConfig()
    if len(g) == 0:
        raise TrainingError("cannot train on an empty graph")
    rng = np.random.default_rng(cfg.seed)
    model = init_model(g, cfg, rng)
    params = [model.entity_params, model.relation_params]
    opt = _Adam([p.shape for p in params], cfg.lr) if cfg.optimizer == "adam" else None
    keys = g.encoded_keys()
    ne, nr = len(g.entities), len(g.relations)
    triples = g.triples
    k = cfg.negatives
    labels_template = None
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(triples))
        total, count = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            pos = triples[order[start:start + cfg.batch_size]]
            neg = corrupt(pos, k, ne, nr, keys, rng, cfg.both_prob)
            batch = np.concatenate([pos, neg])
            if labels_template is None or len(labels_template) != len(batch):
                labels_template = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
            loss, grads = loss_and_grad(model, batch, labels_template)
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite loss {loss} at epoch {epoch}, batch offset {start}")
            if opt is not None:
                opt.step(params, [grads.entity, grads.relation])
            else:
                model.entity_params -= cfg.lr * grads.entity
                model.relation_params -= cfg.lr * grads.relation
            if not (np.isfinite(model.entity_params).all() and np.isfinite(model.relation_params).all()):
                raise TrainingError(f"non-finite parameters after epoch {epoch}, batch offset {start}")
            total += loss * len(batch)
            count += len(batch)
        epoch_loss = total / count
        logger.debug("epoch %d loss %.6f", epoch, epoch_loss)
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss)
    return model


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def model_to_json(m: EmbeddingModel) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "scorer": m.scorer,
        "dim": m.dim,
        "entities": list(m.entities),
        "relations": list(m.relations),
        "entity_params": m.entity_params.tolist(),
        "relation_params": m.relation_params.tolist(),
        "vocab_fingerprint": m.fingerprint,
    }
    return json.dumps(doc) + "\n"


def model_from_json(text: str) -> EmbeddingModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not a model file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file must hold a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {doc.get('format_version')!r}")
    try:
        dim = int(doc["dim"])
        ent = np.array(doc["entity_params"], dtype=np.float64).reshape(len(doc["entities"]), -1)
        rel = np.array(doc["relation_params"], dtype=np.float64).reshape(len(doc["relations"]), -1)
        m = EmbeddingModel(doc["scorer"], dim, doc["entities"], doc["relations"], ent, rel)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    if doc.get("vocab_fingerprint") != m.fingerprint:
        raise ModelFormatError("stored vocab_fingerprint does not match the stored vocabulary")
    return m


def check_fingerprint(m: EmbeddingModel, g: TripleGraph) -> bool:
    """Warn (and return False) if ``m`` was trained on a different vocabulary than ``g``."""
    expected = vocab_fingerprint(g.entities, g.relations)
    if expected != m.fingerprint:
        warnings.warn(f"model vocabulary fingerprint {m.fingerprint} does not match "
                      f"graph fingerprint {expected}", FingerprintWarning, stacklevel=2)
        return False
    return True


def save_model(m: EmbeddingModel, path) -> None:
    Path(path).write_text(model_to_json(m), encoding="utf-8")


def load_model(path, graph: TripleGraph | None = None) -> EmbeddingModel:
    """Read a model file; if ``graph`` is given, warn on a vocabulary mismatch."""
    m = model_from_json(Path(path).read_text(encoding="utf-8"))
    if graph is not None:
        check_fingerprint(m, graph)
    return m
