"""Shared fixtures and cached training runs (training dominates test time)."""

from functools import lru_cache

import pytest
from hypothesis import strategies as st

from ebr import dl
from ebr.fixtures import load_fixture
from ebr.harness import CorruptionSpec, corrupt_kb
from ebr.kge import TrainConfig, train
from ebr.triples import extract_triples

CONCEPTS = ("A", "B", "C")
ROLES = ("r", "s")
INDIVIDUALS = ("a", "b")


def _roles():
    atomic = st.sampled_from(ROLES)
    return st.one_of(atomic.map(dl.AtomicRole), atomic.map(dl.InverseRole), st.just(dl.UniversalRole()))


def concept_strategy():
    leaves = st.one_of(
        st.sampled_from(CONCEPTS).map(dl.AtomicConcept),
        st.just(dl.Top()), st.just(dl.Bottom()),
        st.sampled_from(INDIVIDUALS).map(dl.Nominal),
    )

    def extend(children):
        n = st.integers(0, 5)
        return st.one_of(
            children.map(dl.Negation),
            st.builds(dl.Conjunction, children, children),
            st.builds(dl.Disjunction, children, children),
            st.builds(dl.Existential, _roles(), children),
            st.builds(dl.Universal, _roles(), children),
            st.builds(dl.AtLeast, n, _roles(), children),
            st.builds(dl.AtMost, n, _roles(), children),
        )

    return st.recursive(leaves, extend, max_leaves=8)


@lru_cache(maxsize=None)
def kb_named(name):
    return load_fixture(name)


@lru_cache(maxsize=None)
def corrupted(name, mode, ratio, seed):
    return corrupt_kb(kb_named(name), CorruptionSpec(mode, ratio, seed))


@lru_cache(maxsize=None)
def trained(kb_key, **cfg):
    """Train on a fixture (``"family-small"``) or a corruption key tuple."""
    kb = kb_named(kb_key) if isinstance(kb_key, str) else corrupted(*kb_key)
    return train(extract_triples(kb), TrainConfig(**cfg))


@pytest.fixture(scope="session")
def family():
    return kb_named("family-small")


@pytest.fixture(scope="session")
def family_model():
    return trained("family-small", dim=32, seed=42)
