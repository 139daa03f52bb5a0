"""Bundled desk-scale knowledge bases.

=================  =====  =======  =====  ====  ====
name               ind.   classes  roles  TBox  ABox
=================  =====  =======  =====  ====  ====
father                 6        4      1     3     4
family-small          40       10      4    15   332
inconsistent-abc       1        3      0     3     1
incomplete-knows       4        1      1     0     5
=================  =====  =======  =====  ====  ====

``family-small`` also carries ``FunctionalObjectProperty(married)`` and a
disjointness axiom between ``Male`` and ``Female`` so that injected noise can
produce clashes.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..dl import KnowledgeBase, parse_kb

FIXTURES = ("father", "family-small", "inconsistent-abc", "incomplete-knows")


def fixture_path(name: str) -> Path:
    """Filesystem path of the ``.dl`` file for fixture ``name``."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; expected one of {FIXTURES}")
    return Path(str(resources.files(__name__).joinpath(f"{name}.dl")))


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")


def load_fixture(name: str) -> KnowledgeBase:
    return parse_kb(fixture_text(name))
