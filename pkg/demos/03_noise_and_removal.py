"""Reasoning over corrupted copies of family-small.

Noise: random false assertions create disjointness clashes, so a strict
oracle refuses to answer, while the embedding still retrieves.
Removal: dropping 10% of the ABox hurts both, and the oracle can re-derive
superclass memberships through the TBox that the embedding has to guess.
"""

import numpy as np

from ebr import CorruptionSpec, TrainConfig, corrupt_kb, extract_triples, materialize, oracle_retrieve, run_benchmark, train
from ebr.dl import AtomicConcept
from ebr.harness import jaccard
from ebr.neural import EmbeddingPredictor, NeuralDomain, retrieve
from ebr.oracle import detect_clashes
from ebr.fixtures import load_fixture

clean = load_fixture("family-small")
truth = materialize(clean)

noisy = corrupt_kb(clean, CorruptionSpec("noise", 0.2, seed=0))
clashes = detect_clashes(materialize(noisy))
print(f"noise: {len(noisy.abox) - len(clean.abox)} assertions added, {len(clashes)} clashes, e.g.")
for c in clashes[:3]:
    print("   ", c.describe())
rep = run_benchmark(noisy, train(extract_triples(noisy), TrainConfig()), clean_kb=clean)
print(f"strict oracle: refuses; embedding mean Jaccard vs clean = {rep.mean_jaccard():.3f}")

reduced = corrupt_kb(clean, CorruptionSpec("remove", 0.1, seed=0))
p = EmbeddingPredictor(train(extract_triples(reduced), TrainConfig()))
dom = NeuralDomain(clean.signature.individuals)
mkb = materialize(reduced)
print(f"\nremoval: {len(clean.abox) - len(reduced.abox)} assertions dropped")
for name in clean.signature.concepts:
    a = AtomicConcept(name)
    gold = oracle_retrieve(a, truth)
    print(f"  {name:<12} oracle {jaccard(oracle_retrieve(a, mkb), gold):.3f}   "
          f"embedding {jaccard(retrieve(a, p, dom), gold):.3f}")
