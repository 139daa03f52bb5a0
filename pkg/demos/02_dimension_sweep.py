"""How embedding size drives retrieval quality on family-small.

Trains ComplEx at a few dimensions and benchmarks each model on the same
100 sampled concepts, printing per-class mean Jaccard.
"""

import time

from ebr import TrainConfig, extract_triples, run_benchmark, train
from ebr.fixtures import load_fixture

kb = load_fixture("family-small")
g = extract_triples(kb)
print(f"{len(g)} triples, {len(g.entities)} entities, {len(g.relations)} relations")

for dim in (2, 8, 32):
    t0 = time.perf_counter()
    model = train(g, TrainConfig(dim=dim))
    rep = run_benchmark(kb, model, samples=100)
    means = " ".join(f"{c[:6]}={v:.2f}" for c, v in rep.class_means().items())
    print(f"d={dim:<3} mean={rep.mean_jaccard():.3f}  {means}  ({time.perf_counter() - t0:.1f}s)")
