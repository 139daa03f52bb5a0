"""Embedding-based instance retrieval for description-logic knowledge bases.

The package pairs a neural reasoner, which answers SHOIQ concept queries by
thresholding link predictions of a trained embedding model, with a
materialization-based symbolic oracle used as ground truth.
"""

from .dl import KnowledgeBase, parse_concept, parse_kb, render_concept, render_kb
from .harness import CorruptionSpec, corrupt_kb, jaccard, run_benchmark, sample_concepts
from .kge import EmbeddingModel, TrainConfig, load_model, save_model, train
from .neural import EmbeddingPredictor, NeuralDomain, PerfectPredictor, retrieve
from .oracle import InconsistentKBError, materialize, oracle_retrieve
from .triples import TripleGraph, extract_triples

__version__ = "0.1.0"
