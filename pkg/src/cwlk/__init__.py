"""Weisfeiler-Lehman graph kernels with per-node contexts (CWLK)."""
from .classifier import EvalReport, Hyperparams, LinearModel, evaluate, predict, train
from .graph import (
    DatasetManifest,
    ParseError,
    Prg,
    ValidationError,
    load_graph,
    load_manifest,
    make_prg,
    out_neighbors,
    validate,
)
from .kernel import FeatureVector, Vocabulary, featurize, kernel_matrix, kernel_value
from .relabel import CONTEXTUAL, WL, LabelDictionary, Relabeler, relabel
from .synth import SynthConfig, generate_corpus

__version__ = "0.1.0"
VOCAB_FORMAT = 1

__all__ = [
    "CONTEXTUAL", "WL", "DatasetManifest", "EvalReport", "FeatureVector", "Hyperparams",
    "LabelDictionary", "LinearModel", "ParseError", "Prg", "Relabeler", "SynthConfig",
    "ValidationError", "Vocabulary", "evaluate", "featurize", "generate_corpus",
    "kernel_matrix", "kernel_value", "load_graph", "load_manifest", "make_prg",
    "out_neighbors", "predict", "relabel", "train", "validate",
]
