"""Train/evaluate a detector on a labelled corpus, repeated over re-splits."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classifier import (
    REG_GRID,
    EvalReport,
    Hyperparams,
    LinearModel,
    evaluate,
    grid_search,
    stratified_split,
    train,
)
from .graph import Prg
from .kernel import Vocabulary, featurize
from .relabel import CONTEXTUAL, Relabeler, relabel


@dataclass
class RunResult:
    report: EvalReport
    model: LinearModel
    vocab: Vocabulary
    reg: float
    cv_scores: dict[float, float]
    split_seed: int
    timings: dict[str, float] = field(default_factory=dict)


@dataclass
class PipelineResult:
    h: int
    mode: str
    runs: list[RunResult]

    def mean(self) -> dict[str, float]:
        return {
            k: float(np.mean([getattr(r.report, k) for r in self.runs]))
            for k in ("precision", "recall", "f_measure")
        }

    def report_dict(self) -> dict:
        return {
            "h": self.h,
            "mode": self.mode,
            "runs": [
                {"split_seed": r.split_seed, "reg": r.reg, **r.report.to_dict()} for r in self.runs
            ],
            "mean": self.mean(),
        }


def run_pipeline(
    graphs: Sequence[Prg],
    h: int,
    mode: str = CONTEXTUAL,
    hp: Hyperparams = Hyperparams(),
    train_fraction=0.6,
    split_seed: int = 0,
    repeat: int = 1,
    grid: Sequence[float] | None = REG_GRID,
    folds: int = 5,
) -> PipelineResult:
    """Relabel once, then for each re-split build the vocabulary on the train
    part, pick ``reg`` by k-fold CV on the train part, fit and evaluate.

    Re-split ``r`` uses split seed ``split_seed + r``.
    """
    tags = [g.class_tag for g in graphs]
    t0 = time.perf_counter()
    r = Relabeler()
    seqs = [relabel(g, h, mode, r) for g in graphs]
    relabel_s = time.perf_counter() - t0

    runs = []
    for rep in range(repeat):
        seed = split_seed + rep
        tr, te = stratified_split(tags, train_fraction, seed)
        t0 = time.perf_counter()
        vocab = Vocabulary.build((seqs[i] for i in tr), mode)
        train_set = [(featurize(seqs[i], vocab, mode), tags[i]) for i in tr]
        test_set = [(featurize(seqs[i], vocab, mode), tags[i]) for i in te]
        featurize_s = time.perf_counter() - t0

        t0 = time.perf_counter()
        if grid:
            reg, scores = grid_search(train_set, grid, folds, hp, len(vocab))
        else:
            reg, scores = hp.reg, {}
        model = train(train_set, Hyperparams(reg, hp.epochs, hp.seed), len(vocab))
        train_s = time.perf_counter() - t0

        t0 = time.perf_counter()
        report = evaluate(model, test_set)
        test_s = time.perf_counter() - t0
        runs.append(
            RunResult(
                report, model, vocab, reg, scores, seed,
                {"relabel": relabel_s, "featurize": featurize_s, "train": train_s, "test": test_s},
            )
        )
    return PipelineResult(h, mode, runs)
