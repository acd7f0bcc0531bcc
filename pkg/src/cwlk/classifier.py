"""Linear max-margin classifier over bag-of-features vectors, and metrics.

Training minimises the L2-regularised hinge loss in the primal with
Pegasos-style stochastic subgradient steps on max-abs scaled features.
The bias is folded in as a constant feature.
Class ``malicious`` is the positive class.
"""
from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .graph import DatasetManifest
from .kernel import FeatureVector, VocabularyMismatch, to_csr

MALICIOUS = "malicious"
BENIGN = "benign"
REG_GRID = (1e-2, 1e-3, 1e-4, 1e-5)


class EmptyTrainingSet(ValueError):
    pass


class SingleClassTraining(ValueError):
    pass


class EmptyTestSet(ValueError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    reg: float = 1e-4
    epochs: int = 20
    seed: int = 42

    def __post_init__(self):
        if self.reg <= 0:
            raise ValueError("reg must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class LinearModel:
    weights: dict[int, float]
    bias: float
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    vocab: str = ""

    def score(self, v: FeatureVector) -> float:
        if self.vocab and v.vocab and v.vocab != self.vocab:
            raise VocabularyMismatch(f"model vocabulary {self.vocab!r}, vector {v.vocab!r}")
        w = self.weights
        return math.fsum([w.get(k, 0.0) * c for k, c in sorted(v.counts.items())]) + self.bias

    def to_dict(self) -> dict:
        return {
            "bias": self.bias,
            "weights": [[k, w] for k, w in sorted(self.weights.items())],
            "hyperparams": asdict(self.hyperparams),
            "vocab_hash": self.vocab,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "LinearModel":
        return cls(
            {int(k): float(w) for k, w in obj["weights"]},
            float(obj["bias"]),
            Hyperparams(**obj["hyperparams"]),
            obj.get("vocab_hash", ""),
        )


def _signs(tags: Sequence[str]) -> np.ndarray:
    return np.array([1.0 if t == MALICIOUS else -1.0 for t in tags])


def train(
    train_set: Sequence[tuple[FeatureVector, str]],
    hp: Hyperparams = Hyperparams(),
    n_features: int | None = None,
) -> LinearModel:
    if not train_set:
        raise EmptyTrainingSet("no training samples")
    vectors = [v for v, _ in train_set]
    y = _signs([t for _, t in train_set])
    if len(set(y.tolist())) < 2:
        raise SingleClassTraining("training set holds a single class")
    vocabs = {v.vocab for v in vectors}
    if len(vocabs) > 1:
        raise VocabularyMismatch(f"mixed vocabularies {sorted(vocabs)}")

    if n_features is None:
        n_features = 1 + max((k for v in vectors for k in v.counts), default=-1)
    counts = to_csr(vectors, n_features)
    # Divide each feature by its largest training value.  Raw counts mix
    # node-label tallies in the dozens with rare neighbourhood features of
    # count 1; without this the rare ones barely move in a few epochs.
    col_max = np.asarray(abs(counts).max(axis=0).todense()).ravel()
    col_max[col_max == 0] = 1.0
    ones = sp.csr_matrix(np.ones((len(vectors), 1)))  # constant bias column
    X = sp.hstack([counts @ sp.diags(1.0 / col_max), ones], format="csr")
    X.sort_indices()
    indptr, indices, data = X.indptr, X.indices, X.data

    lam = hp.reg
    # Step size 1 / (lam * (t + t0)).  The offset t0 caps the first step at
    # about 1 / E||x||^2 instead of 1 / lam, which otherwise throws the early
    # iterates far off when count features have very different magnitudes.
    sq_norms = np.add.reduceat(data * data, indptr[:-1])
    t0 = float(np.mean(sq_norms)) / lam
    w = np.zeros(n_features + 1)
    scale = 1.0  # true weights are scale * w, which keeps the shrink step O(1)
    rng = np.random.default_rng(hp.seed)
    t = 0
    for _ in range(hp.epochs):
        for r in rng.permutation(len(y)):
            eta = 1.0 / (lam * (t + t0))
            t += 1
            lo, hi = indptr[r], indptr[r + 1]
            idx, val = indices[lo:hi], data[lo:hi]
            margin = y[r] * scale * float(w[idx] @ val)
            scale *= 1.0 - eta * lam
            if margin < 1.0:
                w[idx] += (eta * y[r] / scale) * val
            if scale < 1e-9:
                w *= scale
                scale = 1.0
    w *= scale
    w[:n_features] /= col_max  # back to raw-count space

    model = LinearModel(
        {int(k): float(w[k]) for k in np.flatnonzero(w[:n_features])},
        float(w[n_features]),
        hp,
        vectors[0].vocab,
    )
    # never do worse on the training data than the all-benign zero model
    zero = LinearModel({}, 0.0, hp, model.vocab)
    if _accuracy(model, train_set) < _accuracy(zero, train_set):
        return zero
    return model


def _accuracy(m: LinearModel, samples) -> float:
    hits = sum(predict(m, v)[0] == t for v, t in samples)
    return hits / len(samples)


def predict(m: LinearModel, v: FeatureVector) -> tuple[str, float]:
    """Return ``(class, score)``; a score of exactly 0 counts as benign."""
    s = m.score(v)
    return (MALICIOUS if s > 0 else BENIGN), s


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f_measure: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, tn: int, fn: int) -> "EvalReport":
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return cls(tp, fp, tn, fn, p, r, f)

    @classmethod
    def from_predictions(cls, truth: Sequence[str], pred: Sequence[str]) -> "EvalReport":
        tp = fp = tn = fn = 0
        for t, p in zip(truth, pred, strict=True):
            if p == MALICIOUS:
                if t == MALICIOUS:
                    tp += 1
                else:
                    fp += 1
            elif t == MALICIOUS:
                fn += 1
            else:
                tn += 1
        return cls.from_counts(tp, fp, tn, fn)

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(m: LinearModel, test_set: Sequence[tuple[FeatureVector, str]]) -> EvalReport:
    if not test_set:
        raise EmptyTestSet("no test samples")
    return EvalReport.from_predictions(
        [t for _, t in test_set], [predict(m, v)[0] for v, _ in test_set]
    )


# --- splitting -------------------------------------------------------------

def stratified_split(
    tags: Sequence[str], fraction, seed: int
) -> tuple[list[int], list[int]]:
    """Split positions ``0..len(tags)-1`` into train/test, stratified by tag.

    The train size is ``floor(n * fraction)``; per-class quotas are floored
    and the leftover goes to the classes with the largest remainders, never
    emptying a class's test share when that can be avoided.  Both lists come
    back in input order.
    """
    fraction = Fraction(fraction).limit_denominator(10**6)
    by_class: dict[str, list[int]] = {}
    for k, t in enumerate(tags):
        by_class.setdefault(t, []).append(k)
    classes = sorted(by_class, key=lambda c: (c != MALICIOUS, c))
    n_train = math.floor(len(tags) * fraction)
    quota = {c: math.floor(len(by_class[c]) * fraction) for c in classes}
    rem = {c: len(by_class[c]) * fraction - quota[c] for c in classes}
    leftover = n_train - sum(quota.values())
    order = sorted(classes, key=lambda c: (-rem[c], classes.index(c)))
    order = [c for c in order if len(by_class[c]) - quota[c] > 1] + [
        c for c in order if len(by_class[c]) - quota[c] <= 1
    ]
    for c in order:
        if leftover <= 0:
            break
        if quota[c] < len(by_class[c]):
            quota[c] += 1
            leftover -= 1

    rng = random.Random(seed)
    train, test = [], []
    for c in classes:
        members = list(by_class[c])
        rng.shuffle(members)
        train += members[: quota[c]]
        test += members[quota[c]:]
    return sorted(train), sorted(test)


def split(manifest: DatasetManifest, seed: int | None = None) -> tuple[list[str], list[str]]:
    """Stratified train/test split of a manifest's labelled entries, by path."""
    labelled = [(p, c) for p, c in manifest.entries if c in (MALICIOUS, BENIGN)]
    seed = manifest.split_seed if seed is None else seed
    tr, te = stratified_split([c for _, c in labelled], manifest.fraction, seed)
    return [labelled[k][0] for k in tr], [labelled[k][0] for k in te]


def stratified_folds(tags: Sequence[str], k: int, seed: int) -> list[tuple[list[int], list[int]]]:
    rng = random.Random(seed)
    fold_of = [0] * len(tags)
    for c in sorted(set(tags)):
        members = [i for i, t in enumerate(tags) if t == c]
        rng.shuffle(members)
        for pos, i in enumerate(members):
            fold_of[i] = pos % k
    return [
        ([i for i in range(len(tags)) if fold_of[i] != f], [i for i in range(len(tags)) if fold_of[i] == f])
        for f in range(k)
    ]


def grid_search(
    train_set: Sequence[tuple[FeatureVector, str]],
    grid: Sequence[float] = REG_GRID,
    folds: int = 5,
    hp: Hyperparams = Hyperparams(),
    n_features: int | None = None,
) -> tuple[float, dict[float, float]]:
    """Pick ``reg`` by mean k-fold F-measure; ties go to the earlier grid value."""
    tags = [t for _, t in train_set]
    splits = stratified_folds(tags, folds, hp.seed)
    scores: dict[float, float] = {}
    for reg in grid:
        fold_hp = Hyperparams(reg, hp.epochs, hp.seed)
        fs = []
        for tr, va in splits:
            sub = [train_set[i] for i in tr]
            if not va or len({t for _, t in sub}) < 2:
                continue
            m = train(sub, fold_hp, n_features)
            fs.append(evaluate(m, [train_set[i] for i in va]).f_measure)
        scores[reg] = float(np.mean(fs)) if fs else 0.0
    best = max(grid, key=lambda g: scores[g])
    return best, scores
