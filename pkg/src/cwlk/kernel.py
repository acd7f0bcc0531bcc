"""WL / contextual WL kernels through explicit bag-of-features vectors.

A graph's feature vector counts, for every iteration ``i <= h``, how many of
its nodes carry a given raw label string.  The kernel between two graphs is
the dot product of their vectors, which equals the number of node pairs with
matching labels at the same iteration (see :func:`brute_force_kernel`).
"""
from __future__ import annotations

import csv
import hashlib
import io
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .graph import CLOSE, CSEP, JSEP, OPEN, SEP, Prg
from .relabel import CONTEXTUAL, MODES, WL, Relabeler, RelabelSequence, relabel

IGNORE = "ignore"
STRICT = "strict"


class UnknownFeature(KeyError):
    pass


class VocabularyMismatch(ValueError):
    pass


class Vocabulary:
    """Bijection between ``(iteration, raw label)`` keys and feature indices."""

    def __init__(self, kind: str = CONTEXTUAL):
        if kind not in MODES:
            raise ValueError(f"unknown vocabulary kind {kind!r}")
        self.kind = kind
        self.entries: dict[tuple[int, str], int] = {}
        self.frozen = False
        self._fingerprint: str | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key) -> bool:
        return key in self.entries

    def add(self, i: int, s: str) -> int:
        idx = self.entries.get((i, s))
        if idx is None:
            if self.frozen:
                raise UnknownFeature((i, s))
            idx = self.entries[(i, s)] = len(self.entries)
        return idx

    def get(self, i: int, s: str) -> int | None:
        return self.entries.get((i, s))

    def add_sequence(self, seq: RelabelSequence, h: int | None = None) -> None:
        render = _renderer(seq, self.kind)
        codes = seq.codes(self.kind)
        top = seq.height if h is None else h
        for i in range(top + 1):
            for code in dict.fromkeys(codes[i]):
                self.add(i, render(code))

    def freeze(self) -> "Vocabulary":
        self.frozen = True
        self._fingerprint = None
        return self

    @property
    def fingerprint(self) -> str:
        if self._fingerprint is None or not self.frozen:
            digest = hashlib.sha256(self.kind.encode())
            for (i, s), idx in sorted(self.entries.items(), key=lambda kv: kv[1]):
                digest.update(f"\x00{idx}\x00{i}\x00{s}".encode("utf-8"))
            fp = digest.hexdigest()[:16]
            if not self.frozen:
                return fp
            self._fingerprint = fp
        return self._fingerprint

    @classmethod
    def build(cls, sequences: Iterable[RelabelSequence], kind: str = CONTEXTUAL, h=None):
        vocab = cls(kind)
        for seq in sequences:
            vocab.add_sequence(seq, h)
        return vocab.freeze()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "fingerprint": self.fingerprint,
            "entries": [[i, s] for (i, s), _ in sorted(self.entries.items(), key=lambda kv: kv[1])],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Vocabulary":
        vocab = cls(obj["kind"])
        for i, s in obj["entries"]:
            vocab.add(int(i), s)
        return vocab.freeze()


def _renderer(seq: RelabelSequence, mode: str):
    r = seq.relabeler
    return r.wl_string if mode == WL else r.contextual_string


@dataclass
class FeatureVector:
    counts: dict[int, int]
    graph_id: str = ""
    vocab: str = ""  # fingerprint of the vocabulary the indices refer to

    def total(self) -> int:
        return sum(self.counts.values())

    def items(self):
        return sorted(self.counts.items())


def featurize(
    seq: RelabelSequence,
    vocab: Vocabulary,
    mode: str | None = None,
    policy: str = IGNORE,
    h: int | None = None,
) -> FeatureVector:
    """Count raw labels of ``seq`` over iterations ``0..h`` against ``vocab``.

    Labels unknown to a frozen vocabulary are dropped under ``policy="ignore"``
    and raise :class:`UnknownFeature` under ``"strict"``.  An unfrozen
    vocabulary grows instead.
    """
    mode = mode or vocab.kind
    if mode != vocab.kind:
        raise VocabularyMismatch(f"{mode} features against a {vocab.kind} vocabulary")
    if policy not in (IGNORE, STRICT):
        raise ValueError(f"unknown policy {policy!r}")
    render = _renderer(seq, mode)
    codes = seq.codes(mode)
    top = seq.height if h is None else h
    counts: dict[int, int] = {}
    for i in range(top + 1):
        for code, c in Counter(codes[i]).items():
            key = (i, render(code))
            idx = vocab.entries.get(key)
            if idx is None:
                if not vocab.frozen:
                    idx = vocab.add(*key)
                elif policy == STRICT:
                    raise UnknownFeature(key)
                else:
                    continue
            counts[idx] = counts.get(idx, 0) + c
    return FeatureVector(counts, seq.graph.name, vocab.fingerprint if vocab.frozen else "")


def kernel_value(u: FeatureVector, v: FeatureVector) -> int:
    if u.vocab != v.vocab:
        raise VocabularyMismatch(f"{u.vocab!r} != {v.vocab!r}")
    if len(v.counts) < len(u.counts):
        u, v = v, u
    other = v.counts
    return sum(c * other.get(k, 0) for k, c in u.counts.items())


def to_csr(vectors: Sequence[FeatureVector], n_features: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for r, fv in enumerate(vectors):
        for k, c in fv.counts.items():
            rows.append(r)
            cols.append(k)
            vals.append(c)
    return sp.csr_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(len(vectors), n_features)
    )


@dataclass
class KernelMatrix:
    values: np.ndarray
    graph_ids: list[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.values)

    def to_csv(self, dest=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.graph_ids)
        integral = np.all(self.values == np.round(self.values))
        for row in self.values:
            w.writerow([int(x) if integral else repr(float(x)) for x in row])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text, encoding="utf-8")
        return text


def featurize_corpus(
    corpus: Sequence[Prg],
    h: int,
    mode: str = CONTEXTUAL,
    vocab: Vocabulary | None = None,
    relabeler: Relabeler | None = None,
    policy: str = IGNORE,
) -> tuple[list[FeatureVector], Vocabulary]:
    """Relabel ``corpus`` and vectorise it.

    Without ``vocab`` a vocabulary is built over the corpus and frozen; with
    one, the given (frozen) vocabulary is reused, as for a test split.
    """
    r = relabeler or Relabeler()
    seqs = [relabel(g, h, mode, r) for g in corpus]
    if vocab is None:
        vocab = Vocabulary.build(seqs, mode)
    return [featurize(s, vocab, mode, policy) for s in seqs], vocab


def gram(vectors: Sequence[FeatureVector], n_features: int, normalize: bool = False) -> np.ndarray:
    X = to_csr(vectors, n_features)
    K = (X @ X.T).toarray()
    if normalize:
        d = np.sqrt(np.diag(K))
        with np.errstate(divide="ignore", invalid="ignore"):
            K = np.where(np.outer(d, d) > 0, K / np.outer(d, d), 0.0)
    return K


def kernel_matrix(
    corpus: Sequence[Prg], h: int, mode: str = CONTEXTUAL, normalize: bool = False
) -> KernelMatrix:
    if not corpus:
        raise ValueError("corpus must be non-empty")
    vectors, vocab = featurize_corpus(corpus, h, mode)
    ids = [g.name or str(k) for k, g in enumerate(corpus)]
    return KernelMatrix(gram(vectors, len(vocab), normalize), ids)


def naive_raw_labels(g: Prg, h: int, mode: str = CONTEXTUAL) -> list[list[str]]:
    """Raw label strings by direct string construction, with no interning."""
    succ = {n: [] for n in g.nodes}
    for u, v in g.edges:
        succ[u].append(v)
    lam = {n: g.labels[n] for n in g.nodes}
    rounds = [dict(lam)]
    for i in range(1, h + 1):
        new = {}
        for n in g.nodes:
            own, nbrs = lam[n], [lam[m] for m in succ[n]]
            if i > 1:
                own = OPEN + own + CLOSE
                nbrs = [OPEN + s + CLOSE for s in nbrs]
            new[n] = own + SEP + SEP.join(sorted(nbrs))
        lam = new
        rounds.append(dict(lam))
    if mode == WL:
        return [[r[n] for n in g.nodes] for r in rounds]
    return [
        [JSEP.join(c + CSEP + r[n] for c in sorted(g.contexts[n])) for n in g.nodes]
        for r in rounds
    ]


def brute_force_kernel(g: Prg, g2: Prg, h: int, mode: str = CONTEXTUAL) -> int:
    """Count node pairs ``(n, n')`` whose raw labels agree at the same iteration."""
    a, b = naive_raw_labels(g, h, mode), naive_raw_labels(g2, h, mode)
    return sum(1 for i in range(h + 1) for s in a[i] for t in b[i] if s == t)


def export_vectors(vectors: Sequence[FeatureVector], dest: str | os.PathLike | None = None) -> str:
    """Sparse text format, one line per graph: ``graph_id idx:count ...``."""
    lines = []
    for fv in vectors:
        parts = [fv.graph_id or "-"] + [f"{k}:{c}" for k, c in fv.items()]
        lines.append(" ".join(parts))
    text = "\n".join(lines) + "\n"
    if dest is not None:
        Path(dest).write_text(text, encoding="utf-8")
    return text


def import_vectors(text: str, vocab: str = "") -> list[FeatureVector]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        gid, *pairs = line.split()
        counts = {int(k): int(c) for k, c in (p.split(":") for p in pairs)}
        out.append(FeatureVector(counts, "" if gid == "-" else gid, vocab))
    return out
