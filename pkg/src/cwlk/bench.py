"""Runtime scaling and feature-count measurements.

Timings use ``time.perf_counter`` with 2 warm-up runs followed by the median
of 5 measured runs, garbage collection paused.  The timed code is pure Python and runs on the calling
thread only.
"""
from __future__ import annotations

import csv
import gc
import io
import json
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .classifier import Hyperparams
from .graph import Prg
from .kernel import Vocabulary, featurize, gram
from .pipeline import run_pipeline
from .relabel import CONTEXTUAL, MODES, Relabeler, contextual_relabel, relabel
from .synth import random_graph

WARMUP = 2
REPEATS = 5
# Acceptance corridor for the ratio of relabel times when the input doubles.
# This is a test tolerance, not a published figure.
LINEAR_CORRIDOR = (1.5, 3.0)
HEIGHT_CORRIDOR = (1.4, 3.0)


def timing_samples(
    fns: Sequence[Callable[[], object]], warmup: int = WARMUP, repeats: int = REPEATS
) -> list[list[float]]:
    """Wall times of ``repeats`` interleaved rounds, one list per callable.

    Each round calls every callable once in order, so callables that sit
    next to each other are measured moments apart and suffer the same
    machine-speed drift.  The cyclic GC is paused while timing, as ``timeit``
    does.
    """
    for fn in fns:
        for _ in range(warmup):
            fn()
    samples: list[list[float]] = [[] for _ in fns]
    enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repeats):
            for fn, acc in zip(fns, samples):
                t0 = time.perf_counter()
                fn()
                acc.append(time.perf_counter() - t0)
    finally:
        if enabled:
            gc.enable()
    return samples


def median_times(fns, warmup: int = WARMUP, repeats: int = REPEATS) -> list[float]:
    return [statistics.median(s) for s in timing_samples(fns, warmup, repeats)]


def paired_ratio(slow: Sequence[float], fast: Sequence[float]) -> float:
    """Median of round-by-round ratios ``slow[k] / fast[k]``."""
    return statistics.median(a / b for a, b in zip(slow, fast))


def median_time(fn: Callable[[], object], warmup: int = WARMUP, repeats: int = REPEATS) -> float:
    return median_times([fn], warmup, repeats)[0]


def _relabel_job(g: Prg, h: int, mode: str):
    return lambda: relabel(g, h, mode, Relabeler())


def time_relabel(g: Prg, h: int, mode: str = CONTEXTUAL, **kw) -> float:
    """Median seconds of one relabeling of ``g`` with a fresh dictionary."""
    return median_time(_relabel_job(g, h, mode), **kw)


@dataclass
class ScalingPoint:
    edges: int
    nodes: int
    seconds: float


@dataclass
class ScalingReport:
    h: int
    points: list[ScalingPoint]
    slope: float | None  # least-squares slope of log(seconds) on log(edges)
    paired: list[float] = field(default_factory=list)

    def ratios(self) -> list[float]:
        """Time ratio between consecutive sizes: median of paired per-round ratios."""
        if self.paired:
            return list(self.paired)
        p = self.points
        return [b.seconds / a.seconds for a, b in zip(p, p[1:])]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "edges", "nodes", "relabel_seconds"])
        for pt in self.points:
            w.writerow([self.h, pt.edges, pt.nodes, f"{pt.seconds:.6g}"])
        w.writerow(["slope", "n/a" if self.slope is None else f"{self.slope:.4f}", "", ""])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "points": [asdict(p) for p in self.points],
            "slope": self.slope,
            "ratios": self.ratios(),
            "corridor": list(LINEAR_CORRIDOR),
        }


def run_scaling(
    seeds: Sequence[int],
    edge_counts: Sequence[int],
    h: int,
    edge_factor: float = 2.1,
    mode: str = CONTEXTUAL,
    warmup: int = WARMUP,
    repeats: int = REPEATS,
) -> ScalingReport:
    """Time relabeling of seeded random graphs at each edge count.

    Node counts follow ``edges / edge_factor`` so the mean degree stays fixed
    while the graph grows.  Each point is the median over seeds of the
    per-graph median time; consecutive-size ratios are medians of ratios
    taken within a seed and round.  No slope is fitted for ``h == 0``.
    """
    if len(edge_counts) < 3 or any(b <= a for a, b in zip(edge_counts, edge_counts[1:])):
        raise ValueError("edge_counts must be strictly increasing with at least 3 points")
    if not seeds:
        raise ValueError("need at least one seed")
    sizes = [(e, max(2, round(e / edge_factor))) for e in edge_counts]
    # for each seed the sizes run back to back, so doubling pairs are adjacent
    jobs = [_relabel_job(random_graph(s, n, e), h, mode) for s in seeds for e, n in sizes]
    samples = timing_samples(jobs, warmup, repeats)
    m = len(sizes)
    per_size = [[samples[k * m + j] for k in range(len(seeds))] for j in range(m)]
    points = [
        ScalingPoint(e, n, statistics.median(statistics.median(x) for x in per_size[j]))
        for j, (e, n) in enumerate(sizes)
    ]
    paired = []
    for j in range(1, m):
        ratios = [
            b / a
            for k in range(len(seeds))
            for a, b in zip(per_size[j - 1][k], per_size[j][k])
        ]
        paired.append(statistics.median(ratios))
    slope = None
    if h > 0:
        x = np.log([p.edges for p in points])
        y = np.log([max(p.seconds, 1e-12) for p in points])
        slope = float(np.polyfit(x, y, 1)[0])
    return ScalingReport(h, points, slope, paired)


def height_ratio(g: Prg, h_lo: int = 1, h_hi: int = 2, **kw) -> tuple[float, float, float]:
    """Median times at two heights and the median paired ratio ``t_hi / t_lo``."""
    lo, hi = timing_samples([_relabel_job(g, h_lo, CONTEXTUAL), _relabel_job(g, h_hi, CONTEXTUAL)], **kw)
    return statistics.median(lo), statistics.median(hi), paired_ratio(hi, lo)


def feature_growth(corpus: Sequence[Prg], h_max: int) -> list[tuple[int, int, int]]:
    """Vocabulary sizes ``(h, |wl|, |contextual|)`` for ``h = 0..h_max``.

    A vocabulary at height ``h`` holds every distinct ``(i, label)`` with
    ``i <= h`` over the corpus, so sizes are cumulative.
    """
    if not corpus:
        raise ValueError("corpus must be non-empty")
    r = Relabeler()
    seqs = [contextual_relabel(g, h_max, r) for g in corpus]
    out = []
    wl_seen: set[int] = set()
    ctx_seen: set[int] = set()
    for i in range(h_max + 1):
        for s in seqs:
            wl_seen.update(s.wl_labels[i])
            ctx_seen.update(s.contextual_labels[i])
        out.append((i, len(wl_seen), len(ctx_seen)))
    return out


@dataclass
class BenchRow:
    h: int
    mode: str
    corpus_size: int
    mean_edges: float
    vocab_size: int
    relabel_seconds: float
    featurize_seconds: float
    matrix_seconds: float
    train_seconds: float
    test_seconds: float


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)

    def sort(self) -> "BenchReport":
        self.rows.sort(key=lambda r: (r.mode, r.h))
        return self

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(BenchRow.__dataclass_fields__)
        w.writerow(names)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, k)) for k in names])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows]}


def _fmt(x):
    return f"{x:.6g}" if isinstance(x, float) else x


def run_bench(
    corpus: Sequence[Prg],
    heights: Sequence[int] = (0, 1, 2),
    modes: Sequence[str] = MODES,
    hp: Hyperparams = Hyperparams(),
    train_fraction=0.6,
    split_seed: int = 0,
) -> BenchReport:
    """Time each pipeline stage per (mode, h); one pass each, no warm-up."""
    report = BenchReport()
    mean_e = float(np.mean([g.n_edges for g in corpus]))
    for mode in modes:
        for h in heights:
            t0 = time.perf_counter()
            r = Relabeler()
            seqs = [relabel(g, h, mode, r) for g in corpus]
            t_rel = time.perf_counter() - t0
            t0 = time.perf_counter()
            vocab = Vocabulary.build(seqs, mode)
            vecs = [featurize(s, vocab, mode) for s in seqs]
            t_feat = time.perf_counter() - t0
            t0 = time.perf_counter()
            gram(vecs, len(vocab))
            t_mat = time.perf_counter() - t0
            res = run_pipeline(
                corpus, h, mode, hp, train_fraction, split_seed, repeat=1, grid=None
            ).runs[0]
            report.rows.append(
                BenchRow(
                    h, mode, len(corpus), mean_e, len(vocab), t_rel, t_feat, t_mat,
                    res.timings["train"], res.timings["test"],
                )
            )
    return report.sort()


def write_gnuplot(growth: Sequence[tuple[int, int, int]], path) -> None:
    lines = ["# h wl_features contextual_features"]
    lines += [f"{h} {a} {b}" for h, a, b in growth]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def summary(scaling: ScalingReport | None = None, growth=None, bench: BenchReport | None = None) -> str:
    obj: dict = {}
    if scaling is not None:
        obj["scaling"] = scaling.to_dict()
    if growth is not None:
        obj["feature_growth"] = [{"h": h, "wl": a, "contextual": b} for h, a, b in growth]
    if bench is not None:
        obj["bench"] = bench.to_dict()
    return json.dumps(obj, indent=2)
