"""Seeded synthetic PRG corpora with a planted, context-dependent motif.

Every graph gets a random directed background (uniform labels and contexts,
``edge_factor * n`` distinct edges) and one copy of the motif path.  The two
classes differ only in the context carried by the motif nodes, so a kernel
that ignores contexts has nothing to separate them by.
"""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

from .graph import RESERVED, DatasetManifest, Prg, save_graph, save_manifest

DEFAULT_LABELS = (
    "getLatitude", "getLongitude", "writeBytes", "getDeviceId", "getSubscriberId",
    "getLine1Number", "getSimSerialNumber", "getCellLocation", "getLastKnownLocation",
    "requestLocationUpdates", "sendTextMessage", "sendMultipartTextMessage", "query",
    "openConnection", "connect", "execute", "getInputStream", "getOutputStream", "write",
    "read", "exec", "loadLibrary", "getInstalledPackages", "getRunningTasks", "startService",
    "sendBroadcast", "abortBroadcast", "setComponentEnabledSetting", "getAccounts",
    "takePicture",
)
CONTEXTS = ("user-aware", "user-unaware")

# Average CG size in the large Android corpus used as a scale anchor.
REAL_CG_NODES = (1556, 998)  # mean, std
REAL_CG_EDGES = 3327


class ConfigError(ValueError):
    pass


class GraphTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    n_per_class: int = 300
    node_count_range: tuple[int, int] = (50, 150)
    edge_factor: float = 2.1
    label_alphabet: tuple[str, ...] = DEFAULT_LABELS
    context_alphabet: tuple[str, ...] = CONTEXTS
    motif: tuple[str, ...] = ("getLatitude", "writeBytes")
    malicious_context: str = "user-unaware"
    benign_context: str = "user-aware"
    noise_context_flip_prob: float = 0.1

    def __post_init__(self):
        for name in ("node_count_range", "label_alphabet", "context_alphabet", "motif"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        lo, hi = self.node_count_range
        if self.n_per_class < 1:
            raise ConfigError("n_per_class must be >= 1")
        if not self.motif:
            raise ConfigError("motif must be non-empty")
        if lo < len(self.motif) or hi < lo:
            raise ConfigError(f"bad node_count_range {self.node_count_range}")
        if self.edge_factor <= 0:
            raise ConfigError("edge_factor must be > 0")
        if not 0 <= self.noise_context_flip_prob <= 1:
            raise ConfigError("noise_context_flip_prob must be in [0, 1]")
        if not self.label_alphabet or not self.context_alphabet:
            raise ConfigError("alphabets must be non-empty")
        tokens = (
            self.label_alphabet + self.context_alphabet + self.motif
            + (self.malicious_context, self.benign_context)
        )
        for tok in tokens:
            if not tok or any(r in tok for r in RESERVED):
                raise ConfigError(f"invalid label/context {tok!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**obj)

    @classmethod
    def from_json(cls, path) -> "SynthConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    def full_scale(self) -> "SynthConfig":
        """Same config at the node/edge magnitudes of real Android call graphs."""
        mean, std = REAL_CG_NODES
        d = self.to_dict()
        d.update(node_count_range=(mean - std, mean + std), edge_factor=REAL_CG_EDGES / mean)
        return SynthConfig.from_dict(d)


def _rng(seed: int, index: int) -> random.Random:
    return random.Random(f"cwlk-synth:{seed}:{index}")


def random_background(
    rng: random.Random,
    n: int,
    edge_factor: float,
    labels: Sequence[str],
    contexts: Sequence[str],
    flip_prob: float = 0.0,
) -> tuple[list[str], list[str], list[tuple[int, int]]]:
    node_labels = [rng.choice(labels) for _ in range(n)]
    node_ctx = [rng.choice(contexts) for _ in range(n)]
    n_other = max(len(contexts) - 1, 1)
    for k in range(n):
        # both draws are unconditional so the stream never depends on outcomes
        u, pick = rng.random(), rng.randrange(n_other)
        if u < flip_prob and len(contexts) > 1:
            node_ctx[k] = [c for c in contexts if c != node_ctx[k]][pick]
    m = min(round(edge_factor * n), n * (n - 1))
    edges: set[tuple[int, int]] = set()
    while len(edges) < m:
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.add((u, v))
    return node_labels, node_ctx, sorted(edges)


def _build(labels, ctx, edges, class_tag=None, name="") -> Prg:
    ids = tuple(f"n{k}" for k in range(len(labels)))
    return Prg(
        ids,
        tuple((ids[u], ids[v]) for u, v in edges),
        dict(zip(ids, labels)),
        {i: (c,) if isinstance(c, str) else tuple(sorted(c)) for i, c in zip(ids, ctx)},
        class_tag,
        name,
    )


def inject_motif(g: Prg, motif: Sequence[str], context: str, rng=None) -> Prg:
    """Plant ``motif`` on a random simple path of distinct nodes.

    The chosen nodes are relabeled in order and given the single context
    ``context``.  Every motif node except the last keeps exactly one
    out-edge, to its successor on the path, so the motif's neighbourhood
    labels do not depend on the background.
    """
    if len(motif) > g.n_nodes:
        raise GraphTooSmall(f"motif of length {len(motif)} in a {g.n_nodes}-node graph")
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    path = [g.nodes[k] for k in rng.sample(range(g.n_nodes), len(motif))]
    labels = dict(g.labels)
    contexts = dict(g.contexts)
    for n, label in zip(path, motif):
        labels[n] = label
        contexts[n] = (context,)
    sources = set(path[:-1])
    path_edges = list(zip(path, path[1:]))
    edges = [e for e in g.edges if e[0] not in sources] + path_edges
    idx = g.index
    edges.sort(key=lambda e: (idx[e[0]], idx[e[1]]))
    return Prg(g.nodes, tuple(edges), labels, contexts, g.class_tag, g.name)


def generate_graph(cfg: SynthConfig, index: int, class_tag: str, name: str = "") -> Prg:
    """Graph number ``index`` of a corpus; the class only picks the motif context."""
    rng = _rng(cfg.seed, index)
    n = rng.randint(*cfg.node_count_range)
    labels, ctx, edges = random_background(
        rng, n, cfg.edge_factor, cfg.label_alphabet, cfg.context_alphabet,
        cfg.noise_context_flip_prob,
    )
    g = _build(labels, ctx, edges, class_tag, name)
    context = cfg.malicious_context if class_tag == "malicious" else cfg.benign_context
    return inject_motif(g, cfg.motif, context, rng)


def generate_corpus(cfg: SynthConfig) -> tuple[list[Prg], DatasetManifest]:
    graphs = []
    for k in range(2 * cfg.n_per_class):
        tag = "malicious" if k < cfg.n_per_class else "benign"
        j = k % cfg.n_per_class
        graphs.append(generate_graph(cfg, k, tag, f"{tag[:3]}_{j:04d}"))
    manifest = DatasetManifest(
        entries=[(f"{g.name}.json", g.class_tag) for g in graphs],
        name=f"synth-{cfg.seed}",
        split_seed=cfg.seed,
    )
    return graphs, manifest


def write_corpus(graphs: Sequence[Prg], manifest: DatasetManifest, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for g, (path, _) in zip(graphs, manifest.entries):
        save_graph(g, out / path)
    target = out / "manifest.json"
    save_manifest(manifest, target)
    return target


def random_graph(seed: int, n: int, m: int, labels=DEFAULT_LABELS, contexts=CONTEXTS) -> Prg:
    """Plain seeded background graph with ``n`` nodes and about ``m`` edges."""
    rng = random.Random(f"cwlk-random:{seed}:{n}:{m}")
    node_labels, ctx, edges = random_background(rng, n, m / n, labels, contexts)
    return _build(node_labels, ctx, edges, name=f"rand_{seed}_{n}_{m}")
