import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cwlk.graph import Prg, dumps_graph, load_corpus, load_manifest, make_prg, validate
from cwlk.kernel import featurize_corpus, to_csr
from cwlk.relabel import WL
from cwlk.synth import (
    ConfigError,
    GraphTooSmall,
    SynthConfig,
    generate_corpus,
    generate_graph,
    inject_motif,
    random_graph,
    write_corpus,
)


def has_motif_path(g: Prg, motif, context) -> bool:
    """Depth-first search for a simple path whose labels spell ``motif``."""

    def ok(n, label):
        return g.labels[n] == label and g.contexts[n] == (context,)

    def extend(path):
        if len(path) == len(motif):
            return True
        for u, v in g.edges:
            if u == path[-1] and v not in path and ok(v, motif[len(path)]):
                if extend(path + [v]):
                    return True
        return False

    return any(ok(n, motif[0]) and extend([n]) for n in g.nodes)


def collapse(g: Prg) -> Prg:
    return Prg(g.nodes, g.edges, g.labels, {n: ("c",) for n in g.nodes})


def small(**kw):
    return SynthConfig(**{"n_per_class": 10, "node_count_range": (20, 40), **kw})


def test_determinism_byte_identical(tmp_path):
    cfg = SynthConfig(seed=7, n_per_class=5)
    for d in ("a", "b"):
        write_corpus(*generate_corpus(cfg), tmp_path / d)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(files) == 11 and "manifest.json" in files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_written_corpus_loads_back(tmp_path):
    graphs, m = generate_corpus(small(n_per_class=3))
    path = write_corpus(graphs, m, tmp_path)
    back = load_corpus(load_manifest(path))
    assert [g.class_tag for g in back] == ["malicious"] * 3 + ["benign"] * 3
    assert all(a == b for a, b in zip(graphs, back))


@pytest.mark.parametrize("tag, ctx", [("malicious", "user-unaware"), ("benign", "user-aware")])
def test_every_graph_carries_the_motif(tag, ctx):
    graphs, _ = generate_corpus(small())
    cfg = small()
    for g in graphs:
        if g.class_tag == tag:
            assert has_motif_path(g, cfg.motif, ctx)
            assert validate(g) == []


def test_sizes_in_range():
    cfg = small()
    for g in generate_corpus(cfg)[0]:
        lo, hi = cfg.node_count_range
        assert lo <= g.n_nodes <= hi


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 50), st.sampled_from([0.0, 0.1, 0.5]))
def test_classes_differ_only_in_motif_context(seed, index, noise):
    cfg = small(seed=seed, noise_context_flip_prob=noise)
    mal = generate_graph(cfg, index, "malicious")
    ben = generate_graph(cfg, index, "benign")
    assert dumps_graph(collapse(mal)) == dumps_graph(collapse(ben))
    changed = [n for n in mal.nodes if mal.contexts[n] != ben.contexts[n]]
    assert 0 < len(changed) <= len(cfg.motif)


def test_wl_features_do_not_separate_classes():
    """Two-sample permutation test on WL mean vectors, zero context noise."""
    cfg = SynthConfig(seed=3, n_per_class=60, noise_context_flip_prob=0.0)
    graphs, _ = generate_corpus(cfg)
    vecs, vocab = featurize_corpus(graphs, 1, WL)
    X = to_csr(vecs, len(vocab)).toarray()
    y = np.array([g.class_tag == "malicious" for g in graphs])

    def stat(mask):
        return np.linalg.norm(X[mask].mean(0) - X[~mask].mean(0))

    observed = stat(y)
    rng = np.random.default_rng(0)
    perms = 999
    hits = sum(stat(rng.permutation(y)) >= observed for _ in range(perms))
    p = (hits + 1) / (perms + 1)
    assert p > 0.01


class TestInjectMotif:
    def test_edgeless_graph(self):
        g = make_prg([(f"n{k}", "z", ["x"]) for k in range(3)])
        out = inject_motif(g, ["a", "b"], "c", rng=0)
        (u, v), = out.edges
        assert (out.labels[u], out.labels[v]) == ("a", "b")
        assert out.contexts[u] == out.contexts[v] == ("c",)

    def test_too_small(self):
        g = make_prg([("n", "z", ["x"])])
        with pytest.raises(GraphTooSmall):
            inject_motif(g, ["a", "b"], "c")

    def test_injecting_twice_keeps_the_motif(self):
        g = random_graph(3, 40, 80)
        once = inject_motif(g, ["a", "b"], "c", rng=1)
        twice = inject_motif(once, ["a", "b"], "c", rng=2)
        assert has_motif_path(twice, ["a", "b"], "c")

    def test_path_sources_keep_only_path_edge(self):
        g = random_graph(1, 30, 90)
        out = inject_motif(g, ["a", "b", "d"], "c", rng=4)
        marked = [n for n in out.nodes if out.labels[n] in "abd" and out.contexts[n] == ("c",)]
        first = next(n for n in marked if out.labels[n] == "a")
        assert [out.labels[v] for u, v in out.edges if u == first] == ["b"]
        assert validate(out) == []


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"n_per_class": 0},
            {"node_count_range": (1, 10)},
            {"node_count_range": (20, 10)},
            {"edge_factor": 0},
            {"noise_context_flip_prob": 1.5},
            {"motif": ()},
            {"label_alphabet": ("a,b",)},
            {"malicious_context": "x|y"},
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            SynthConfig(**kw)

    def test_json_round_trip(self, tmp_path):
        cfg = small(seed=9)
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(cfg.to_dict()))
        assert SynthConfig.from_json(p) == cfg

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            SynthConfig.from_dict({"colour": 1})

    def test_full_scale(self):
        cfg = SynthConfig().full_scale()
        lo, hi = cfg.node_count_range
        assert lo < 1556 < hi
        assert cfg.edge_factor == pytest.approx(3327 / 1556)


def test_random_graph_shape():
    g = random_graph(2, 100, 210)
    assert (g.n_nodes, g.n_edges) == (100, 210)
    assert all(u != v for u, v in g.edges)
    assert random_graph(2, 100, 210) == g
