import random

import pytest
from hypothesis import strategies as st

from cwlk.fixtures import geinimi, yahoo_weather
from cwlk.graph import Prg, make_prg

LABELS = ("a", "b", "c")
CONTEXTS = ("x", "y")


@st.composite
def prgs(draw, max_nodes=8, labels=LABELS, contexts=CONTEXTS, min_nodes=1):
    """Small random valid PRG; self-loops allowed, no parallel edges."""
    n = draw(st.integers(min_nodes, max_nodes))
    ids = [f"v{k}" for k in range(n)]
    triples = [
        (
            i,
            draw(st.sampled_from(labels)),
            sorted(draw(st.sets(st.sampled_from(contexts), min_size=1))),
        )
        for i in ids
    ]
    pairs = [(u, v) for u in ids for v in ids]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=3 * n)) if pairs else []
    return make_prg(triples, edges)


def random_prg(rng: random.Random, max_nodes=15, labels=LABELS, contexts=CONTEXTS) -> Prg:
    n = rng.randint(1, max_nodes)
    ids = [f"v{k}" for k in range(n)]
    triples = [
        (i, rng.choice(labels), rng.sample(contexts, rng.randint(1, len(contexts))))
        for i in ids
    ]
    m = rng.randint(0, min(3 * n, n * n))
    edges = rng.sample([(u, v) for u in ids for v in ids], m)
    return make_prg(triples, edges)


def permuted(g: Prg, rng: random.Random) -> Prg:
    """Same graph with shuffled node declaration order and edge order."""
    nodes = list(g.nodes)
    rng.shuffle(nodes)
    edges = list(g.edges)
    rng.shuffle(edges)
    return Prg(tuple(nodes), tuple(edges), dict(g.labels), dict(g.contexts), g.class_tag, g.name)


@pytest.fixture
def gein():
    return geinimi()


@pytest.fixture
def yahoo():
    return yahoo_weather()
