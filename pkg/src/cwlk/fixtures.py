"""The Geinimi / Yahoo Weather location-leak graphs.

Both apps read the latitude and longitude and write them to a socket, so the
two data-dependency graphs are identical.  Geinimi does it from a background
event (``user-unaware``); Yahoo Weather only after the user opens the app
(``user-aware``).
"""
from __future__ import annotations

from importlib import resources

from .graph import Prg, load_graph, make_prg

LEAK_NODES = (("n1", "getLatitude"), ("n2", "getLongitude"), ("n3", "writeBytes"))
LEAK_EDGES = (("n1", "n3"), ("n2", "n3"))


def leak_graph(context: str, class_tag=None, name: str = "") -> Prg:
    return make_prg(
        [(n, label, [context]) for n, label in LEAK_NODES], LEAK_EDGES, class_tag, name
    )


def geinimi() -> Prg:
    return leak_graph("user-unaware", "malicious", "geinimi")


def yahoo_weather() -> Prg:
    return leak_graph("user-aware", "benign", "yahoo_weather")


def data_path(name: str):
    """Path of a bundled fixture file, e.g. ``data_path("geinimi.json")``."""
    return resources.files("cwlk") / "data" / name


def load_fixture(name: str) -> Prg:
    with data_path(name).open("rb") as fh:
        g = load_graph(fh)
    return Prg(g.nodes, g.edges, g.labels, g.contexts, g.class_tag, name.rsplit(".", 1)[0])
