"""Program representation graphs: data model, validation and JSON formats.

A PRG is a directed graph whose nodes carry one label (the security-sensitive
operation) and a non-empty set of context strings (the conditions under which
the node is reachable).  Graphs are immutable once loaded.
"""
from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Literal, Mapping, Sequence, Union

ClassTag = Literal["malicious", "benign", "unlabeled"]
CLASS_TAGS = ("malicious", "benign", "unlabeled")

# Separators used when rendering neighbourhood labels.  Labels and contexts
# containing any of these are rejected so rendered strings decode uniquely.
SEP = ","
CSEP = "(+)"
JSEP = "|"
OPEN, CLOSE = "{", "}"
RESERVED = (SEP, CSEP, JSEP, OPEN, CLOSE)

DEFAULT_CONTEXT = "default"

_GRAPH_KEYS = {"nodes", "edges", "class"}
_NODE_KEYS = {"id", "label", "contexts"}
_MANIFEST_KEYS = {"name", "entries", "split_seed", "train_fraction"}

PathLike = Union[str, os.PathLike]


class GraphError(Exception):
    """Base class for graph loading problems."""


class ParseError(GraphError):
    """The input is not well-formed graph JSON."""


class ValidationError(GraphError):
    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class UnknownNode(KeyError):
    pass


# --- violations -----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    locus: object

    def __str__(self) -> str:
        return f"{type(self).__name__}({self.locus!r})"


class DuplicateNode(Violation):
    pass


class EmptyLabel(Violation):
    pass


class EmptyContextSet(Violation):
    pass


class DuplicateContext(Violation):
    pass


class DanglingEdge(Violation):
    pass


class DuplicateEdge(Violation):
    pass


@dataclass(frozen=True)
class ReservedToken(Violation):
    value: str = ""

    def __str__(self) -> str:
        return f"ReservedToken({self.locus!r}, {self.value!r})"


# --- model ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Prg:
    """Directed graph with per-node label and context set.

    ``nodes`` keeps declaration order, which fixes neighbour ordering and the
    order in which relabeling visits nodes.  ``name`` is informational only.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    labels: Mapping[str, str]
    contexts: Mapping[str, tuple[str, ...]]
    class_tag: ClassTag | None = None
    name: str = field(default="", compare=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Prg):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.edges == other.edges
            and dict(self.labels) == dict(other.labels)
            and dict(self.contexts) == dict(other.contexts)
            and self.class_tag == other.class_tag
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.nodes)}

    @cached_property
    def successors(self) -> list[list[int]]:
        """Out-neighbour indices per node, in node declaration order."""
        succ: list[list[int]] = [[] for _ in self.nodes]
        idx = self.index
        for u, v in self.edges:
            succ[idx[u]].append(idx[v])
        for s in succ:
            s.sort()
        return succ

    def with_class(self, class_tag: ClassTag | None) -> "Prg":
        return Prg(self.nodes, self.edges, self.labels, self.contexts, class_tag, self.name)


def make_prg(
    nodes: Iterable[tuple[str, str, Iterable[str]]],
    edges: Iterable[tuple[str, str]] = (),
    class_tag: ClassTag | None = None,
    name: str = "",
) -> Prg:
    """Build a Prg from ``(id, label, contexts)`` triples; contexts get sorted."""
    ids, labels, contexts = [], {}, {}
    for node_id, label, ctx in nodes:
        ids.append(node_id)
        labels[node_id] = label
        contexts[node_id] = tuple(sorted(ctx))
    return Prg(tuple(ids), tuple((u, v) for u, v in edges), labels, contexts, class_tag, name)


def validate(g: Prg) -> list[Violation]:
    """Return every invariant violation of ``g``; an empty list means valid."""
    out: list[Violation] = []
    seen: set[str] = set()
    for n in g.nodes:
        if n in seen:
            out.append(DuplicateNode(n))
        seen.add(n)
        label = g.labels.get(n, "")
        if not label:
            out.append(EmptyLabel(n))
        elif _has_reserved(label):
            out.append(ReservedToken(n, label))
        ctx = g.contexts.get(n, ())
        if not ctx:
            out.append(EmptyContextSet(n))
        elif len(set(ctx)) != len(ctx):
            out.append(DuplicateContext(n))
        for c in ctx:
            if _has_reserved(c):
                out.append(ReservedToken(n, c))
    seen_edges: set[tuple[str, str]] = set()
    for e in g.edges:
        missing = [x for x in e if x not in seen]
        if missing:
            out.append(DanglingEdge(e))
        if e in seen_edges:
            out.append(DuplicateEdge(e))
        seen_edges.add(e)
    return out


def _has_reserved(s: str) -> bool:
    return any(tok in s for tok in RESERVED)


def out_neighbors(g: Prg, n: str) -> list[str]:
    try:
        i = g.index[n]
    except KeyError:
        raise UnknownNode(n) from None
    return [g.nodes[j] for j in g.successors[i]]


# --- graph JSON -------------------------------------------------------------

def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return Path(source).read_bytes().decode("utf-8")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def graph_from_dict(obj, default_context: bool = False, name: str = "") -> Prg:
    if not isinstance(obj, dict):
        raise ParseError("graph JSON must be an object")
    extra = set(obj) - _GRAPH_KEYS
    if extra:
        raise ParseError(f"unknown top-level keys: {sorted(extra)}")
    if "nodes" not in obj:
        raise ParseError("missing 'nodes'")
    raw_nodes = obj["nodes"]
    raw_edges = obj.get("edges", [])
    if not isinstance(raw_nodes, list) or not isinstance(raw_edges, list):
        raise ParseError("'nodes' and 'edges' must be arrays")
    class_tag = obj.get("class")
    if class_tag is not None and class_tag not in CLASS_TAGS:
        raise ParseError(f"bad class {class_tag!r}")

    ids, labels, contexts = [], {}, {}
    for rn in raw_nodes:
        if not isinstance(rn, dict) or set(rn) - _NODE_KEYS or "id" not in rn:
            raise ParseError(f"malformed node entry {rn!r}")
        node_id, label, ctx = rn["id"], rn.get("label", ""), rn.get("contexts", [])
        if not isinstance(node_id, str) or not isinstance(label, str):
            raise ParseError(f"node id and label must be strings: {rn!r}")
        if not isinstance(ctx, list) or not all(isinstance(c, str) for c in ctx):
            raise ParseError(f"contexts must be a list of strings: {rn!r}")
        if not ctx and default_context:
            ctx = [DEFAULT_CONTEXT]
        ids.append(node_id)
        labels[node_id] = label
        contexts[node_id] = tuple(sorted(ctx))

    edges = []
    for re_ in raw_edges:
        if not (isinstance(re_, list) and len(re_) == 2 and all(isinstance(x, str) for x in re_)):
            raise ParseError(f"malformed edge {re_!r}")
        edges.append((re_[0], re_[1]))
    return Prg(tuple(ids), tuple(edges), labels, contexts, class_tag, name)


def load_graph(source: PathLike | IO, default_context: bool = False) -> Prg:
    """Parse and validate a graph-JSON document.

    ``source`` is a path or an open (binary or text) stream.  Raises
    ParseError for malformed input and ValidationError when the graph breaks
    a model invariant.  With ``default_context`` an empty context list is
    replaced by the single context ``"default"``.
    """
    name = Path(source).stem if isinstance(source, (str, os.PathLike)) else ""
    try:
        obj = json.loads(_read_text(source))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(str(exc)) from exc
    g = graph_from_dict(obj, default_context=default_context, name=name)
    problems = validate(g)
    if problems:
        raise ValidationError(problems)
    return g


def loads_graph(text: str | bytes, default_context: bool = False) -> Prg:
    if isinstance(text, str):
        text = text.encode("utf-8")
    return load_graph(io.BytesIO(text), default_context=default_context)


def graph_to_dict(g: Prg) -> dict:
    obj: dict = {
        "nodes": [
            {"id": n, "label": g.labels[n], "contexts": list(g.contexts[n])} for n in g.nodes
        ],
        "edges": [[u, v] for u, v in g.edges],
    }
    if g.class_tag is not None:
        obj["class"] = g.class_tag
    return obj


def dumps_graph(g: Prg) -> str:
    return json.dumps(graph_to_dict(g), ensure_ascii=False, separators=(",", ":")) + "\n"


def save_graph(g: Prg, dest: PathLike | IO) -> None:
    text = dumps_graph(g)
    if isinstance(dest, (str, os.PathLike)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)


# --- dataset manifest -------------------------------------------------------

@dataclass
class DatasetManifest:
    entries: list[tuple[str, ClassTag]]
    name: str = "dataset"
    split_seed: int = 0
    train_fraction: float = 0.6
    root: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        paths = [p for p, _ in self.entries]
        if len(set(paths)) != len(paths):
            raise ParseError("duplicate manifest paths")
        if not 0 < self.train_fraction < 1:
            raise ParseError(f"train_fraction must be in (0, 1), got {self.train_fraction}")

    @property
    def fraction(self) -> Fraction:
        return Fraction(str(self.train_fraction)).limit_denominator(10**6)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.root / p

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "entries": [{"path": p, "class": c} for p, c in self.entries],
            "split_seed": self.split_seed,
            "train_fraction": self.train_fraction,
        }


def load_manifest(path: PathLike) -> DatasetManifest:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(str(exc)) from exc
    if not isinstance(obj, dict):
        raise ParseError("manifest must be an object")
    extra = set(obj) - _MANIFEST_KEYS
    if extra:
        raise ParseError(f"unknown manifest keys: {sorted(extra)}")
    try:
        entries = [(e["path"], e["class"]) for e in obj["entries"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed manifest entries: {exc}") from exc
    for _, c in entries:
        if c not in CLASS_TAGS:
            raise ParseError(f"bad class {c!r}")
    return DatasetManifest(
        entries=entries,
        name=obj.get("name", path.stem),
        split_seed=int(obj.get("split_seed", 0)),
        train_fraction=float(obj.get("train_fraction", 0.6)),
        root=path.parent,
    )


def save_manifest(m: DatasetManifest, path: PathLike) -> None:
    Path(path).write_text(json.dumps(m.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_corpus(m: DatasetManifest, default_context: bool = False, threads: int = 1) -> list[Prg]:
    """Load every manifest entry; the manifest's class overrides the file's."""

    def one(entry):
        path, tag = entry
        g = load_graph(m.resolve(path), default_context=default_context)
        return Prg(g.nodes, g.edges, g.labels, g.contexts, tag, path)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, m.entries))
    return [one(e) for e in m.entries]
