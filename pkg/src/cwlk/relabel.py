"""Weisfeiler-Lehman and contextual relabeling.

Labels are tracked as integer codes handed out by a :class:`LabelDictionary`.
For iteration ``i >= 1`` the dictionary key of a node is the pair
``(code of its previous label, sorted codes of its out-neighbours' previous
labels)``, so one round costs O(n + e) no matter how long the expanded label
strings become.  The human readable ("raw") strings are rendered lazily from
those keys and memoized per code.

Raw string layout::

    h=0   getLatitude
    h=1   getLatitude,writeBytes          (label, then sorted neighbour labels)
    h>=2  {getLatitude,writeBytes},{writeBytes,}

From height 2 onward every component is wrapped in braces.  Without the
wrapping, different neighbourhoods can flatten to the same comma string.
The contextual string prefixes each of the node's contexts, in sorted order,
to the label and joins the results: ``user-aware(+)getLatitude|x(+)getLatitude``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable

from .graph import CLOSE, CSEP, JSEP, OPEN, SEP, Prg

WL = "wl"
CONTEXTUAL = "contextual"
MODES = (WL, CONTEXTUAL)


class LabelDictionary:
    """Injective interner for ``(iteration, key)`` pairs.

    Codes come from a single counter, so codes of different iterations never
    coincide.  Codes are handed out in first-encounter order.
    """

    def __init__(self):
        self.table: dict[tuple[int, Hashable], int] = {}
        self.entries: list[tuple[int, Hashable]] = []

    @property
    def next_code(self) -> int:
        return len(self.entries)

    def intern(self, i: int, key: Hashable) -> int:
        k = (i, key)
        code = self.table.get(k)
        if code is None:
            code = self.table[k] = len(self.entries)
            self.entries.append(k)
        return code

    def lookup(self, code: int) -> tuple[int, Hashable]:
        return self.entries[code]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, item) -> bool:
        return item in self.table


def intern(d: LabelDictionary, i: int, s: Hashable) -> int:
    return d.intern(i, s)


def wrap(s: str) -> str:
    return OPEN + s + CLOSE


def compose_wl(i: int, own: str, neighbours: Iterable[str]) -> str:
    """Render label ``i`` from the previous-iteration strings of a node and its successors."""
    if i >= 2:
        own = wrap(own)
        neighbours = [wrap(s) for s in neighbours]
    return own + SEP + SEP.join(sorted(neighbours))


def compose_contextual(contexts: Iterable[str], label: str) -> str:
    return JSEP.join(c + CSEP + label for c in sorted(contexts))


class Relabeler:
    """Shared label state for relabeling a corpus.

    Graphs relabeled through the same instance receive consistent codes: two
    nodes of any two graphs share a code exactly when their raw strings match.
    Not thread-safe.
    """

    def __init__(self):
        self.wl = LabelDictionary()
        self.ctx = LabelDictionary()
        self._wl_raw: dict[int, str] = {}
        self._ctx_raw: dict[int, str] = {}

    def wl_codes(self, g: Prg, h: int) -> list[list[int]]:
        if h < 0:
            raise ValueError("height must be >= 0")
        intern = self.wl.intern
        succ = g.successors
        cur = [intern(0, g.labels[n]) for n in g.nodes]
        seq = [cur]
        for i in range(1, h + 1):
            prev = cur
            cur = [
                intern(i, (prev[k], tuple(sorted([prev[m] for m in nb]))))
                for k, nb in enumerate(succ)
            ]
            seq.append(cur)
        return seq

    def contextual_codes(self, g: Prg, wl_seq: list[list[int]]) -> list[list[int]]:
        intern = self.ctx.intern
        ctx = [g.contexts[n] for n in g.nodes]
        return [
            [intern(i, (c, code)) for c, code in zip(ctx, codes)]
            for i, codes in enumerate(wl_seq)
        ]

    def wl_string(self, code: int) -> str:
        s = self._wl_raw.get(code)
        if s is None:
            i, key = self.wl.lookup(code)
            if i == 0:
                s = key
            else:
                own, nbrs = key
                s = compose_wl(i, self.wl_string(own), [self.wl_string(m) for m in nbrs])
            self._wl_raw[code] = s
        return s

    def contextual_string(self, code: int) -> str:
        s = self._ctx_raw.get(code)
        if s is None:
            _, (contexts, wl_code) = self.ctx.lookup(code)
            s = self._ctx_raw[code] = compose_contextual(contexts, self.wl_string(wl_code))
        return s


@dataclass
class RelabelSequence:
    """Per-iteration label codes for one graph.

    ``wl_labels[i][k]`` is the code of node ``graph.nodes[k]`` after ``i``
    rounds; ``contextual_labels`` is laid out the same way and is empty when
    only plain WL relabeling was requested.
    """

    graph: Prg
    height: int
    wl_labels: list[list[int]]
    contextual_labels: list[list[int]]
    relabeler: Relabeler = field(repr=False)

    def codes(self, mode: str) -> list[list[int]]:
        if mode == WL:
            return self.wl_labels
        if mode == CONTEXTUAL:
            if not self.contextual_labels:
                raise ValueError("sequence was built without contexts")
            return self.contextual_labels
        raise ValueError(f"unknown mode {mode!r}")

    def raw(self, mode: str, i: int) -> dict[str, str]:
        render = (
            self.relabeler.wl_string if mode == WL else self.relabeler.contextual_string
        )
        return {n: render(c) for n, c in zip(self.graph.nodes, self.codes(mode)[i])}

    def raw_wl(self, i: int) -> dict[str, str]:
        return self.raw(WL, i)

    @property
    def raw_contextual(self) -> list[dict[str, str]]:
        return [self.raw(CONTEXTUAL, i) for i in range(self.height + 1)]

    def label_map(self, mode: str, i: int) -> dict[str, int]:
        return dict(zip(self.graph.nodes, self.codes(mode)[i]))


def wl_relabel(g: Prg, h: int, relabeler: Relabeler | None = None) -> RelabelSequence:
    r = relabeler or Relabeler()
    return RelabelSequence(g, h, r.wl_codes(g, h), [], r)


def contextual_relabel(g: Prg, h: int, relabeler: Relabeler | None = None) -> RelabelSequence:
    r = relabeler or Relabeler()
    wl_seq = r.wl_codes(g, h)
    return RelabelSequence(g, h, wl_seq, r.contextual_codes(g, wl_seq), r)


def relabel(g: Prg, h: int, mode: str = CONTEXTUAL, relabeler: Relabeler | None = None):
    if mode == WL:
        return wl_relabel(g, h, relabeler)
    if mode == CONTEXTUAL:
        return contextual_relabel(g, h, relabeler)
    raise ValueError(f"unknown mode {mode!r}")


def dump_lines(seq: RelabelSequence, mode: str = CONTEXTUAL) -> list[str]:
    """Debug dump: ``"<i> <node id> <raw label>"`` sorted by (i, node id)."""
    lines = []
    for i in range(seq.height + 1):
        raw = seq.raw(mode, i)
        lines.extend(f"{i} {n} {raw[n]}" for n in sorted(raw))
    return lines
