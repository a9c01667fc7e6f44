"""Exact reference computations: edit distance, tree distance, capped tree distance.

Everything here is deliberately brute force.  The tree-distance tables minimise
over every pair of shifts with a broadcast ``(2W+1) x (2W+1)`` penalty matrix,
which shares no code with the two-sweep envelope used by the estimator.
"""

from __future__ import annotations

from random import Random
import sys
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, ShiftRangeError


class ShapeNode:
    __slots__ = ("lo", "hi", "children", "depth", "index", "parent")

    def __init__(self, lo: int, hi: int, depth: int = 0):
        self.lo = lo
        self.hi = hi
        self.children: list[ShapeNode] = []
        self.depth = depth
        self.index = -1
        self.parent: ShapeNode | None = None

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __repr__(self) -> str:
        return f"ShapeNode([{self.lo}, {self.hi}), children={len(self.children)})"


class TreeShape:
    """An ordered tree whose nodes carry half-open intervals ``[lo, hi)``.

    The root covers ``[0, n)``, the children of a node partition its interval
    left to right, and every leaf covers a single position.
    """

    __slots__ = ("root", "nodes")

    def __init__(self, root: ShapeNode):
        self.root = root
        self.nodes: list[ShapeNode] = []
        self._index(root, None, 0)
        self.validate()

    def _index(self, v: ShapeNode, parent: ShapeNode | None, depth: int) -> None:
        v.parent = parent
        v.depth = depth
        v.index = len(self.nodes)
        self.nodes.append(v)
        for c in v.children:
            self._index(c, v, depth + 1)

    @property
    def n(self) -> int:
        return self.root.size

    @property
    def depth(self) -> int:
        return max(v.depth for v in self.nodes)

    @property
    def degree(self) -> int:
        return max((len(v.children) for v in self.nodes), default=0)

    def leaves(self) -> list[ShapeNode]:
        return [v for v in self.nodes if v.is_leaf]

    def postorder(self) -> Iterator[ShapeNode]:
        return reversed(self.nodes)

    def validate(self) -> None:
        if self.root.lo != 0 or self.root.size < 1:
            raise ConfigError("root must cover [0, n) with n >= 1")
        for v in self.nodes:
            if v.is_leaf:
                if v.size != 1:
                    raise ConfigError(f"leaf {v} does not cover a single position")
                continue
            pos = v.lo
            for c in v.children:
                if c.lo != pos or c.size < 1:
                    raise ConfigError(f"children of {v} do not partition it")
                pos = c.hi
            if pos != v.hi:
                raise ConfigError(f"children of {v} do not partition it")

    @classmethod
    def from_sizes(cls, nested) -> TreeShape:
        """Build from a nested list: an int ``1`` is a leaf, a list is an internal node."""

        def build(item, lo: int) -> ShapeNode:
            if item == 1:
                return ShapeNode(lo, lo + 1)
            kids = []
            pos = lo
            for sub in item:
                c = build(sub, pos)
                kids.append(c)
                pos = c.hi
            node = ShapeNode(lo, pos)
            node.children = kids
            return node

        return cls(build(nested, 0))

    @classmethod
    def balanced(cls, n: int, b: int) -> TreeShape:
        """Near-equal ``b``-ary split of ``[0, n)``."""
        if n < 1 or b < 2:
            raise ConfigError("need n >= 1 and b >= 2")

        def build(lo: int, hi: int) -> ShapeNode:
            node = ShapeNode(lo, hi)
            m = hi - lo
            if m > 1:
                parts = min(b, m)
                cuts = [lo + (m * t) // parts for t in range(parts + 1)]
                node.children = [build(cuts[t], cuts[t + 1]) for t in range(parts)]
            return node

        return cls(build(0, n))

    @classmethod
    def random(cls, n: int, b: int, d: int, rng: Random) -> TreeShape:
        """Random tree over ``[0, n)`` with degree in ``[2, b]`` and depth at most ``d``."""
        if b**d < n:
            raise ConfigError(f"{n} leaves do not fit degree {b} and depth {d}")

        def build(lo: int, hi: int, rem: int) -> ShapeNode:
            node = ShapeNode(lo, hi)
            m = hi - lo
            if m == 1:
                return node
            cap = b ** (rem - 1)
            lo_c = max(2, -(-m // cap))
            c = rng.randint(lo_c, min(b, m))
            while True:
                cuts = sorted(rng.sample(range(1, m), c - 1))
                sizes = [e - s for s, e in zip([0] + cuts, cuts + [m])]
                if max(sizes) <= cap:
                    break
            pos = lo
            for sz in sizes:
                node.children.append(build(pos, pos + sz, rem - 1))
                pos += sz
            return node

        return cls(build(0, n, d))


# ---------------------------------------------------------------- edit distance


def edit_distance(x: Sequence, y: Sequence) -> int:
    """Textbook quadratic dynamic program (two rows)."""
    if len(x) < len(y):
        x, y = y, x
    prev = list(range(len(y) + 1))
    for i, a in enumerate(x, 1):
        cur = [i] + [0] * len(y)
        for j, c in enumerate(y, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a != c))
        prev = cur
    return prev[-1]


def edit_distance_memo(x: Sequence, y: Sequence) -> int:
    """Top-down memoised recursion; an independent second route for small inputs."""
    x = tuple(x)
    y = tuple(y)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * (len(x) + len(y)) + 100))

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(x):
            return len(y) - j
        if j == len(y):
            return len(x) - i
        if x[i] == y[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j), go(i, j + 1), go(i + 1, j + 1))

    try:
        return go(0, 0)
    finally:
        sys.setrecursionlimit(limit)


def edit_distance_np(x: Sequence, y: Sequence) -> int:
    """Row-vectorised DP for longer strings."""
    if len(y) == 0:
        return len(x)
    yc = np.array([ord(c) for c in y], dtype=np.int64)
    idx = np.arange(len(y) + 1, dtype=np.int64)
    prev = idx.copy()
    for i, a in enumerate(x, 1):
        diag = prev[:-1] + (yc != ord(a))
        up = prev[1:] + 1
        t = np.empty_like(prev)
        t[0] = i
        t[1:] = np.minimum(diag, up)
        # horizontal moves: cur[j] = min_{j' <= j} t[j'] + (j - j')
        prev = np.minimum.accumulate(t - idx) + idx
    return int(prev[-1])


# ---------------------------------------------------------------- tree distance


def _leaf_row(x: Sequence, y: Sequence, i: int, shifts: np.ndarray) -> np.ndarray:
    row = np.ones(len(shifts), dtype=np.int64)
    for t, s in enumerate(shifts):
        j = i + int(s)
        if 0 <= j < len(y):
            row[t] = 0 if x[i] == y[j] else 1
    return row


def _tables(shape: TreeShape, x: Sequence, y: Sequence, window: int, cap: int | None) -> dict[int, np.ndarray]:
    if len(x) != shape.n:
        raise ConfigError(f"shape has {shape.n} leaves but |x| = {len(x)}")
    shifts = np.arange(-window, window + 1, dtype=np.int64)
    penalty = 2 * np.abs(shifts[:, None] - shifts[None, :])
    limit = None if cap is None else cap - np.abs(shifts)
    out: dict[int, np.ndarray] = {}
    for v in shape.postorder():
        if v.is_leaf:
            row = _leaf_row(x, y, v.lo, shifts)
        else:
            row = np.zeros(len(shifts), dtype=np.int64)
            for c in v.children:
                row += (out[c.index][None, :] + penalty).min(axis=1)
        if limit is not None:
            row = np.minimum(row, limit)
        out[v.index] = row
    return out


def tree_distance_tables(shape: TreeShape, x: Sequence, y: Sequence, window: int | None = None) -> dict[int, np.ndarray]:
    """``TD_{v,s}`` for every node index and every ``s`` in ``[-W..W]``.

    The default window ``W = |x| + |y|`` is exact: moving a child's shift from
    outside the window to its edge never increases the objective, because
    every leaf beyond the window is fully out of range and costs 1 anyway.
    """
    if window is None:
        window = len(x) + len(y)
    return _tables(shape, x, y, window, None)


def capped_tree_distance_tables(shape: TreeShape, x: Sequence, y: Sequence, K: int) -> dict[int, np.ndarray]:
    """``TD^{<=K}_{v,s}`` from the capped recursion itself (shifts restricted to ``[-K..K]``)."""
    if K < 0:
        raise ConfigError("K must be non-negative")
    return _tables(shape, x, y, K, K)


def tree_distance(shape: TreeShape, x: Sequence, y: Sequence, v: ShapeNode | None = None, s: int = 0) -> int:
    v = shape.root if v is None else v
    window = max(len(x) + len(y), abs(s))
    tab = tree_distance_tables(shape, x, y, window)
    return int(tab[v.index][s + window])


def capped_tree_distance(shape: TreeShape, x: Sequence, y: Sequence, v: ShapeNode | None, s: int, K: int) -> int:
    if abs(s) > K:
        raise ShiftRangeError(f"shift {s} outside [-{K}..{K}]")
    v = shape.root if v is None else v
    tab = capped_tree_distance_tables(shape, x, y, K)
    return int(tab[v.index][s + K])


def shift_table(tables: dict[int, np.ndarray], window: int, v: ShapeNode) -> dict[int, int]:
    """Convenience view of one node's row as ``{shift: value}``."""
    row = tables[v.index]
    return {s: int(row[s + window]) for s in range(-window, window + 1)}
