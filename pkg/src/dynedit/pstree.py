"""Precision sampling trees.

A :class:`PSTree` is a weight-balanced B-tree over the positions of ``X``
whose nodes carry the randomness of the estimator (precision ``u``, accuracy
``alpha``/``beta``, a sampled set of allowed shifts) and a dense table of
estimates ``est[s + W]`` of the capped tree distance of ``X[I_v]`` against
``Y`` shifted by ``s``.

Shifts are stored only in a window ``[-W..W]`` with ``W = min(K, capacity)``.
When the capacity binds, every shift beyond the window puts ``I_v + s``
entirely outside the other string, where the tree distance is exactly
``|I_v|``; the window edges are always allowed so the capped recursion loses
nothing by ignoring the rest.

Positions not in the allowed set hold ``inf`` so that a table can be fed to
the envelope directly.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from typing import Iterable, Sequence

import numpy as np

from . import precision_sampling as ps
from .errors import CapacityError, ConfigError, RangeError, ShiftSetError

INF = math.inf
SPLIT_AFTER_MERGE = 1.5


def split_after_merge(b: int) -> float:
    # children weigh up to 2b^(h-1), so a cut is only guaranteed to leave both
    # halves above b^h/2 when the merged weight exceeds b^h * (1 + 2/b)
    return max(SPLIT_AFTER_MERGE, 1.0 + 2.0 / b)


# ---------------------------------------------------------------- envelopes


def range_min_envelope(
    inputs: Iterable[tuple[int, float]],
    queries: Iterable[int],
    counter: list[int] | None = None,
) -> dict[int, float]:
    """``B_s = min_{s'} (A_{s'} + 2|s - s'|)`` for every query ``s``.

    Two linear sweeps over the merged sorted shift lists.  If ``counter`` is
    given, ``counter[0]`` is increased by the number of sweep steps.
    """
    pts = sorted(inputs)
    qs = sorted(set(queries))
    out = {s: INF for s in qs}
    steps = 0
    best = INF
    k = 0
    for s in qs:
        while k < len(pts) and pts[k][0] <= s:
            cand = pts[k][1] - 2 * pts[k][0]
            if cand < best:
                best = cand
            k += 1
            steps += 1
        steps += 1
        if best + 2 * s < out[s]:
            out[s] = best + 2 * s
    best = INF
    k = len(pts) - 1
    for s in reversed(qs):
        while k >= 0 and pts[k][0] >= s:
            cand = pts[k][1] + 2 * pts[k][0]
            if cand < best:
                best = cand
            k -= 1
            steps += 1
        steps += 1
        if best - 2 * s < out[s]:
            out[s] = best - 2 * s
    if counter is not None:
        counter[0] += steps
    return out


def envelope_dense(a: np.ndarray) -> np.ndarray:
    """Envelope over consecutive shifts; ``inf`` marks absent inputs."""
    idx = 2.0 * np.arange(len(a))
    left = np.minimum.accumulate(a - idx) + idx
    right = np.minimum.accumulate((a + idx)[::-1])[::-1] - idx
    return np.minimum(left, right)


# -------------------------------------------------------------------- nodes


class PSNode:
    __slots__ = (
        "children",
        "parent",
        "size",
        "height",
        "u",
        "beta",
        "alpha",
        "active",
        "mask",
        "est",
        "updates",
        "rebuilt",
    )

    def __init__(self, height: int = 0):
        self.children: list[PSNode] = []
        self.parent: PSNode | None = None
        self.size = 1 if height == 0 else 0
        self.height = height
        self.u = 1.0
        self.beta = 0.0
        self.alpha = 2.0
        self.active = False
        self.mask: np.ndarray | None = None
        self.est: np.ndarray | None = None
        self.updates = 0
        self.rebuilt = False

    @property
    def is_leaf(self) -> bool:
        return self.height == 0

    @property
    def degree(self) -> int:
        return len(self.children)

    def allowed(self, window: int) -> np.ndarray:
        """Sorted allowed shifts (empty when the node stores nothing)."""
        if self.mask is None:
            return np.zeros(0, dtype=np.int64)
        return np.flatnonzero(self.mask) - window

    def __repr__(self) -> str:
        return f"PSNode(h={self.height}, size={self.size}, active={self.active})"


def offset_of(v: PSNode) -> int:
    """Left end ``i_v`` of a node's interval, found by walking to the root."""
    lo = 0
    while v.parent is not None:
        p = v.parent
        for c in p.children:
            if c is v:
                break
            lo += c.size
        v = p
    return lo


# ------------------------------------------------------------------- shape


def static_depth(n: int, b: int) -> int:
    if n <= 1:
        return 0
    d = 1
    while n > 2 * b**d:
        d += 1
    return d


def build_shape(n: int, b: int) -> PSNode:
    """Balanced height-``d`` shape over ``n`` leaves (weights pinned to ``b^h``)."""
    if n < 1:
        raise ConfigError("a tree needs at least one leaf")
    d = static_depth(n, b)

    def build(m: int, h: int, is_root: bool) -> PSNode:
        node = PSNode(h)
        node.size = m
        if h == 0:
            return node
        unit = b ** (h - 1)
        parts = max(1, round(m / unit))
        if is_root:
            parts = max(parts, 2)
        parts = min(parts, m)
        for t in range(parts):
            sz = (m * (t + 1)) // parts - (m * t) // parts
            c = build(sz, h - 1, False)
            c.parent = node
            node.children.append(c)
        return node

    return build(n, d, True)


def iter_nodes(root: PSNode):
    stack = [root]
    while stack:
        v = stack.pop()
        yield v
        stack.extend(reversed(v.children))


def check_shape(root: PSNode, b: int) -> list[str]:
    """All weight-balance violations (empty list when the shape is valid)."""
    errs: list[str] = []
    d = root.height
    for v in iter_nodes(root):
        h = v.height
        if h == 0:
            if v.size != 1 or v.children:
                errs.append(f"bad leaf {v}")
            continue
        if not v.children:
            errs.append(f"internal node without children {v}")
            continue
        if any(c.height != h - 1 for c in v.children):
            errs.append(f"leaves at unequal depth under {v}")
        if sum(c.size for c in v.children) != v.size:
            errs.append(f"size mismatch at {v}")
        if any(c.parent is not v for c in v.children):
            errs.append(f"broken parent pointer under {v}")
        if v is root:
            if d >= 1 and root.size >= 2 and not 2 <= len(v.children) <= 4 * b:
                errs.append(f"root has {len(v.children)} children")
        else:
            if not 0.5 * b**h <= v.size <= 2 * b**h:
                errs.append(f"weight {v.size} outside [{0.5 * b**h}, {2 * b**h}] at height {h}")
            if not b / 4 <= len(v.children) <= 4 * b:
                errs.append(f"{len(v.children)} children at height {h}")
    return errs


class RebuildAll(Exception):
    """Raised internally when a shape change reaches the root."""


def _locate(root: PSNode, i: int, inserting: bool) -> tuple[PSNode, int]:
    """Bottom node (height 1) and child index for position ``i``."""
    v = root
    while v.height > 1:
        nxt = v.children[-1]
        for c in v.children:
            if i < c.size:
                nxt = c
                break
            i -= c.size
        else:
            if not inserting:
                raise RangeError(i)
            i += nxt.size
        v = nxt
    if inserting:
        return v, min(i, len(v.children))
    if i >= len(v.children):
        raise RangeError(i)
    return v, i


def _cut_index(sizes: Sequence[int]) -> int:
    total = sum(sizes)
    acc = 0
    best, best_gap = 1, INF
    for c in range(1, len(sizes)):
        acc += sizes[c - 1]
        gap = abs(2 * acc - total)
        if gap < best_gap:
            best, best_gap = c, gap
    return best


def _replace(parent: PSNode, old: Sequence[PSNode], new: Sequence[PSNode]) -> None:
    k = next(t for t, c in enumerate(parent.children) if c is old[0])
    parent.children[k : k + len(old)] = list(new)
    for c in new:
        c.parent = parent


def _group(children: Sequence[PSNode], h: int) -> PSNode:
    node = PSNode(h)
    node.children = list(children)
    node.size = sum(c.size for c in children)
    node.rebuilt = True
    for c in children:
        c.parent = node
    return node


def _split(v: PSNode) -> list[PSNode]:
    c = _cut_index([w.size for w in v.children])
    a = _group(v.children[:c], v.height)
    bnode = _group(v.children[c:], v.height)
    _replace(v.parent, [v], [a, bnode])
    return [a, bnode]


class ShapeStats:
    """Rebuild bookkeeping for the amortisation checks.

    ``lifetimes`` holds ``(height, subtree updates, created by a rebuild,
    retired by its own imbalance)`` for every node taken out of the tree;
    ``created`` counts rebuilt nodes per height.
    """

    __slots__ = ("lifetimes", "created")

    def __init__(self):
        self.lifetimes: list[tuple[int, int, bool, bool]] = []
        self.created: dict[int, int] = {}

    def retire(self, v: PSNode, own: bool = True) -> None:
        self.lifetimes.append((v.height, v.updates, v.rebuilt, own))

    def record(self, nodes: Sequence[PSNode]) -> None:
        for v in nodes:
            self.created[v.height] = self.created.get(v.height, 0) + 1


def attach_leaf(root: PSNode, i: int, leaf: PSNode) -> PSNode:
    """Add ``leaf`` at position ``i`` without rebalancing; returns its parent."""
    if not 0 <= i <= root.size:
        raise RangeError(f"leaf position {i} outside [0, {root.size}]")
    if root.height == 0:
        raise RebuildAll()
    bottom, k = _locate(root, i, True)
    bottom.children.insert(k, leaf)
    leaf.parent = bottom
    v = bottom
    while v is not None:
        v.size += 1
        v.updates += 1
        v = v.parent
    return bottom


def detach_leaf(root: PSNode, i: int) -> tuple[PSNode, PSNode]:
    """Remove the leaf at position ``i`` without rebalancing; returns ``(leaf, parent)``."""
    if not 0 <= i < root.size:
        raise RangeError(f"leaf position {i} outside [0, {root.size})")
    if root.height == 0 or root.size <= 1:
        raise RebuildAll()
    bottom, k = _locate(root, i, False)
    leaf = bottom.children.pop(k)
    leaf.parent = None
    v = bottom
    while v is not None:
        v.size -= 1
        v.updates += 1
        v = v.parent
    return leaf, bottom


def rebalance_up(root: PSNode, start: PSNode, b: int, stats: ShapeStats | None = None) -> list[PSNode]:
    """Restore weight balance on the path from ``start`` to the root.

    Returns the freshly created nodes.  Raises :class:`RebuildAll` when the
    root itself would have to split or collapse.
    """
    rebuilt: list[PSNode] = []
    v = start
    while v is not root:
        h = v.height
        parent = v.parent
        lo, hi = 0.5 * b**h, 2 * b**h
        if v.size > hi:
            if stats is not None:
                stats.retire(v)
            rebuilt.extend(_split(v))
        elif v.size < lo:
            sibs = parent.children
            k = next(t for t, c in enumerate(sibs) if c is v)
            if len(sibs) == 1:
                raise RebuildAll()
            pair = [sibs[k - 1], v] if k > 0 else [v, sibs[k + 1]]
            if stats is not None:
                for w in pair:
                    stats.retire(w, w is v)
            merged = _group(pair[0].children + pair[1].children, h)
            _replace(parent, pair, [merged])
            if merged.size > split_after_merge(b) * b**h:
                rebuilt.extend(_split(merged))
            else:
                rebuilt.append(merged)
        v = parent
    if not 2 <= len(root.children) <= 4 * b:
        raise RebuildAll()
    # a node rebuilt and then split again is no longer in the tree
    rebuilt = [w for w in rebuilt if _attached(w, root)]
    if stats is not None:
        stats.record(rebuilt)
    return rebuilt


def _attached(v: PSNode, root: PSNode) -> bool:
    while v.parent is not None:
        if v not in v.parent.children:
            return False
        v = v.parent
    return v is root


# ---------------------------------------------------------------- sampling


RATE_CONSTANT = 48.0


def shift_rate(beta: float, degree: int, ln_n: float, constant: float = RATE_CONSTANT) -> float:
    if beta <= 0:
        return 1.0
    return min(1.0, constant * (degree + 1) * ln_n / beta)


def sample_allowed_shifts(
    beta_v: float,
    b_v: int,
    K: int,
    n: int,
    rng: np.random.Generator,
    window: int | None = None,
    constant: float = RATE_CONSTANT,
) -> np.ndarray:
    """Sorted shifts of ``[-W..W]`` kept independently at the sparsification rate."""
    if not beta_v > 0:
        raise ConfigError("beta must be positive")
    w = K if window is None else window
    rate = shift_rate(beta_v, b_v, math.log(max(n, 2)), constant)
    if rate >= 1.0:
        return np.arange(-w, w + 1)
    keep = rng.random(2 * w + 1) < rate
    return np.flatnonzero(keep) - w


# -------------------------------------------------------------------- tree


class PSTree:
    """A precision sampling tree over ``X`` against ``Y`` (or ``X`` itself).

    ``x`` and ``y`` are sequences of characters; ``y=None`` builds the
    self-comparison tree used for the label-keyed maintenance.  The tree keeps
    its own integer code arrays; callers mutate strings through the update
    methods of the maintenance modules.
    """

    def __init__(
        self,
        x: Sequence[str],
        y: Sequence[str] | None,
        K: int,
        b: int,
        *,
        capacity: int | None = None,
        seed: int | np.random.Generator = 0,
        beta_root: float | None = None,
        with_tables: bool = True,
        rate_constant: float = RATE_CONSTANT,
    ):
        if K < 1:
            raise ConfigError("K must be at least 1")
        if b < 2:
            raise ConfigError("b must be at least 2")
        n_x = len(x)
        n_y = n_x if y is None else len(y)
        if capacity is None:
            capacity = max(n_x, n_y, 1)
        if capacity < max(n_x, n_y):
            raise CapacityError(f"capacity {capacity} below string length {max(n_x, n_y)}")
        if n_x < 1:
            raise ConfigError("X must be non-empty")
        if b > max(capacity, 2):
            raise ConfigError("b may not exceed n")
        self.K = K
        self.b = b
        self.capacity = capacity
        self.self_mode = y is None
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.with_tables = with_tables
        self.rate_constant = float(rate_constant)
        self.W = min(K, capacity)
        self.truncated = self.W < K
        n_log = max(capacity, 2)
        self.ln_n = math.log(n_log)
        self.log2_n = math.log2(n_log)
        self.epsilon = 1.0 / (4.0 * self.log2_n)
        self.delta = 0.01 / (K * float(n_log) ** 4)
        self.prec = ps.make_params(self.epsilon, self.delta)
        self.beta_root = K / 1000.0 if beta_root is None else float(beta_root)
        if not self.beta_root > 0:
            raise ConfigError("beta_root must be positive")
        self.visits = 0
        self.shift_work = 0
        self.stats = ShapeStats()
        self._shifts = np.arange(-self.W, self.W + 1)
        self._cap_row = (K - np.abs(self._shifts)).astype(np.float64)
        self._xc = np.fromiter((ord(c) for c in x), dtype=np.int64, count=n_x)
        if y is None:
            self._ypad = np.concatenate([np.full(self.W, -1), self._xc, np.full(self.W, -1)])
            self._xc = self._ypad[self.W : self.W + n_x]
        else:
            yc = np.fromiter((ord(c) for c in y), dtype=np.int64, count=n_y)
            tail = self.W + max(0, n_x - n_y)
            self._ypad = np.concatenate([np.full(self.W, -1), yc, np.full(tail, -1)])
        self._ylen = n_y
        self.labeled_x = None
        self.labeled_y = None
        self.root = build_shape(n_x, b)
        self.rebuild()

    # ------------------------------------------------------------ geometry

    @property
    def n_x(self) -> int:
        return len(self._xc)

    @property
    def n_y(self) -> int:
        return self._ylen

    @property
    def depth(self) -> int:
        return self.root.height

    def nodes(self) -> list[PSNode]:
        return list(iter_nodes(self.root))

    def intervals(self) -> list[tuple[PSNode, int]]:
        """``(node, i_v)`` for every node in pre-order."""
        out = []
        stack = [(self.root, 0)]
        while stack:
            v, lo = stack.pop()
            out.append((v, lo))
            pos = lo + v.size
            for c in reversed(v.children):
                pos -= c.size
                stack.append((c, pos))
        return out

    def node_depth(self, v: PSNode) -> int:
        return self.root.height - v.height

    def x_string(self) -> str:
        return "".join(map(chr, self._xc))

    def y_string(self) -> str:
        return "".join(map(chr, self._ypad[self.W : self.W + self._ylen]))

    # ---------------------------------------------------------- parameters

    def _assign_params(self, v: PSNode, parent: PSNode | None) -> None:
        depth = self.node_depth(v)
        v.alpha = 2.0 * (1.0 - self.epsilon) ** depth
        if parent is None:
            v.u = 1.0
            v.beta = self.beta_root
            v.active = v.size > v.beta
            stores = True
        else:
            v.u = ps.sample(self.prec, self.rng)
            v.beta = 0.5 * parent.beta * v.u
            v.active = parent.active and v.size > v.beta
            stores = parent.active
        v.est = None
        if not self.with_tables or not stores:
            v.mask = None
            return
        v.mask = self._sample_mask(v, parent is None)

    def _sample_mask(self, v: PSNode, is_root: bool) -> np.ndarray:
        w = self.W
        rate = shift_rate(v.beta, v.degree, self.ln_n, self.rate_constant)
        if rate >= 1.0:
            mask = np.ones(2 * w + 1, dtype=bool)
        else:
            mask = self.rng.random(2 * w + 1) < rate
        if is_root:
            mask[w] = True
        if self.truncated:
            mask[0] = mask[-1] = True
        return mask

    def sample_slot(self, v: PSNode) -> bool:
        """Membership draw for a single newly admitted label."""
        rate = shift_rate(v.beta, v.degree, self.ln_n, self.rate_constant)
        if rate >= 1.0:
            return True
        return bool(self.rng.random() < rate)

    def edge_value(self, v: PSNode) -> float:
        """Exact capped value at the window edges ``+-W``."""
        if not self.truncated:
            return 0.0
        return float(min(v.size, self.K - self.W))

    # ------------------------------------------------------------ compute

    def _leaf_rows(self, lo: int, hi: int) -> np.ndarray:
        """Capped leaf values for positions ``[lo, hi)`` over the whole window."""
        w = 2 * self.W + 1
        win = np.lib.stride_tricks.sliding_window_view(self._ypad, w)[lo:hi]
        rows = (win != self._xc[lo:hi, None]).astype(np.float64)
        return np.minimum(rows, self._cap_row)

    def leaf_values(self, i: int, a: int, b: int) -> np.ndarray:
        """Capped leaf values at position ``i`` for window indices ``a..b``."""
        seg = self._ypad[i + a : i + b + 1]
        vals = (seg != self._xc[i]).astype(np.float64)
        return np.minimum(vals, self._cap_row[a : b + 1])

    def _fill_leaf(self, v: PSNode, i: int, a: int = 0, b: int | None = None) -> None:
        if b is None:
            b = 2 * self.W
        vals = self.leaf_values(i, a, b)
        if v.est is None:
            v.est = np.full(2 * self.W + 1, INF)
        m = v.mask[a : b + 1]
        v.est[a : b + 1] = np.where(m, vals, INF)
        self.shift_work += b - a + 1

    def _fill_inactive(self, v: PSNode) -> None:
        v.est = np.where(v.mask, 0.0, INF) if v.mask is not None else None

    def combine_range(self, v: PSNode, a: int, b: int, radius: int) -> None:
        """Recompute ``v.est`` on window indices ``a..b`` from the children's tables.

        Child inputs are read on ``[a - radius, b + radius]`` only.
        """
        top = 2 * self.W
        lo = max(0, a - radius)
        hi = min(top, b + radius)
        delta = np.zeros(b - a + 1)
        for h in v.children:
            if h.est is None:
                # no stored shifts: contributes +inf
                delta += INF
                continue
            env = envelope_dense(h.est[lo : hi + 1])
            delta += np.maximum(env[a - lo : b - lo + 1], 0.0)
        out = np.minimum(np.minimum(delta, float(v.size)), self._cap_row[a : b + 1])
        if v.est is None:
            v.est = np.full(top + 1, INF)
        v.est[a : b + 1] = np.where(v.mask[a : b + 1], out, INF)
        self.shift_work += (b - a + 1) * (1 + len(v.children)) + (hi - lo + 1) * len(v.children)

    def ako(self, v: PSNode, lo: int) -> None:
        """Static computation of the whole subtree of an active node ``v`` at ``i_v = lo``."""
        self.visits += 1
        if v.is_leaf:
            self._fill_leaf(v, lo)
            return
        if v.height == 1 and v.active:
            self._ako_bottom(v, lo)
            return
        pos = lo
        for h in v.children:
            self._assign_params(h, v)
            if h.active:
                self.ako(h, pos)
            else:
                self.visits += 1
                self._fill_inactive(h)
            pos += h.size
        self.combine_range(v, 0, 2 * self.W, 2 * self.W)

    def _ako_bottom(self, v: PSNode, lo: int) -> None:
        rows = self._leaf_rows(lo, lo + v.size)
        for t, h in enumerate(v.children):
            self._assign_params(h, v)
            self.visits += 1
            if h.active:
                h.est = np.where(h.mask, rows[t], INF)
                self.shift_work += 2 * self.W + 1
            else:
                self._fill_inactive(h)
        self.combine_range(v, 0, 2 * self.W, 2 * self.W)

    def rebuild(self) -> None:
        """Resample every parameter and recompute every table from scratch."""
        self._assign_params(self.root, None)
        if not self.with_tables:
            for v in iter_nodes(self.root):
                if v is not self.root:
                    v.mask = None
            return
        if self.root.active:
            self.ako(self.root, 0)
        else:
            self._fill_inactive(self.root)

    def recompute_node(self, v: PSNode, lo: int) -> None:
        """Fresh parameters and tables for a structurally rebuilt node."""
        self._assign_params(v, v.parent)
        if v.mask is None:
            return
        if v.active:
            self.ako(v, lo)
        else:
            self.visits += 1
            self._fill_inactive(v)

    def recombine(self, v: PSNode) -> None:
        """Full-window Combine at an active node whose children changed."""
        self.visits += 1
        if v.mask is None or not v.active:
            return
        self.combine_range(v, 0, 2 * self.W, 2 * self.W)

    # ------------------------------------------------------------- reads

    def root_estimate(self, s: int = 0) -> float:
        v = self.root
        if v.est is None:
            return 0.0
        return float(v.est[s + self.W])

    def table(self, v: PSNode) -> dict[int, float]:
        """``{s: estimate}`` over the allowed shifts of ``v``."""
        if v.est is None:
            if v.mask is None:
                return {}
            return {int(s): 0.0 for s in np.flatnonzero(v.mask) - self.W}
        idx = np.flatnonzero(v.mask)
        return {int(t - self.W): float(v.est[t]) for t in idx}

    def snapshot(self) -> list[tuple[int, int, bytes, bytes]]:
        """Hashable summary used by determinism tests."""
        out = []
        for v, lo in self.intervals():
            out.append(
                (
                    lo,
                    v.size,
                    b"" if v.mask is None else v.mask.tobytes(),
                    b"" if v.est is None else v.est.tobytes(),
                )
            )
        return out

    def active_count(self) -> int:
        return sum(1 for v in iter_nodes(self.root) if v.active)

    def to_shape(self):
        """The tree as an oracle :class:`~dynedit.oracles.TreeShape` plus a node map."""
        from .oracles import ShapeNode, TreeShape

        mapping: dict[int, PSNode] = {}

        def conv(v: PSNode, lo: int) -> ShapeNode:
            s = ShapeNode(lo, lo + v.size)
            pos = lo
            for c in v.children:
                s.children.append(conv(c, pos))
                pos += c.size
            mapping[id(s)] = v
            return s

        root = conv(self.root, 0)
        shape = TreeShape(root)
        node_map = {s.index: mapping[id(s)] for s in shape.nodes}
        return shape, node_map

    # ------------------------------------------------- code array upkeep

    def set_x(self, i: int, a: str) -> None:
        self._xc[i] = ord(a)

    def set_y(self, i: int, a: str) -> None:
        self._ypad[self.W + i] = ord(a)

    def _insert_code(self, i: int, a: str) -> None:
        self._ypad = np.insert(self._ypad, self.W + i, ord(a))
        self._xc = self._ypad[self.W : len(self._ypad) - self.W]
        self._ylen += 1

    def _delete_code(self, i: int) -> None:
        self._ypad = np.delete(self._ypad, self.W + i)
        self._xc = self._ypad[self.W : len(self._ypad) - self.W]
        self._ylen -= 1


# ------------------------------------------------------- public operations


def build_static(x, y, K: int, b: int, rng: int | np.random.Generator = 0, **kw) -> PSTree:
    """Build a tree over ``x`` against ``y`` (strings or labelled strings)."""
    xs = _as_chars(x)
    ys = None if y is None else _as_chars(y)
    t = PSTree(xs, ys, K, b, seed=rng, **kw)
    if not isinstance(x, str):
        t.labeled_x = x
    if y is not None and not isinstance(y, str):
        t.labeled_y = y
    return t


def _as_chars(s) -> Sequence[str]:
    if isinstance(s, str):
        return s
    core = getattr(s, "core_values", None)
    if core is not None:
        return core()
    return list(s)


def combine(
    t: PSTree,
    v: PSNode,
    out_shifts: Iterable[int],
    child_inputs: Iterable[tuple[int, int, float]],
    counter: list[int] | None = None,
) -> dict[int, float]:
    """Combine on explicit sets: per-child envelopes, recovery, capping.

    ``child_inputs`` holds ``(child index, shift, estimate)`` triples.  The
    output is ``{s: min(delta_s, |I_v|, K - |s|)}`` for each requested shift.
    """
    outs = sorted(set(out_shifts))
    allowed = set(v.allowed(t.W).tolist())
    if not set(outs) <= allowed:
        raise ShiftSetError("output shifts must be allowed at the node")
    per_child: list[list[tuple[int, float]]] = [[] for _ in v.children]
    for h, s, val in child_inputs:
        per_child[h].append((s, val))
    envs = [range_min_envelope(pts, outs, counter) for pts in per_child]
    us = [c.u for c in v.children]
    result = {}
    for s in outs:
        delta = ps.recover([e[s] for e in envs], us, v.alpha, v.beta, t.prec)
        result[s] = float(min(delta, v.size, t.K - abs(s)))
    return result


def insert_leaf_shape(t: PSTree, i: int) -> list[PSNode]:
    """Add a leaf at position ``i`` and rebalance; returns the rebuilt nodes.

    A root split or collapse rebuilds the whole shape; the returned list is
    then ``[t.root]``.
    """
    if t.root.size >= t.capacity:
        raise CapacityError(f"capacity {t.capacity} reached")
    leaf = PSNode(0)
    try:
        bottom = attach_leaf(t.root, i, leaf)
        return rebalance_up(t.root, bottom, t.b, t.stats)
    except RebuildAll:
        n = t.root.size if leaf.parent is not None else t.root.size + 1
        t.root = build_shape(n, t.b)
        return [t.root]


def delete_leaf_shape(t: PSTree, i: int) -> list[PSNode]:
    """Remove the leaf at position ``i`` and rebalance; returns the rebuilt nodes."""
    removed = False
    try:
        _, bottom = detach_leaf(t.root, i)
        removed = True
        return rebalance_up(t.root, bottom, t.b, t.stats)
    except RebuildAll:
        n = t.root.size if removed else t.root.size - 1
        if n < 1:
            raise CapacityError("cannot delete the last leaf")
        t.root = build_shape(n, t.b)
        return [t.root]


def rebalance_recompute(t: PSTree, v: PSNode) -> None:
    """Resample and recompute the subtree of a rebuilt node, then re-Combine its ancestors."""
    if v is t.root:
        t.rebuild()
        return
    t.recompute_node(v, offset_of(v))
    w = v.parent
    while w is not None:
        t.recombine(w)
        w = w.parent


def recompute_rebuilt(t: PSTree, rebuilt: Sequence[PSNode]) -> None:
    """Batch form of :func:`rebalance_recompute` sharing ancestor work."""
    if not rebuilt:
        return
    if any(v is t.root for v in rebuilt):
        t.rebuild()
        return
    ancestors: dict[int, PSNode] = {}
    for v in rebuilt:
        t.recompute_node(v, offset_of(v))
        w = v.parent
        while w is not None:
            ancestors[id(w)] = w
            w = w.parent
    for w in sorted(ancestors.values(), key=lambda n: n.height):
        t.recombine(w)


def nearest_allowed(allowed: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Nearest element of the sorted array ``allowed`` to each target (ties to the smaller)."""
    k = np.searchsorted(allowed, targets)
    left = allowed[np.clip(k - 1, 0, len(allowed) - 1)]
    right = allowed[np.clip(k, 0, len(allowed) - 1)]
    take_left = (k > 0) & ((k >= len(allowed)) | (targets - left <= right - targets))
    return np.where(take_left, left, right)


def sorted_contains(arr: Sequence[int], s: int) -> bool:
    k = bisect_left(arr, s)
    return k < len(arr) and arr[k] == s
