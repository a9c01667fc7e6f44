"""Edits in ``X``: the self-comparison tree, and queries against an arbitrary ``Y``.

:class:`EditTree` maintains the tree of ``X`` against itself under insertions,
deletions and substitutions.  Its tables are conceptually keyed by the labels
of ``X_$ = $^P X $^P``: the value stored for a node and a label is the capped
tree distance at the shift ``pos(label) - pos(left_v)``.  Physically the
tables are dense arrays indexed by shift; an edit that moves labels relative
to ``left_v`` is applied by re-indexing ("splicing") the arrays of the nodes
whose label window contains the edit, which are exactly the nodes in scope.

:func:`dyn_edit_y` answers a query about ``ED(X, Y)``: it decomposes ``Y``
into phrases copied from ``X`` and evaluates the tree against ``Y`` only at
shifts whose alignment window touches a phrase boundary; every other value is
copied from the self-comparison tree at the phrase's shift.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import intervals as iv
from .decomposition import FAR, Decomposition, decompose
from .errors import CapacityError, ConfigError, RangeError
from .labeled_string import LabeledString
from .pstree import (
    INF,
    RATE_CONSTANT,
    PSNode,
    PSTree,
    RebuildAll,
    attach_leaf,
    build_shape,
    detach_leaf,
    envelope_dense,
    nearest_allowed,
    rebalance_up,
    shift_rate,
    recompute_rebuilt,
)
from .substitution import RelevanceSets, UpdateLog, _substitute, refresh_relevant


def insert_relevance(i_v: int, j_v: int, x: int, K: int) -> RelevanceSets:
    """Shifts of ``[i_v..j_v]`` whose label-keyed value an edit at ``X[x]`` may change.

    A shift is relevant if ``x`` lies in the node, if the aligned window
    ``[x-s-K_v .. x-s+K_v]`` meets the node, or if ``x`` falls between the node
    and its shifted copy while ``|s| >= K - |I_v|`` (the cap can then move).
    """
    size = j_v - i_v + 1
    k_v = min(K, size)
    parts: list[iv.Interval] = [(x - j_v - k_v, x - i_v + k_v)]
    if i_v <= x <= j_v:
        parts.append((-K, K))
    else:
        if x < i_v:
            side = (-K, x - i_v)
        else:
            side = (x - j_v, K)
        thr = K - size
        if thr <= 0:
            parts.append(side)
        else:
            parts.append((side[0], min(side[1], -thr)))
            parts.append((max(side[0], thr), side[1]))
    rel = iv.clip(parts, -K, K)
    return RelevanceSets(rel, k_v, K)


class EditTree:
    """Self-comparison tree of ``X`` at threshold ``K`` under all edits.

    The capacity ``n`` bounds ``|X|``; once the length exceeds ``n`` or drops
    below ``n/4`` the whole structure is rebuilt with ``n = 2|X|``.
    """

    def __init__(
        self,
        x: Sequence[str],
        K: int,
        b: int,
        *,
        capacity: int | None = None,
        seed: int | np.random.Generator = 0,
        beta_root: float | None = None,
        min_capacity: int = 0,
        rate_constant: float = RATE_CONSTANT,
    ):
        x = list(x)
        if not x:
            raise ConfigError("X must be non-empty")
        self.K = K
        self.b = b
        self.beta_root = beta_root
        self.min_capacity = min_capacity
        self.rate_constant = rate_constant
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.rebuilds = 0
        self.log = UpdateLog()
        self._build(x, capacity if capacity is not None else self._target(len(x)))

    def _target(self, length: int) -> int:
        return max(2 * length, self.min_capacity, self.b, 2)

    def _build(self, x: list[str], capacity: int) -> None:
        self.tree = PSTree(
            x, None, self.K, self.b, capacity=capacity,
            seed=self.rng,
            beta_root=self.beta_root,
            rate_constant=self.rate_constant,
        )
        self.xs = LabeledString(x, pad=self.tree.W, capacity=capacity, seed=0)
        self.rebuilds += 1

    # ------------------------------------------------------------ reads

    @property
    def capacity(self) -> int:
        return self.tree.capacity

    @property
    def W(self) -> int:
        return self.tree.W

    def __len__(self) -> int:
        return self.tree.n_x

    def x_string(self) -> str:
        return self.tree.x_string()

    def left_label(self, v: PSNode, lo: int) -> int:
        return self.xs.label(lo + self.xs.pad)

    def label_table(self, v: PSNode, lo: int) -> dict[int, float]:
        """``{label: estimate}`` over the allowed labels of ``v``."""
        out = {}
        for s, val in self.tree.table(v).items():
            out[self.xs.label(lo + s + self.xs.pad)] = val
        return out

    # ---------------------------------------------------------- updates

    def _full_rebuild(self, x: list[str] | None = None, capacity: int | None = None) -> None:
        if x is None:
            x = list(self.tree.x_string())
        if capacity is None:
            capacity = self.capacity
        self._build(x, capacity)

    def substitute(self, i: int, a: str) -> None:
        if not 0 <= i < len(self):
            raise RangeError(f"substitution position {i} outside [0, {len(self)})")
        self.log = UpdateLog()
        self.xs.substitute(i, a)
        self.tree.set_x(i, a)
        _substitute(self.tree, i, "x", self.log)

    def insert(self, x: int, a: str) -> None:
        n = len(self)
        if not 0 <= x <= n:
            raise RangeError(f"insert position {x} outside [0, {n}]")
        self.log = UpdateLog()
        if n + 1 > self.capacity:
            s = list(self.tree.x_string())
            s.insert(x, a)
            self._full_rebuild(s, self._target(len(s)))
            return
        t = self.tree
        self.xs.insert(x, a)
        t._insert_code(x, a)
        leaf = PSNode(0)
        try:
            bottom = attach_leaf(t.root, x, leaf)
        except RebuildAll:
            self._full_rebuild()
            return
        t._assign_params(leaf, bottom)
        path = _ancestors(bottom)
        self._traverse(x, path, deleting=False, fresh=leaf)
        self._rebalance(bottom)

    def delete(self, x: int) -> None:
        n = len(self)
        if not 0 <= x < n:
            raise RangeError(f"delete position {x} outside [0, {n})")
        if n == 1:
            raise CapacityError("cannot delete the last character")
        self.log = UpdateLog()
        if 4 * (n - 1) < self.capacity and self._target(n - 1) < self.capacity:
            s = list(self.tree.x_string())
            del s[x]
            self._full_rebuild(s, self._target(len(s)))
            return
        t = self.tree
        self.xs.delete(x)
        t._delete_code(x)
        try:
            _, bottom = detach_leaf(t.root, x)
        except RebuildAll:
            self._full_rebuild()
            return
        path = _ancestors(bottom)
        self._traverse(x, path, deleting=True)
        self._rebalance(bottom)

    def _rebalance(self, bottom: PSNode) -> None:
        t = self.tree
        try:
            rebuilt = rebalance_up(t.root, bottom, t.b, t.stats)
        except RebuildAll:
            t.root = build_shape(t.n_x, t.b)
            t.rebuild()
            self.rebuilds += 1
            return
        self.log.visited += len(rebuilt)
        recompute_rebuilt(t, rebuilt)

    # -------------------------------------------------------- traversal

    def _traverse(self, x: int, path: set[int], deleting: bool, fresh: PSNode | None = None) -> None:
        t = self.tree
        K, W = t.K, t.W
        log = self.log

        def visit(v: PSNode, lo: int, parent_active: bool) -> None:
            if v.mask is None:
                return
            size = v.size
            if deleting:
                if id(v) in path:
                    i_old, size_old = lo, size + 1
                else:
                    i_old, size_old = (lo + 1 if x <= lo else lo), size
                rel_old = insert_relevance(i_old, i_old + size_old - 1, x, K)
                d = i_old - lo
                relevant = iv.clip([(a + d - 1, b + d) for a, b in rel_old.relevant], -K, K)
                k_v = min(K, max(size, 1))
                rel = RelevanceSets(relevant, k_v, K)
            else:
                i_old = lo - (1 if x < lo else 0)
                rel = insert_relevance(lo, lo + size - 1, x, K)
            if not rel.in_scope:
                return
            t.visits += 1
            log.visited += 1
            log.scope.append((lo, size))
            if v is not fresh and lo - W - 1 <= x <= lo + W + 1:
                self._splice(v, lo, i_old, x, deleting)
            was_active = v.active
            v.active = parent_active and size > v.beta
            if v.parent is None:
                v.active = size > v.beta
            if not v.active:
                t._fill_inactive(v)
                return
            if not was_active or v.est is None:
                t.ako(v, lo)
                return
            refresh_relevant(t, v, lo, rel, lambda h, pos: visit(h, pos, True), log)

        visit(t.root, 0, True)

    def _splice(self, v: PSNode, lo: int, i_old: int, x: int, deleting: bool) -> None:
        """Re-index ``v``'s tables after the edit so that every label keeps its value."""
        t = self.tree
        W = t.W
        n = 2 * W + 1
        old_mask, old_est = v.mask, v.est
        mask = np.zeros(n, dtype=bool)
        est = np.full(n, INF)
        filled = np.zeros(n, dtype=bool)
        c = lo - i_old
        cut = min(max(x - lo + W, 0), n)
        if deleting:
            regions = ((0, cut, c), (cut, n, c + 1))
            fresh = -1
        else:
            regions = ((0, cut, c), (cut + 1, n, c - 1))
            fresh = x - lo + W if 0 <= x - lo + W < n else -1
        for a0, a1, off in regions:
            a0, a1 = max(a0, -off), min(a1, n - off)
            if a0 >= a1:
                continue
            mask[a0:a1] = old_mask[a0 + off : a1 + off]
            if old_est is not None:
                est[a0:a1] = old_est[a0 + off : a1 + off]
            filled[a0:a1] = True
        enter = np.flatnonzero(~filled)
        if len(enter):
            rate = shift_rate(v.beta, v.degree, t.ln_n, t.rate_constant)
            mask[enter] = True if rate >= 1.0 else t.rng.random(len(enter)) < rate
            est[enter] = t.edge_value(v)
            if fresh >= 0:
                est[fresh] = 0.0
        if v.parent is None:
            mask[W] = True
        if t.truncated:
            mask[0] = mask[-1] = True
        est[~mask] = INF
        v.mask = mask
        v.est = est if old_est is not None else None


def _ancestors(v: PSNode) -> set[int]:
    out = set()
    while v is not None:
        out.add(id(v))
        v = v.parent
    return out


# ------------------------------------------------------------------ queries


class QueryLog:
    __slots__ = ("visited", "copied", "recomputed", "decomposition")

    def __init__(self):
        self.visited = 0
        self.copied = 0
        self.recomputed = 0
        self.decomposition: Decomposition | None = None


def _codes(s) -> np.ndarray:
    if isinstance(s, np.ndarray):
        return s.astype(np.int64, copy=False)
    if isinstance(s, LabeledString):
        s = s.core_values()
    return np.fromiter((ord(c) for c in s), dtype=np.int64, count=len(s))


def dyn_edit_y(
    t3,
    x,
    y,
    k: int,
    K: int,
    *,
    method: str = "scan",
    log: QueryLog | None = None,
):
    """Estimate of ``TD^{<=K}_{root,0}(X, Y)`` from the self-comparison tree, or ``FAR``.

    ``t3`` is an :class:`EditTree` (or its :class:`PSTree`) over the current
    ``X`` at a threshold of at least ``3K``; ``x`` and ``y`` are the current
    strings (labelled strings, plain strings or code arrays).
    """
    tree: PSTree = t3.tree if isinstance(t3, EditTree) else t3
    xc = tree._xc
    yc = _codes(y)
    nx, ny = len(xc), len(yc)
    if method == "search":
        xl = x if isinstance(x, LabeledString) else LabeledString(tree.x_string(), seed=0)
        yl = y if isinstance(y, LabeledString) else LabeledString("".join(map(chr, yc)), seed=0)
        dec = decompose(xl, yl, k, method="search")
    else:
        dec = decompose(None, None, k, method="scan", x_codes=xc, y_codes=yc)
    if log is not None:
        log.decomposition = None if dec is FAR else dec
    if dec is FAR:
        return FAR
    if ny > tree.capacity:
        raise CapacityError("|Y| exceeds the tree capacity")
    wy = min(K, tree.capacity)
    w3 = tree.W
    if w3 < wy:
        raise ConfigError("the self-comparison tree window is narrower than K")
    k3 = tree.K
    size_w = 2 * wy + 1
    shifts = np.arange(-wy, wy + 1)
    cap_row = (K - np.abs(shifts)).astype(np.float64)
    tail = wy + max(0, nx - ny)
    ypad = np.concatenate([np.full(wy, -1), yc, np.full(tail, -1)])
    points = np.array(dec.points(), dtype=np.int64)
    bounds = np.array(dec.boundaries, dtype=np.int64)
    even_shift = np.array(dec.shifts, dtype=np.int64)
    lo3 = w3 - wy

    def relevant_mask(lo: int, hi: int, kv: int) -> np.ndarray:
        sel = points[(points >= lo - wy - kv) & (points <= hi + wy + kv)]
        diff = np.zeros(size_w + 1, dtype=np.int64)
        a = np.clip(sel - hi - kv + wy, 0, size_w)
        b = np.clip(sel - lo + kv + wy + 1, 0, size_w)
        np.add.at(diff, a, 1)
        np.add.at(diff, b, -1)
        return np.cumsum(diff[:-1]) > 0

    def copy_values(v: PSNode, lo: int, hi: int, kv: int, s: np.ndarray) -> np.ndarray:
        size = hi - lo + 1
        out = np.empty(len(s))
        left = lo + s - kv
        outside = (left > ny) | (hi + s + kv < 0)
        out[outside] = np.minimum(size, K - np.abs(s[outside]))
        inside = ~outside
        if inside.any():
            si = s[inside]
            ph = np.searchsorted(bounds, lo + si - kv, side="right") - 1
            target = si + even_shift[ph // 2]
            vals = np.empty(len(si))
            far = np.abs(target) > w3
            vals[far] = np.minimum(size, k3 - np.abs(target[far]))
            near = ~far
            if near.any():
                if not v.active:
                    vals[near] = 0.0
                else:
                    allowed = np.flatnonzero(v.mask) - w3
                    st = nearest_allowed(allowed, target[near])
                    vals[near] = v.est[st + w3]
            out[inside] = np.minimum(K - np.abs(si), vals)
        return out

    def query(v: PSNode, lo: int, req: np.ndarray) -> np.ndarray:
        vals = np.full(size_w, INF)
        if log is not None:
            log.visited += 1
        tree.visits += 1
        if not v.active:
            vals[req] = 0.0
            return vals
        size = v.size
        hi = lo + size - 1
        kv = min(K, size)
        rel = relevant_mask(lo, hi, kv) & req
        cp = req & ~rel
        if cp.any():
            vals[cp] = copy_values(v, lo, hi, kv, shifts[cp])
            if log is not None:
                log.copied += int(cp.sum())
        if rel.any():
            if log is not None:
                log.recomputed += int(rel.sum())
            if v.is_leaf:
                row = (ypad[lo : lo + size_w] != xc[lo]).astype(np.float64)
                vals[rel] = np.minimum(row, cap_row)[rel]
            else:
                need = _dilate(rel, kv)
                delta = np.zeros(size_w)
                pos = lo
                for h in v.children:
                    hreq = need & h.mask[lo3 : lo3 + size_w]
                    cv = query(h, pos, hreq)
                    delta += np.maximum(envelope_dense(cv), 0.0)
                    pos += h.size
                out = np.minimum(np.minimum(delta, float(size)), cap_row)
                vals[rel] = out[rel]
        return vals

    req = np.zeros(size_w, dtype=bool)
    req[wy] = True
    root_vals = query(tree.root, 0, req)
    return float(root_vals[wy])


def _dilate(mask: np.ndarray, r: int) -> np.ndarray:
    if r <= 0:
        return mask.copy()
    c = np.concatenate([[0], np.cumsum(mask)])
    n = len(mask)
    idx = np.arange(n)
    lo = np.clip(idx - r, 0, n)
    hi = np.clip(idx + r + 1, 0, n)
    return (c[hi] - c[lo]) > 0
