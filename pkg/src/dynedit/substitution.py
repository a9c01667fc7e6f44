"""Maintaining a static-shape tree under substitutions in ``X`` and ``Y``.

A substitution can only change ``TD_{v,s}`` for shifts whose alignment window
touches the edited position; those shifts are *relevant*.  Recomputing a
relevant shift needs children's values within ``K_v`` of it (*quasi-relevant*
shifts).  Both sets are short unions of intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import intervals as iv
from .errors import RangeError
from .pstree import PSNode, PSTree


@dataclass(frozen=True)
class RelevanceSets:
    relevant: list[iv.Interval]
    k_v: int
    K: int

    @property
    def quasi_relevant(self) -> list[iv.Interval]:
        return iv.clip(iv.dilate(self.relevant, self.k_v), -self.K, self.K)

    @property
    def in_scope(self) -> bool:
        return bool(self.relevant)


def _sets(rel: list[iv.Interval], K: int, k_v: int) -> RelevanceSets:
    return RelevanceSets(iv.clip(rel, -K, K), k_v, K)


def relevance_x(i_v: int, j_v: int, i: int, K: int) -> RelevanceSets:
    """Shifts of the node ``[i_v..j_v]`` affected by a substitution at ``X[i]``."""
    k_v = min(K, j_v - i_v + 1)
    rel = [(-K, K)] if i_v <= i <= j_v else []
    return _sets(rel, K, k_v)


def relevance_y(i_v: int, j_v: int, i: int, K: int) -> RelevanceSets:
    """Shifts ``s`` with ``[i-s-K_v .. i-s+K_v]`` meeting ``[i_v..j_v]``."""
    k_v = min(K, j_v - i_v + 1)
    return _sets([(i - j_v - k_v, i - i_v + k_v)], K, k_v)


def relevance_xx(i_v: int, j_v: int, i: int, K: int) -> RelevanceSets:
    """Substitution in the self-comparison tree: ``X`` plays both roles."""
    a = relevance_x(i_v, j_v, i, K)
    b = relevance_y(i_v, j_v, i, K)
    return _sets(iv.union(a.relevant, b.relevant), K, a.k_v)


class UpdateLog:
    """Per-update counters filled by the traversals."""

    __slots__ = ("visited", "quasi_volume", "scope")

    def __init__(self):
        self.visited = 0
        self.quasi_volume = 0
        self.scope: list[tuple[int, int]] = []


def refresh_relevant(t: PSTree, v: PSNode, lo: int, rel: RelevanceSets, recurse, log: UpdateLog | None) -> None:
    """Recompute ``v`` on ``rel.relevant`` after ``recurse(child, child_lo)`` updated the children."""
    w = t.W
    spans = [(max(a, -w) + w, min(b, w) + w) for a, b in rel.relevant if a <= w and b >= -w]
    if log is not None:
        log.quasi_volume += iv.size(iv.clip(rel.quasi_relevant, -w, w))
    if v.is_leaf:
        for a, b in spans:
            t._fill_leaf(v, lo, a, b)
        return
    pos = lo
    for h in v.children:
        recurse(h, pos)
        pos += h.size
    for a, b in spans:
        t.combine_range(v, a, b, rel.k_v)


def _substitute(t: PSTree, i: int, which: str, log: UpdateLog | None) -> None:
    K = t.K
    if which == "x":
        rel_fn = relevance_xx if t.self_mode else relevance_x
    else:
        rel_fn = relevance_y

    def visit(v: PSNode, lo: int) -> None:
        rel = rel_fn(lo, lo + v.size - 1, i, K)
        if not (v.active and rel.in_scope) or v.mask is None:
            return
        t.visits += 1
        if log is not None:
            log.visited += 1
            log.scope.append((lo, v.size))
        refresh_relevant(t, v, lo, rel, visit, log)

    visit(t.root, 0)


def substitute_x(t: PSTree, i: int, a: str, log: UpdateLog | None = None) -> None:
    """Replace ``X[i]`` by ``a`` and refresh every affected estimate."""
    if not 0 <= i < t.n_x:
        raise RangeError(f"substitution position {i} outside [0, {t.n_x})")
    labeled = getattr(t, "labeled_x", None)
    if labeled is not None:
        labeled.substitute(i, a)
    t.set_x(i, a)
    _substitute(t, i, "x", log)


def substitute_y(t: PSTree, i: int, a: str, log: UpdateLog | None = None) -> None:
    """Replace ``Y[i]`` by ``a`` and refresh every affected estimate."""
    if t.self_mode:
        raise RangeError("the self-comparison tree has no separate Y")
    if not 0 <= i < t.n_y:
        raise RangeError(f"substitution position {i} outside [0, {t.n_y})")
    labeled = getattr(t, "labeled_y", None)
    if labeled is not None:
        labeled.substitute(i, a)
    t.set_y(i, a)
    _substitute(t, i, "y", log)
