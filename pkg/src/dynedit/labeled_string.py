"""Uniquely labelled dynamic strings with order statistics and fingerprints.

A :class:`LabeledString` stores ``$^pad + core + $^pad`` in an AVL tree whose
nodes carry subtree sizes and Karp-Rabin fingerprints.  Every character gets a
fresh label on insertion; labels never change while the character is alive, so
positions can drift under edits while the label stays a stable handle.

Insertions and deletions address the *core* (positions ``0..core_length``),
while ``label``/``val``/``pos`` address the full padded string.  Fragment
comparisons and LCE queries use core coordinates.
"""

from __future__ import annotations

import random
from typing import Iterable, Iterator, NamedTuple

from .errors import CapacityError, ConfigError, LabelError, RangeError

SENTINEL = "$"
MOD = (1 << 61) - 1
_DEFAULT_SEED = 0x5EED


class LabeledChar(NamedTuple):
    value: str
    label: int


def _code(ch: str) -> int:
    return ord(ch) + 1


class _Node:
    __slots__ = ("value", "code", "label", "left", "right", "parent", "height", "size", "hash", "pw")

    def __init__(self, value: str, label: int, base: int):
        self.value = value
        self.code = _code(value)
        self.label = label
        self.left: _Node | None = None
        self.right: _Node | None = None
        self.parent: _Node | None = None
        self.height = 1
        self.size = 1
        self.hash = self.code
        self.pw = base


def draw_base(seed: int | None) -> int:
    """Fingerprint base drawn from a seeded PRNG."""
    rng = random.Random(_DEFAULT_SEED if seed is None else seed)
    return rng.randrange(1 << 20, MOD - 1)


class LabeledString:
    """Dynamic labelled string ``$^pad . core . $^pad``.

    ``capacity`` bounds the core length (``None`` means unbounded).  Two
    strings can only be compared by fingerprint if they share a ``base``;
    strings created with the same ``seed`` do.
    """

    def __init__(
        self,
        core: Iterable[str] = "",
        *,
        pad: int = 0,
        capacity: int | None = None,
        seed: int | None = None,
        base: int | None = None,
    ):
        if pad < 0:
            raise ConfigError("pad must be non-negative")
        self.pad = pad
        self.capacity = capacity
        self.base = draw_base(seed) if base is None else base
        self._next_label = 0
        self._nodes: dict[int, _Node] = {}
        chars = list(core)
        for ch in chars:
            self._check_char(ch)
        if capacity is not None and len(chars) > capacity:
            raise CapacityError(f"core length {len(chars)} exceeds capacity {capacity}")
        full = [SENTINEL] * pad + chars + [SENTINEL] * pad
        self._root = self._build(full, 0, len(full), None)
        self._pow_cache = [1]

    # ------------------------------------------------------------------ basics

    def _check_char(self, ch: str) -> None:
        if not isinstance(ch, str) or len(ch) != 1:
            raise ConfigError(f"characters must be length-1 strings, got {ch!r}")
        if ch == SENTINEL:
            raise ConfigError("the sentinel '$' cannot appear in the core")

    def _fresh(self, value: str) -> _Node:
        node = _Node(value, self._next_label, self.base)
        self._nodes[self._next_label] = node
        self._next_label += 1
        return node

    def _build(self, full: list[str], lo: int, hi: int, parent: _Node | None) -> _Node | None:
        if lo >= hi:
            return None
        mid = (lo + hi) // 2
        left = self._build(full, lo, mid, None)
        node = self._fresh(full[mid])
        right = self._build(full, mid + 1, hi, None)
        node.left, node.right, node.parent = left, right, parent
        if left is not None:
            left.parent = node
        if right is not None:
            right.parent = node
        self._update(node)
        return node

    def __len__(self) -> int:
        return self._root.size if self._root is not None else 0

    @property
    def core_length(self) -> int:
        return len(self) - 2 * self.pad

    @property
    def height(self) -> int:
        return self._root.height if self._root is not None else 0

    @property
    def next_label(self) -> int:
        return self._next_label

    def __repr__(self) -> str:
        return f"LabeledString({self.core_string()!r}, pad={self.pad})"

    # ------------------------------------------------------------- AVL plumbing

    def _update(self, n: _Node) -> None:
        l, r = n.left, n.right
        if l is None:
            ls, lh, lhash, lpw = 0, 0, 0, 1
        else:
            ls, lh, lhash, lpw = l.size, l.height, l.hash, l.pw
        if r is None:
            rs, rh, rhash, rpw = 0, 0, 0, 1
        else:
            rs, rh, rhash, rpw = r.size, r.height, r.hash, r.pw
        n.size = ls + rs + 1
        n.height = (lh if lh > rh else rh) + 1
        n.pw = lpw * self.base % MOD * rpw % MOD
        n.hash = ((lhash * self.base + n.code) % MOD * rpw + rhash) % MOD

    def _rot_right(self, y: _Node) -> _Node:
        x = y.left
        t = x.right
        x.right = y
        y.left = t
        if t is not None:
            t.parent = y
        x.parent = y.parent
        y.parent = x
        self._update(y)
        self._update(x)
        return x

    def _rot_left(self, x: _Node) -> _Node:
        y = x.right
        t = y.left
        y.left = x
        x.right = t
        if t is not None:
            t.parent = x
        y.parent = x.parent
        x.parent = y
        self._update(x)
        self._update(y)
        return y

    @staticmethod
    def _h(n: _Node | None) -> int:
        return n.height if n is not None else 0

    def _balance(self, n: _Node) -> _Node:
        self._update(n)
        bf = self._h(n.left) - self._h(n.right)
        if bf > 1:
            if self._h(n.left.left) < self._h(n.left.right):
                n.left = self._rot_left(n.left)
            return self._rot_right(n)
        if bf < -1:
            if self._h(n.right.right) < self._h(n.right.left):
                n.right = self._rot_right(n.right)
            return self._rot_left(n)
        return n

    def _insert_at(self, n: _Node | None, idx: int, new: _Node) -> _Node:
        if n is None:
            return new
        ls = n.left.size if n.left is not None else 0
        if idx <= ls:
            child = self._insert_at(n.left, idx, new)
            n.left = child
        else:
            child = self._insert_at(n.right, idx - ls - 1, new)
            n.right = child
        child.parent = n
        return self._balance(n)

    def _pop_min(self, n: _Node) -> tuple[_Node | None, _Node]:
        if n.left is None:
            return n.right, n
        sub, m = self._pop_min(n.left)
        n.left = sub
        if sub is not None:
            sub.parent = n
        return self._balance(n), m

    def _delete_at(self, n: _Node, idx: int) -> _Node | None:
        ls = n.left.size if n.left is not None else 0
        if idx < ls:
            n.left = self._delete_at(n.left, idx)
            if n.left is not None:
                n.left.parent = n
        elif idx > ls:
            n.right = self._delete_at(n.right, idx - ls - 1)
            if n.right is not None:
                n.right.parent = n
        else:
            self._removed = n.label
            del self._nodes[n.label]
            if n.left is None or n.right is None:
                child = n.left if n.left is not None else n.right
                if child is not None:
                    child.parent = n.parent
                return child
            sub, succ = self._pop_min(n.right)
            n.right = sub
            if sub is not None:
                sub.parent = n
            n.value, n.code, n.label = succ.value, succ.code, succ.label
            self._nodes[n.label] = n
        return self._balance(n)

    def _node_at(self, i: int) -> _Node:
        n = self._root
        while True:
            ls = n.left.size if n.left is not None else 0
            if i < ls:
                n = n.left
            elif i == ls:
                return n
            else:
                i -= ls + 1
                n = n.right

    def _check_full(self, i: int) -> None:
        if not 0 <= i < len(self):
            raise RangeError(f"position {i} outside [0, {len(self)})")

    # --------------------------------------------------------------- interface

    def insert(self, i: int, a: str) -> int:
        """Insert ``a`` at core position ``i``; returns the fresh label."""
        if not 0 <= i <= self.core_length:
            raise RangeError(f"insert position {i} outside [0, {self.core_length}]")
        self._check_char(a)
        if self.capacity is not None and self.core_length >= self.capacity:
            raise CapacityError(f"capacity {self.capacity} reached")
        node = self._fresh(a)
        self._root = self._insert_at(self._root, i + self.pad, node)
        self._root.parent = None
        return node.label

    def delete(self, i: int) -> int:
        """Delete the character at core position ``i``; returns its (now dead) label."""
        if not 0 <= i < self.core_length:
            raise RangeError(f"delete position {i} outside [0, {self.core_length})")
        self._root = self._delete_at(self._root, i + self.pad)
        if self._root is not None:
            self._root.parent = None
        return self._removed

    def substitute(self, i: int, a: str) -> int:
        """Replace the value at core position ``i`` keeping its label."""
        if not 0 <= i < self.core_length:
            raise RangeError(f"substitute position {i} outside [0, {self.core_length})")
        self._check_char(a)
        n = self._node_at(i + self.pad)
        n.value = a
        n.code = _code(a)
        while n is not None:
            self._update(n)
            n = n.parent
        return self._nodes_label(i + self.pad)

    def _nodes_label(self, i: int) -> int:
        return self._node_at(i).label

    def label(self, i: int) -> int:
        """Label of the character at padded position ``i``."""
        self._check_full(i)
        return self._node_at(i).label

    def val(self, i: int) -> str:
        """Value of the character at padded position ``i``."""
        self._check_full(i)
        return self._node_at(i).value

    def char(self, i: int) -> LabeledChar:
        self._check_full(i)
        n = self._node_at(i)
        return LabeledChar(n.value, n.label)

    def pos(self, label: int) -> int:
        """Padded position of a live label."""
        n = self._nodes.get(label)
        if n is None:
            raise LabelError(label)
        r = n.left.size if n.left is not None else 0
        while n.parent is not None:
            p = n.parent
            if p.right is n:
                r += (p.left.size if p.left is not None else 0) + 1
            n = p
        return r

    def has_label(self, label: int) -> bool:
        return label in self._nodes

    def core_pos(self, label: int) -> int:
        return self.pos(label) - self.pad

    def core_label(self, i: int) -> int:
        return self.label(i + self.pad)

    def core_val(self, i: int) -> str:
        return self.val(i + self.pad)

    # ----------------------------------------------------------- bulk reading

    def _iter_nodes(self, lo: int, hi: int) -> Iterator[_Node]:
        """In-order nodes for padded positions [lo, hi)."""
        lo = max(lo, 0)
        hi = min(hi, len(self))
        if lo >= hi:
            return
        stack: list[_Node] = []
        n = self._root
        i = lo
        while n is not None:
            ls = n.left.size if n.left is not None else 0
            if i < ls:
                stack.append(n)
                n = n.left
            elif i == ls:
                stack.append(n)
                break
            else:
                i -= ls + 1
                n = n.right
        count = hi - lo
        while count and stack:
            n = stack.pop()
            yield n
            count -= 1
            m = n.right
            while m is not None:
                stack.append(m)
                m = m.left

    def values(self, lo: int, hi: int) -> list[str]:
        """Values at padded positions [lo, hi) (clipped to the string)."""
        return [n.value for n in self._iter_nodes(lo, hi)]

    def labels(self, lo: int, hi: int) -> list[int]:
        return [n.label for n in self._iter_nodes(lo, hi)]

    def core_values(self, lo: int = 0, hi: int | None = None) -> list[str]:
        if hi is None:
            hi = self.core_length
        lo = max(lo, 0)
        hi = min(hi, self.core_length)
        return self.values(lo + self.pad, hi + self.pad)

    def core_string(self) -> str:
        return "".join(self.core_values())

    def full_string(self) -> str:
        return "".join(self.values(0, len(self)))

    def __iter__(self) -> Iterator[LabeledChar]:
        for n in self._iter_nodes(0, len(self)):
            yield LabeledChar(n.value, n.label)

    # ------------------------------------------------------------ fingerprints

    def _power(self, e: int) -> int:
        cache = self._pow_cache
        while len(cache) <= e:
            cache.append(cache[-1] * self.base % MOD)
        return cache[e]

    def prefix_hash(self, p: int) -> int:
        """Fingerprint of the padded prefix of length ``p``."""
        acc = 0
        n = self._root
        base = self.base
        while n is not None and p > 0:
            left = n.left
            ls = left.size if left is not None else 0
            if p <= ls:
                n = left
                continue
            if left is not None:
                acc = (acc * left.pw + left.hash) % MOD
            acc = (acc * base + n.code) % MOD
            p -= ls + 1
            n = n.right
        return acc

    def prefix_hashes(self, lo: int, hi: int) -> list[int]:
        """``[prefix_hash(p) for p in range(lo, hi + 1)]`` in one sweep."""
        acc = self.prefix_hash(lo)
        out = [acc]
        base = self.base
        for n in self._iter_nodes(lo, hi):
            acc = (acc * base + n.code) % MOD
            out.append(acc)
        return out

    def fingerprint(self, start: int, end: int) -> int:
        """Fingerprint of the core fragment [start, end)."""
        if not 0 <= start <= end <= self.core_length:
            raise RangeError(f"fragment [{start}, {end}) outside core of length {self.core_length}")
        a = self.prefix_hash(start + self.pad)
        b = self.prefix_hash(end + self.pad)
        return (b - a * self._power(end - start)) % MOD

    def fragment_equal(self, r1: tuple[int, int], other: LabeledString, r2: tuple[int, int]) -> bool:
        return fragment_equal(self, r1, other, r2)

    def lce(self, i: int, other: LabeledString, j: int) -> int:
        return lce(self, i, other, j)


def _same_base(s1: LabeledString, s2: LabeledString) -> None:
    if s1.base != s2.base:
        raise ConfigError("fingerprints are only comparable between strings sharing a base")


def fragment_equal(s1: LabeledString, range1: tuple[int, int], s2: LabeledString, range2: tuple[int, int]) -> bool:
    """Whether core fragments ``s1[range1]`` and ``s2[range2]`` hold equal values.

    No false negatives; a false positive needs a fingerprint collision, which
    happens with probability at most ``length / 2^61`` over the random base.
    """
    _same_base(s1, s2)
    a1, b1 = range1
    a2, b2 = range2
    if b1 - a1 != b2 - a2:
        return False
    if not 0 <= a1 <= b1 <= s1.core_length or not 0 <= a2 <= b2 <= s2.core_length:
        raise RangeError("fragment out of bounds")
    if a1 == b1:
        return True
    return s1.fingerprint(a1, b1) == s2.fingerprint(a2, b2)


def lce(s1: LabeledString, i: int, s2: LabeledString, j: int) -> int:
    """Length of the longest common prefix of core suffixes ``s1[i:]`` and ``s2[j:]``."""
    _same_base(s1, s2)
    if not 0 <= i <= s1.core_length or not 0 <= j <= s2.core_length:
        raise RangeError("lce start out of bounds")
    hi = min(s1.core_length - i, s2.core_length - j)
    # gallop, then binary search
    lo = 0
    step = 1
    while step <= hi and fragment_equal(s1, (i, i + step), s2, (j, j + step)):
        lo = step
        step *= 2
    hi = min(hi, step - 1) if step <= hi else hi
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if fragment_equal(s1, (i, i + mid), s2, (j, j + mid)):
            lo = mid
        else:
            hi = mid - 1
    return lo
