"""Approximate edit distance of two dynamic strings.

Levels ``k = 1, 2, 4, ...`` each solve the gap problem "``ED <= k`` or
``ED > K``" with ``K = c_gap * k * b * ceil(log_b n)``.  A level's answer is
refreshed lazily, at most every ``ceil(k/2)`` updates, so it may be stale by
fewer than ``k/2`` edits; the reported bracket accounts for that staleness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .decomposition import FAR
from .dynamic import EditTree, QueryLog, dyn_edit_y
from .errors import ConfigError, RangeError
from .labeled_string import LabeledString, draw_base
from .pstree import RATE_CONSTANT

CLOSE = "CLOSE"
FAR_ANSWER = "FAR"


@dataclass(frozen=True)
class EditOp:
    """``kind`` is ``S``, ``I`` or ``D``; ``target`` is ``X`` or ``Y``."""

    kind: str
    target: str
    pos: int
    char: str | None = None

    def __post_init__(self):
        if self.kind not in ("S", "I", "D"):
            raise ConfigError(f"unknown edit kind {self.kind!r}")
        if self.target not in ("X", "Y"):
            raise ConfigError(f"unknown target {self.target!r}")
        if self.kind != "D" and (self.char is None or len(self.char) != 1):
            raise ConfigError(f"{self.kind} needs a single character")

    def __str__(self) -> str:
        if self.kind == "D":
            return f"D {self.target} {self.pos}"
        return f"{self.kind} {self.target} {self.pos} {self.char}"


@dataclass
class EstimatorConfig:
    n: int = 0
    b: int = 4
    c_gap: int = 12
    seed: int = 0
    lazy: bool = True
    method: str = "scan"
    beta_scale: float = 1e-3
    rate_constant: float = RATE_CONSTANT

    def __post_init__(self):
        if self.b < 2:
            raise ConfigError("b must be at least 2")
        if self.c_gap < 1:
            raise ConfigError("c_gap must be positive")
        if self.method not in ("scan", "search"):
            raise ConfigError(f"unknown decomposition method {self.method!r}")


@dataclass
class GapLevel:
    k: int
    K: int
    tree_key: int = -1
    epoch_counter: int = 0
    last_answer: str | None = None
    estimate: float | None = None
    refreshes: int = 0

    @property
    def epoch(self) -> int:
        return (self.k + 1) // 2

    @property
    def due(self) -> bool:
        return self.last_answer is None or self.epoch_counter >= self.epoch


@dataclass
class Bracket:
    lower: int
    upper: int
    k_star: int
    answers: list[tuple[int, str | None, int]] = field(default_factory=list)

    def __iter__(self):
        return iter((self.lower, self.upper))

    @property
    def ratio(self) -> float:
        return self.upper / max(self.lower, 1)


def _codes(s: str) -> np.ndarray:
    return np.fromiter((ord(c) for c in s), dtype=np.int64, count=len(s))


class Estimator:
    """Maintains ``X`` and ``Y`` under edits and brackets ``ED(X, Y)``."""

    def __init__(self, x: str, y: str, config: EstimatorConfig | None = None, **kw):
        self.config = config if config is not None else EstimatorConfig(**kw)
        self.rng = np.random.default_rng(self.config.seed)
        self._base = draw_base(self.config.seed)
        self.visits = 0
        self.updates = 0
        self.global_rebuilds = 0
        self.query_log = QueryLog()
        self._rebuild(x, y)

    # --------------------------------------------------------- structure

    def _rebuild(self, x: str, y: str) -> None:
        cfg = self.config
        longest = max(len(x), len(y))
        self.capacity = max(2 * longest, cfg.n, cfg.b, 2)
        cap = self.capacity
        self.x = LabeledString(x, capacity=cap, base=self._base)
        self.y = LabeledString(y, capacity=cap, base=self._base)
        self._yc = _codes(y)
        self.depth_bound = max(1, math.ceil(math.log(cap) / math.log(cfg.b) - 1e-12))
        top = max(1, math.ceil(math.log2(cap)))
        self.levels = []
        for j in range(top + 1):
            k = 2**j
            self.levels.append(GapLevel(k, cfg.c_gap * k * cfg.b * self.depth_bound))
        groups: dict[int, list[GapLevel]] = {}
        for lv in self.levels:
            key = min(3 * lv.K, cap)
            lv.tree_key = key
            groups.setdefault(key, []).append(lv)
        self._group_params = {
            key: (max(3 * lv.K for lv in lvs), min(lv.K for lv in lvs) * cfg.beta_scale)
            for key, lvs in groups.items()
        }
        self.trees: dict[int, EditTree] = {}
        self._build_trees()
        self.global_rebuilds += 1
        if not self.config.lazy:
            for lv in self.levels:
                self._refresh(lv)

    def _build_trees(self) -> None:
        self.trees = {}
        x = self.x.core_string()
        if not x:
            return
        for key, (k3, beta) in sorted(self._group_params.items()):
            self.trees[key] = EditTree(
                x,
                k3,
                self.config.b,
                capacity=self.capacity,
                min_capacity=self.capacity,
                seed=self.rng,
                beta_root=beta,
                rate_constant=self.config.rate_constant,
            )

    def _needs_rebuild(self, nx: int, ny: int) -> bool:
        longest = max(nx, ny)
        return longest > self.capacity or (4 * longest < self.capacity and self.capacity > max(self.config.n, self.config.b, 2))

    # ----------------------------------------------------------- updates

    def apply_update(self, e: EditOp) -> None:
        s = self.x if e.target == "X" else self.y
        n = s.core_length
        if e.kind == "I":
            if not 0 <= e.pos <= n:
                raise RangeError(f"insert position {e.pos} outside [0, {n}]")
        elif not 0 <= e.pos < n:
            raise RangeError(f"position {e.pos} outside [0, {n})")
        self.updates += 1
        nx, ny = self.x.core_length, self.y.core_length
        if e.target == "X":
            nx += {"I": 1, "D": -1, "S": 0}[e.kind]
        else:
            ny += {"I": 1, "D": -1, "S": 0}[e.kind]
        if self._needs_rebuild(nx, ny) or (e.target == "X" and (nx == 0 or not self.trees)):
            x, y = list(self.x.core_string()), list(self.y.core_string())
            _apply_plain(x if e.target == "X" else y, e)
            self._rebuild("".join(x), "".join(y))
            return
        if e.target == "X":
            for t in self.trees.values():
                before = t.tree.visits
                if e.kind == "S":
                    t.substitute(e.pos, e.char)
                elif e.kind == "I":
                    t.insert(e.pos, e.char)
                else:
                    t.delete(e.pos)
                self.visits += t.tree.visits - before
        else:
            if e.kind == "S":
                self._yc[e.pos] = ord(e.char)
            elif e.kind == "I":
                self._yc = np.insert(self._yc, e.pos, ord(e.char))
            else:
                self._yc = np.delete(self._yc, e.pos)
        if e.kind == "S":
            s.substitute(e.pos, e.char)
        elif e.kind == "I":
            s.insert(e.pos, e.char)
        else:
            s.delete(e.pos)
        for lv in self.levels:
            lv.epoch_counter += 1
        if not self.config.lazy:
            for lv in self.levels:
                if lv.due:
                    self._refresh(lv)

    def apply_all(self, ops: Iterable[EditOp]) -> None:
        for e in ops:
            self.apply_update(e)

    # ----------------------------------------------------------- queries

    def _trivial(self, lv: GapLevel) -> str | None:
        nx, ny = self.x.core_length, self.y.core_length
        if abs(nx - ny) > lv.k:
            return FAR_ANSWER
        if lv.k >= max(nx, ny):
            return CLOSE
        return None

    def close_threshold(self, lv: GapLevel) -> float:
        t = self.trees[lv.tree_key].tree
        d = max(1, t.root.height)
        return t.root.alpha * 2 * self.config.b * d * lv.k + 2 * t.beta_root

    def _refresh(self, lv: GapLevel) -> None:
        lv.epoch_counter = 0
        lv.refreshes += 1
        lv.estimate = None
        triv = self._trivial(lv)
        if triv is not None:
            lv.last_answer = triv
            return
        t = self.trees[lv.tree_key]
        before = t.tree.visits
        est = dyn_edit_y(t, self.x, self._yc if self.config.method == "scan" else self.y,
                         lv.k, lv.K, method=self.config.method, log=self.query_log)
        self.visits += t.tree.visits - before
        if est is FAR:
            lv.last_answer = FAR_ANSWER
            return
        lv.estimate = est
        lv.last_answer = CLOSE if est <= self.close_threshold(lv) else FAR_ANSWER

    def _answer(self, lv: GapLevel) -> tuple[str, int]:
        """Current answer and its staleness, refreshing when due."""
        triv = self._trivial(lv)
        if triv is not None:
            return triv, 0
        if lv.due:
            self._refresh(lv)
        return lv.last_answer, lv.epoch_counter

    def query_distance(self) -> Bracket:
        """``(lower, upper)`` with ``lower <= ED(X, Y) <= upper`` w.h.p."""
        nx, ny = self.x.core_length, self.y.core_length
        longest = max(nx, ny)
        diff = abs(nx - ny)
        if nx == 0 or ny == 0:
            return Bracket(longest, longest, 0)
        lower = diff
        answers = []
        for lv in self.levels:
            ans, stale = self._answer(lv)
            answers.append((lv.k, ans, stale))
            if ans == CLOSE:
                upper = min(lv.K + lv.k + stale, longest)
                return Bracket(min(lower, upper), upper, lv.k, answers)
            lower = max(lower, lv.k + 1 - stale)
        # every level answered FAR: the top level's k already exceeds the length
        return Bracket(min(lower, longest), longest, 0, answers)

    def consistency_violations(self) -> list[str]:
        """Pairs of refreshed levels whose answers cannot both hold."""
        out = []
        far = [(lv.k + 1 - lv.epoch_counter, lv.k) for lv in self.levels if lv.last_answer == FAR_ANSWER]
        close = [(lv.K + lv.k + lv.epoch_counter, lv.k) for lv in self.levels if lv.last_answer == CLOSE]
        for lo, kf in far:
            for hi, kc in close:
                if lo > hi:
                    out.append(f"level {kf} FAR contradicts level {kc} CLOSE")
        return out

    # ------------------------------------------------------------- reads

    def x_string(self) -> str:
        return self.x.core_string()

    def y_string(self) -> str:
        return self.y.core_string()


def _apply_plain(s: list[str], e: EditOp) -> None:
    if e.kind == "S":
        s[e.pos] = e.char
    elif e.kind == "I":
        s.insert(e.pos, e.char)
    else:
        del s[e.pos]
