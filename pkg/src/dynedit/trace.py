"""Edit traces: generation, the line-oriented text format, and replay.

A trace file looks like::

    n=64
    b=4
    seed=7
    alphabet=4
    X=abca...
    Y=abda...
    S X 17 q
    I Y 3 z
    D X 9

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import bisect
import random
import time
from dataclasses import dataclass, field
from typing import Iterator, TextIO

from .errors import ConfigError, TraceFormatError
from .estimator import EditOp, Estimator, EstimatorConfig
from .oracles import edit_distance_np

PROFILES = ("random", "clustered-edits", "adversarial-block-moves")
CSV_VERSION = "# dynedit-replay v1"
CSV_COLUMNS = ("step", "ed_oracle", "lower", "upper", "visits", "micros_cumulative")
HEADER_KEYS = ("n", "b", "seed", "alphabet", "X", "Y")


@dataclass
class Trace:
    n: int
    b: int
    seed: int
    alphabet: int
    x: str
    y: str
    ops: list[EditOp] = field(default_factory=list)

    def dumps(self) -> str:
        lines = [
            f"n={self.n}",
            f"b={self.b}",
            f"seed={self.seed}",
            f"alphabet={self.alphabet}",
            f"X={self.x}",
            f"Y={self.y}",
        ]
        lines.extend(str(op) for op in self.ops)
        return "\n".join(lines) + "\n"

    def final_strings(self) -> tuple[str, str]:
        x, y = list(self.x), list(self.y)
        for op in self.ops:
            s = x if op.target == "X" else y
            if op.kind == "S":
                s[op.pos] = op.char
            elif op.kind == "I":
                s.insert(op.pos, op.char)
            else:
                del s[op.pos]
        return "".join(x), "".join(y)


def parse_trace(text: str) -> Trace:
    header: dict[str, str] = {}
    ops: list[EditOp] = []
    lens = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line and not ops:
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in HEADER_KEYS:
                raise TraceFormatError(f"unknown header key {key!r}", lineno)
            if key in header:
                raise TraceFormatError(f"duplicate header key {key!r}", lineno)
            header[key] = value.strip() if key not in ("X", "Y") else value.rstrip("\n").strip()
            continue
        if lens is None:
            missing = [k for k in HEADER_KEYS if k not in header]
            if missing:
                raise TraceFormatError(f"missing header keys {missing}", lineno)
            lens = {"X": len(header["X"]), "Y": len(header["Y"])}
        parts = line.split()
        try:
            kind, target, pos = parts[0], parts[1], int(parts[2])
        except (IndexError, ValueError):
            raise TraceFormatError(f"malformed op {line!r}", lineno) from None
        want = 3 if kind == "D" else 4
        if len(parts) != want:
            raise TraceFormatError(f"op {kind!r} takes {want - 1} arguments", lineno)
        try:
            op = EditOp(kind, target, pos, parts[3] if kind != "D" else None)
        except ConfigError as exc:
            raise TraceFormatError(str(exc), lineno) from None
        n = lens[target]
        hi = n if kind == "I" else n - 1
        if not 0 <= pos <= hi:
            raise TraceFormatError(f"position {pos} out of range for |{target}| = {n}", lineno)
        lens[target] += {"I": 1, "D": -1, "S": 0}[kind]
        ops.append(op)
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise TraceFormatError(f"missing header keys {missing}")
    try:
        n, b, seed, alphabet = (int(header[k]) for k in ("n", "b", "seed", "alphabet"))
    except ValueError as exc:
        raise TraceFormatError(f"bad numeric header: {exc}") from None
    return Trace(n, b, seed, alphabet, header["X"], header["Y"], ops)


def read_trace(path: str) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.read())


# ---------------------------------------------------------------- generation


class _Planted:
    """``Y`` as ``X`` plus a sorted set of planted edits, keyed by ``X`` position.

    Kinds: ``s`` (``Y`` differs at the counterpart of ``X[p]``), ``i`` (an
    extra ``Y`` character just before that counterpart), ``d`` (``X[p]`` has no
    counterpart).
    """

    def __init__(self):
        self.pos: list[int] = []
        self.kind: list[str] = []

    def __len__(self) -> int:
        return len(self.pos)

    def has(self, p: int) -> bool:
        k = bisect.bisect_left(self.pos, p)
        return k < len(self.pos) and self.pos[k] == p

    def y_index(self, p: int) -> int:
        """Index in ``Y`` of the slot just before ``X[p]``'s counterpart (after planted insertions before ``p``)."""
        k = bisect.bisect_left(self.pos, p)
        off = sum(1 if c == "i" else -1 if c == "d" else 0 for c in self.kind[:k])
        return p + off

    def add(self, p: int, kind: str) -> None:
        k = bisect.bisect_left(self.pos, p)
        self.pos.insert(k, p)
        self.kind.insert(k, kind)

    def shift(self, p: int, by: int) -> None:
        k = bisect.bisect_left(self.pos, p)
        for t in range(k, len(self.pos)):
            self.pos[t] += by


def gen_trace(
    profile: str,
    n: int,
    steps: int,
    k_target: int,
    seed: int,
    *,
    b: int = 4,
    alphabet: int = 4,
) -> Trace:
    """A deterministic trace whose ``X``/``Y`` pair stays about ``k_target`` edits apart.

    ``Y`` starts as ``X`` with ``k_target`` planted edits.  Most steps are
    mirrored: the same edit is applied to ``X`` and to the aligned position of
    ``Y`` as two consecutive ops, which keeps the planted alignment intact.
    """
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; choose from {PROFILES}")
    if n < 1 or steps < 0 or k_target < 0 or not 1 <= alphabet <= 26:
        raise ConfigError("need n >= 1, steps >= 0, k_target >= 0, 1 <= alphabet <= 26")
    rng = random.Random(seed)
    sigma = [chr(ord("a") + t) for t in range(alphabet)]
    x = [rng.choice(sigma) for _ in range(n)]
    planted = _Planted()
    y = list(x)
    k_target = min(k_target, n)
    for p in sorted(rng.sample(range(n), k_target), reverse=True):
        kind = rng.choice("sid")
        if kind == "s":
            y[p] = rng.choice([c for c in sigma if c != x[p]] or sigma)
        elif kind == "i":
            y.insert(p, rng.choice(sigma))
        else:
            del y[p]
        planted.add(p, kind)
    trace = Trace(n, b, seed, alphabet, "".join(x), "".join(y))
    ops = trace.ops
    xs, ys = list(x), list(y)
    center = rng.randrange(n)
    width = max(8, n // 32)
    flip = 0

    def pick(limit: int) -> int:
        if profile == "clustered-edits":
            return min(limit, max(0, center + rng.randint(-width, width)))
        return rng.randint(0, limit)

    while len(ops) < steps:
        if profile == "adversarial-block-moves":
            if planted.has(0) or not xs:
                kind = "I"
            else:
                kind = "I" if flip % 2 == 0 else "D"
            flip += 1
            p = 0
        else:
            kind = rng.choice("SID") if len(xs) > 1 else "I"
            p = pick(len(xs) if kind == "I" else len(xs) - 1)
            if kind != "I" and planted.has(p):
                kind = "I"
        q = planted.y_index(p)
        if kind == "I":
            c = rng.choice(sigma)
            ops.append(EditOp("I", "X", p, c))
            ops.append(EditOp("I", "Y", q, c))
            xs.insert(p, c)
            ys.insert(q, c)
            planted.shift(p, 1)
        elif kind == "D":
            # q is X[p]'s counterpart: planted insertions before p were counted
            ops.append(EditOp("D", "X", p))
            ops.append(EditOp("D", "Y", q))
            del xs[p]
            del ys[q]
            planted.shift(p + 1, -1)
        else:
            c = rng.choice(sigma)
            ops.append(EditOp("S", "X", p, c))
            ops.append(EditOp("S", "Y", q, c))
            xs[p] = c
            ys[q] = c
        if profile == "clustered-edits" and rng.random() < 0.02:
            center = rng.randrange(max(1, len(xs)))
    del ops[steps:]
    return trace


# ---------------------------------------------------------------- replay


def oracle_schedule(mode: str, n: int):
    """Parse ``on`` / ``off`` / ``every:M`` into a predicate over step indices."""
    if mode == "off":
        return lambda step: False
    if mode == "on":
        every = 1 if n <= 512 else 100
    elif mode.startswith("every:"):
        try:
            every = int(mode.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad oracle mode {mode!r}") from None
        if every < 1:
            raise ConfigError("oracle interval must be positive")
    else:
        raise ConfigError(f"bad oracle mode {mode!r}")
    return lambda step: step % every == 0


@dataclass
class ReportRow:
    step: int
    ed_oracle: int | None
    lower: int
    upper: int
    visits: int
    micros: int | None

    def csv(self) -> str:
        ed = "" if self.ed_oracle is None else str(self.ed_oracle)
        us = "" if self.micros is None else str(self.micros)
        return f"{self.step},{ed},{self.lower},{self.upper},{self.visits},{us}"

    @property
    def violated(self) -> bool:
        return self.ed_oracle is not None and not self.lower <= self.ed_oracle <= self.upper


@dataclass
class ReplaySummary:
    rows: int = 0
    checked: int = 0
    violations: int = 0
    hard_failures: list[str] = field(default_factory=list)
    max_ratio: float = 0.0


def ratio_bound(est: Estimator) -> float:
    cfg = est.config
    return 4.0 * cfg.c_gap * cfg.b * est.depth_bound


def replay(
    trace: Trace,
    oracle: str = "off",
    *,
    timing: bool = True,
    config: EstimatorConfig | None = None,
    summary: ReplaySummary | None = None,
) -> Iterator[ReportRow]:
    """Replay ``trace`` and yield one row per step (step 0 is the initial state)."""
    cfg = config if config is not None else EstimatorConfig(n=trace.n, b=trace.b, seed=trace.seed)
    summary = summary if summary is not None else ReplaySummary()
    check = oracle_schedule(oracle, trace.n)
    t0 = time.perf_counter()
    est = Estimator(trace.x, trace.y, cfg)
    for step in range(len(trace.ops) + 1):
        if step:
            est.apply_update(trace.ops[step - 1])
        br = est.query_distance()
        micros = int((time.perf_counter() - t0) * 1e6) if timing else None
        ed = edit_distance_np(est.x_string(), est.y_string()) if check(step) else None
        row = ReportRow(step, ed, br.lower, br.upper, est.visits, micros)
        summary.rows += 1
        if ed is not None:
            summary.checked += 1
            summary.violations += row.violated
        if br.lower > br.upper:
            summary.hard_failures.append(f"step {step}: lower {br.lower} > upper {br.upper}")
        if br.lower > 0 and br.ratio > ratio_bound(est):
            summary.hard_failures.append(f"step {step}: bracket ratio {br.ratio:.1f} above bound")
        summary.max_ratio = max(summary.max_ratio, br.ratio)
        yield row


def write_csv(rows, out: TextIO) -> None:
    out.write(CSV_VERSION + "\n")
    out.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        out.write(row.csv() + "\n")
