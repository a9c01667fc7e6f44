"""Invariant checks over live structures, shared by the CLI audit and the tests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamic import EditTree
from .estimator import Estimator, EstimatorConfig
from .oracles import edit_distance_np
from .pstree import PSTree, check_shape, envelope_dense
from .trace import Trace, ratio_bound


def local_violations(t: PSTree) -> list[str]:
    """Every stored table must equal what its children (or its leaf) imply."""
    W = t.W
    errs: list[str] = []

    def walk(v, lo: int) -> None:
        if v.mask is None:
            return
        m = v.mask
        if v.parent is None and not m[W]:
            errs.append("root does not store shift 0")
        if t.truncated and not (m[0] and m[-1]):
            errs.append(f"window edges missing at [{lo}, {lo + v.size})")
        if v.est is None:
            errs.append(f"node [{lo}, {lo + v.size}) has a mask but no table")
            return
        if np.isfinite(v.est[~m]).any():
            errs.append(f"values stored outside the allowed set at [{lo}, {lo + v.size})")
        if not v.active:
            if np.any(v.est[m] != 0):
                errs.append(f"inactive node [{lo}, {lo + v.size}) holds non-zero estimates")
            return
        if v.is_leaf:
            want = t.leaf_values(lo, 0, 2 * W)
        else:
            delta = np.zeros(2 * W + 1)
            pos = lo
            for h in v.children:
                if h.est is None:
                    delta += np.inf
                else:
                    delta += np.maximum(envelope_dense(h.est), 0.0)
                walk(h, pos)
                pos += h.size
            want = np.minimum(np.minimum(delta, float(v.size)), t._cap_row)
        if not np.allclose(v.est[m], want[m]):
            errs.append(f"table of [{lo}, {lo + v.size}) disagrees with its inputs")

    walk(t.root, 0)
    return errs


def edit_tree_violations(et: EditTree) -> list[str]:
    t = et.tree
    errs = [f"shape: {e}" for e in check_shape(t.root, t.b)]
    if t.root.size != t.n_x:
        errs.append("root size differs from |X|")
    if et.xs.core_string() != t.x_string():
        errs.append("labelled copy of X out of sync")
    if et.xs.pad != t.W or len(et.xs) != t.n_x + 2 * t.W:
        errs.append("label window does not cover [-W..W]")
    if t.n_x > t.capacity:
        errs.append("length above capacity")
    errs.extend(local_violations(t))
    return errs


@dataclass
class AuditReport:
    steps: int = 0
    hard: list[str] = field(default_factory=list)
    soft: list[str] = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.hard


def audit_trace(trace: Trace, *, config: EstimatorConfig | None = None, oracle_every: int = 1, structure_every: int = 1) -> AuditReport:
    """Replay ``trace`` checking every structural invariant after each step."""
    cfg = config if config is not None else EstimatorConfig(n=trace.n, b=trace.b, seed=trace.seed)
    rep = AuditReport()
    est = Estimator(trace.x, trace.y, cfg)
    x, y = list(trace.x), list(trace.y)
    for step in range(len(trace.ops) + 1):
        if step:
            op = trace.ops[step - 1]
            est.apply_update(op)
            s = x if op.target == "X" else y
            if op.kind == "S":
                s[op.pos] = op.char
            elif op.kind == "I":
                s.insert(op.pos, op.char)
            else:
                del s[op.pos]
        rep.steps += 1
        where = f"step {step}"
        if est.x_string() != "".join(x) or est.y_string() != "".join(y):
            rep.hard.append(f"{where}: strings diverged from the naive replay")
        if step % structure_every == 0:
            for key, et in est.trees.items():
                rep.hard.extend(f"{where}, tree {key}: {e}" for e in edit_tree_violations(et))
        br = est.query_distance()
        if br.lower > br.upper:
            rep.hard.append(f"{where}: empty bracket [{br.lower}, {br.upper}]")
        if br.lower > 0 and br.ratio > ratio_bound(est):
            rep.hard.append(f"{where}: bracket ratio {br.ratio:.1f} above {ratio_bound(est):.0f}")
        rep.soft.extend(f"{where}: {e}" for e in est.consistency_violations())
        if oracle_every and step % oracle_every == 0:
            ed = edit_distance_np(x, y)
            rep.checked += 1
            if not br.lower <= ed <= br.upper:
                rep.soft.append(f"{where}: ED {ed} outside [{br.lower}, {br.upper}]")
    return rep
