"""Acceptance suite: one test per criterion, each ending in a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

from __future__ import annotations

import itertools
import math
import random
import time

import numpy as np

from dynedit import intervals as iv
from dynedit import precision_sampling as ps
from dynedit.decomposition import FAR, decompose
from dynedit.dynamic import EditTree, insert_relevance
from dynedit.estimator import Estimator, EstimatorConfig
from dynedit.labeled_string import LabeledString
from dynedit.oracles import (
    TreeShape,
    capped_tree_distance_tables,
    edit_distance,
    edit_distance_np,
    tree_distance_tables,
)
from dynedit.pstree import (
    INF,
    PSTree,
    check_shape,
    delete_leaf_shape,
    insert_leaf_shape,
    range_min_envelope,
)
from dynedit.substitution import relevance_x, relevance_y, substitute_x, substitute_y
from dynedit.trace import PROFILES, gen_trace, ratio_bound


def binary(n: int) -> list[str]:
    return ["".join(p) for p in itertools.product("ab", repeat=n)]


def random_shape(n: int, rng: random.Random, max_b: int = 4, max_d: int = 3) -> TreeShape:
    if n == 1:
        return TreeShape.from_sizes(1)
    while True:
        b, d = rng.randint(2, max_b), rng.randint(1, max_d)
        if b**d >= n:
            return TreeShape.random(n, b, d, rng)


def rand_str(rng: random.Random, n: int, alphabet: str = "ab") -> str:
    return "".join(rng.choice(alphabet) for _ in range(n))


def plant(rng: random.Random, x: str, edits: int, alphabet: str = "abcd") -> str:
    y = list(x)
    for _ in range(edits):
        r = rng.random()
        if r < 1 / 3 and y:
            del y[rng.randrange(len(y))]
        elif r < 2 / 3:
            y.insert(rng.randint(0, len(y)), rng.choice(alphabet))
        elif y:
            y[rng.randrange(len(y))] = rng.choice(alphabet)
    return "".join(y)


def is_approx(true: float, est: float, alpha: float, beta: float) -> bool:
    return true / alpha - beta <= est <= alpha * true + beta


def root_td(shape: TreeShape, x: str, y: str) -> int:
    w = len(x) + len(y)
    return int(tree_distance_tables(shape, x, y, window=w)[shape.root.index][w])


# ------------------------------------------------------------------ 1


def test_criterion_01_sandwich(acceptance):
    rng = random.Random(1)
    pairs = [(x, y) for nx in range(1, 6) for x in binary(nx) for ny in range(6) for y in binary(ny)]
    for _ in range(500):
        pairs.append((rand_str(rng, rng.randint(1, 8)), rand_str(rng, rng.randint(0, 8))))
    low = low_short_y = up = corrected = 0
    for x, y in pairs:
        sh = random_shape(len(x), rng)
        td = root_td(sh, x, y)
        ed = edit_distance(x, y)
        if ed > td:
            low += 1
            if len(y) <= len(x):
                low_short_y += 1
        if ed > td + max(0, len(y) - len(x)):
            corrected += 1
        if td > 2 * max(sh.degree, 1) * max(sh.depth, 1) * ed:
            up += 1
    detail = (
        f"{len(pairs)} pairs: ED<=TD broken {low} times ({low_short_y} with |Y|<=|X|), "
        f"TD<=2bd*ED broken {up} times, ED<=TD+(|Y|-|X|)+ broken {corrected} times"
    )
    acceptance(1, low == 0 and up == 0, detail)


# ------------------------------------------------------------------ 2


def test_criterion_02_capping_identity(acceptance):
    rng = random.Random(2)
    pairs = [(x, y) for n in range(1, 7) for x in binary(n) for y in binary(n)]
    for n in (7, 8):
        pairs += [(rand_str(rng, n), rand_str(rng, n)) for _ in range(400)]
    for _ in range(400):
        pairs.append((rand_str(rng, rng.randint(1, 8)), rand_str(rng, rng.randint(0, 8))))
    bad = checked = 0
    for x, y in pairs:
        sh = random_shape(len(x), rng)
        w = len(x) + len(y) + 8
        full = tree_distance_tables(sh, x, y, window=w)
        for K in range(1, 9):
            cap = capped_tree_distance_tables(sh, x, y, K)
            limit = K - np.abs(np.arange(-K, K + 1))
            for v in sh.nodes:
                want = np.minimum(full[v.index][w - K : w + K + 1], limit)
                checked += 2 * K + 1
                bad += int(np.count_nonzero(cap[v.index] != want))
    acceptance(2, bad == 0, f"{len(pairs)} pairs, {checked} (node, shift, K) values, {bad} mismatches")


# ------------------------------------------------------------------ 3


def test_criterion_03_envelope(acceptance):
    rng = np.random.default_rng(3)
    bad = over = 0
    worst = 0.0
    for _ in range(1000):
        m, q = int(rng.integers(0, 40)), int(rng.integers(0, 40))
        ss = rng.choice(np.arange(-50, 51), size=m, replace=False).tolist()
        vals = rng.integers(0, 60, size=m).tolist()
        pts = list(zip(ss, vals))
        queries = set(rng.choice(np.arange(-60, 61), size=q, replace=False).tolist())
        counter = [0]
        got = range_min_envelope(pts, queries, counter)
        want = {}
        for s in queries:
            best = INF
            for sp, a in pts:
                best = min(best, a + 2 * abs(s - sp))
            want[s] = best
        bad += got != want
        if m + q:
            worst = max(worst, counter[0] / (m + q))
        over += counter[0] > 2 * (m + q)
    acceptance(3, bad == 0 and over == 0, f"1000 instances, {bad} mismatches, max ops/(|S|+|S'|) = {worst:.2f} (bound 2)")


# ------------------------------------------------------------------ 4


REGIMES = {"default": {}, "thinned": {"beta_root": 40.0, "rate_constant": 0.05}}


def test_criterion_04_static_accuracy(acceptance):
    parts, ok_all = [], True
    for name, kw in REGIMES.items():
        good = 0
        for seed in range(200):
            rng = random.Random(seed)
            x = rand_str(rng, 64, "abcd")
            y = plant(rng, x, rng.randint(0, 24))
            t = PSTree(x, y, 16, 4, seed=seed, **kw)
            shape, _ = t.to_shape()
            true = capped_tree_distance_tables(shape, x, y, 16)[shape.root.index][16]
            good += is_approx(true, t.root_estimate(0), t.root.alpha, t.root.beta)
        ok_all &= good >= 190
        parts.append(f"{name} {good}/200")
    acceptance(4, ok_all, "root estimate within (alpha, beta): " + ", ".join(parts) + " (need 190)")


# ------------------------------------------------------------------ 5


def stored_values_ok(t: PSTree, x: str, y: str) -> bool:
    shape, nodes = t.to_shape()
    K, W = t.K, t.W
    tab = capped_tree_distance_tables(shape, x, y, K)
    for sv in shape.nodes:
        v = nodes[sv.index]
        if not v.active or v.est is None:
            continue
        true = tab[sv.index][K - W : K + W + 1][v.mask]
        est = v.est[v.mask]
        if not np.all((true / v.alpha - v.beta <= est) & (est <= v.alpha * true + v.beta)):
            return False
    return True


def test_criterion_05_substitution_maintenance(acceptance):
    regimes = {"default": {}, "thinned": {"beta_root": 20.0, "rate_constant": 0.05}}
    parts, ok_all = [], True
    for name, kw in regimes.items():
        good = samples = 0
        for seed in range(50):
            rng = random.Random(seed)
            x = list(rand_str(rng, 32, "abcd"))
            y = list(x)
            for _ in range(rng.randint(0, 6)):
                y[rng.randrange(32)] = rng.choice("abcd")
            t = PSTree(x, y, 8, 4, seed=seed, **kw)
            audited = set(rng.sample(range(100), 10))
            for step in range(100):
                i = rng.randrange(32)
                c = rng.choice("abcd")
                if rng.random() < 0.5:
                    x[i] = c
                    substitute_x(t, i, c)
                else:
                    y[i] = c
                    substitute_y(t, i, c)
                if step in audited:
                    samples += 1
                    good += stored_values_ok(t, "".join(x), "".join(y))
        ok_all &= good >= 0.95 * samples
        parts.append(f"{name} {good}/{samples}")
    acceptance(5, ok_all, "audited steps with every stored value within (alpha_v, beta_v): " + ", ".join(parts))


# ------------------------------------------------------------------ 6


def substitution_locality(rng: random.Random, n: int) -> tuple[int, int]:
    K = rng.randint(1, 8)
    x = rand_str(rng, n)
    y = rand_str(rng, max(0, n + rng.randint(-2, 2)))
    sh = random_shape(n, rng)
    base = capped_tree_distance_tables(sh, x, y, K)
    shifts = range(-K, K + 1)
    checked = bad = 0
    cases = [("x", i, c) for i in range(n) for c in "ab" if c != x[i]]
    cases += [("y", i, c) for i in range(len(y)) for c in "ab" if c != y[i]]
    for which, i, c in cases:
        if which == "x":
            new = capped_tree_distance_tables(sh, x[:i] + c + x[i + 1 :], y, K)
        else:
            new = capped_tree_distance_tables(sh, x, y[:i] + c + y[i + 1 :], K)
        for v in sh.nodes:
            rel_fn = relevance_x if which == "x" else relevance_y
            rel = rel_fn(v.lo, v.hi - 1, i, K).relevant
            for s in shifts:
                if not iv.contains(rel, s):
                    checked += 1
                    bad += base[v.index][s + K] != new[v.index][s + K]
    return checked, bad


class Labels:
    """Naive label bookkeeping: core labels are integers, padding is keyed by side."""

    def __init__(self, n: int):
        self.core = list(range(n))
        self.next = n

    def at(self, p: int):
        if p < 0:
            return ("L", p)
        if p >= len(self.core):
            return ("R", p - len(self.core))
        return self.core[p]

    def pos(self, label) -> int:
        if isinstance(label, tuple):
            return label[1] if label[0] == "L" else len(self.core) + label[1]
        return self.core.index(label)

    def has(self, label) -> bool:
        return isinstance(label, tuple) or label in self.core


def snapshot(et: EditTree, K: int):
    shape, nodes = et.tree.to_shape()
    tab = capped_tree_distance_tables(shape, et.x_string(), et.x_string(), K)
    return {id(nodes[sv.index]): (sv, tab[sv.index]) for sv in shape.nodes}


def edit_locality(rng: random.Random, n: int) -> tuple[int, int]:
    K = rng.randint(1, 8)
    b = rng.choice([2, 3, 4])
    x = rand_str(rng, n)
    seed = rng.randrange(10**6)
    cases = [("I", p, c) for p in range(n + 1) for c in "ab"]
    if n > 1:
        cases += [("D", p, None) for p in range(n)]
    checked = bad = 0
    for kind, p, c in cases:
        et = EditTree(x, K, b, capacity=40, min_capacity=40, seed=seed, beta_root=0.01)
        old_labels, new_labels = Labels(n), Labels(n)
        before = snapshot(et, K)
        if kind == "I":
            et.insert(p, c)
            new_labels.core.insert(p, new_labels.next)
        else:
            et.delete(p)
            del new_labels.core[p]
        after = snapshot(et, K)
        for key, (sv1, row1) in after.items():
            if key not in before:
                continue
            sv0, row0 = before[key]
            if sv0.size != sv1.size:
                continue
            if kind == "I":
                rel = insert_relevance(sv1.lo, sv1.hi - 1, p, K).relevant
                for s_new in range(-K, K + 1):
                    if iv.contains(rel, s_new):
                        continue
                    label = new_labels.at(sv1.lo + s_new)
                    s_old = old_labels.pos(label) - sv0.lo
                    if abs(s_old) <= K:
                        checked += 1
                        bad += row0[s_old + K] != row1[s_new + K]
            else:
                rel = insert_relevance(sv0.lo, sv0.hi - 1, p, K).relevant
                for s_old in range(-K, K + 1):
                    if iv.contains(rel, s_old):
                        continue
                    label = old_labels.at(sv0.lo + s_old)
                    if not new_labels.has(label):
                        bad += 1
                        continue
                    s_new = new_labels.pos(label) - sv1.lo
                    if abs(s_new) <= K:
                        checked += 1
                        bad += row0[s_old + K] != row1[s_new + K]
    return checked, bad


def test_criterion_06_locality(acceptance):
    rng = random.Random(6)
    sub_checked = sub_bad = edit_checked = edit_bad = 0
    for n in range(1, 17):
        for _ in range(2):
            c, b = substitution_locality(rng, n)
            sub_checked, sub_bad = sub_checked + c, sub_bad + b
            c, b = edit_locality(rng, n)
            edit_checked, edit_bad = edit_checked + c, edit_bad + b
    ok = sub_bad == 0 and edit_bad == 0 and sub_checked > 0 and edit_checked > 0
    detail = (
        f"substitution: {sub_checked} irrelevant values, {sub_bad} changed; "
        f"insert/delete by label: {edit_checked} irrelevant values, {edit_bad} changed"
    )
    acceptance(6, ok, detail)


# ------------------------------------------------------------------ 7


def codes(s: str) -> np.ndarray:
    return np.array([ord(c) for c in s], dtype=np.int64)


def both_decompositions(x: str, y: str, k: int, seed: int):
    a = decompose(LabeledString(x, seed=seed), LabeledString(y, seed=seed), k, method="search")
    b = decompose(None, None, k, method="scan", x_codes=codes(x), y_codes=codes(y))
    return a, b


def test_criterion_07_decomposition(acceptance):
    rng = random.Random(7)
    close_far = close_invalid = disagree = 0
    done = 0
    while done < 200:
        x = rand_str(rng, rng.randint(1, 256), "abcd")
        y = plant(rng, x, rng.randint(0, 16))
        ed = edit_distance_np(x, y)
        if ed > 16:
            continue
        k = rng.randint(ed, 16)
        for dec in both_decompositions(x, y, k, done):
            if dec is FAR:
                close_far += 1
            elif dec.violations(x, y):
                close_invalid += 1
        a, b = both_decompositions(x, y, k, done)
        disagree += (a is FAR) != (b is FAR) or (a is not FAR and a != b)
        done += 1
    far_invalid = far_answers = 0
    done = 0
    while done < 200:
        x = rand_str(rng, rng.randint(1, 256), "abcd")
        y = plant(rng, x, rng.randint(1, 48))
        ed = edit_distance_np(x, y)
        if ed == 0:
            continue
        k = rng.randint(0, min(16, ed - 1))
        for dec in both_decompositions(x, y, k, done):
            if dec is FAR:
                far_answers += 1
            elif dec.violations(x, y):
                far_invalid += 1
        done += 1
    ok = close_far == 0 and close_invalid == 0 and far_invalid == 0 and disagree == 0
    detail = (
        f"ED<=k: {close_far} FAR, {close_invalid} invalid, {disagree} search/scan disagreements; "
        f"ED>k: {far_answers}/400 FAR, {far_invalid} invalid"
    )
    acceptance(7, ok, detail)


# ------------------------------------------------------------------ 8


def test_criterion_08_transfer(acceptance):
    rng = random.Random(8)
    checked = bad = 0
    for n in range(1, 17):
        for _ in range(8):
            x = rand_str(rng, n, "abc")
            y = plant(rng, x, rng.randint(0, 3), "abc")
            ed = edit_distance(x, y)
            k = rng.randint(ed, ed + 2)
            K = rng.randint(max(k, 1), 8)
            dec = decompose(None, None, k, method="scan", x_codes=codes(x), y_codes=codes(y))
            assert dec is not FAR
            sh = random_shape(n, rng)
            xy = capped_tree_distance_tables(sh, x, y, K)
            xx = capped_tree_distance_tables(sh, x, x, 3 * K)
            for v in sh.nodes:
                kv = min(K, v.size)
                for s in range(-K, K + 1):
                    a, b = v.lo + s - kv, v.hi - 1 + s + kv
                    for lo, hi, shift in dec.phrases():
                        if shift is not None and lo <= a and b < hi:
                            checked += 1
                            want = min(xx[v.index][s + shift + 3 * K], K - abs(s))
                            bad += xy[v.index][s + K] != want
                            break
    acceptance(8, bad == 0 and checked > 0, f"{checked} (node, shift) pairs inside phrases, {bad} violations")


# ------------------------------------------------------------------ 9


def test_criterion_09_end_to_end(acceptance):
    t0 = time.perf_counter()
    audited = contained = ratio_bad = 0
    worst = 0.0
    for seed in range(20):
        profile = PROFILES[seed % len(PROFILES)]
        tr = gen_trace(profile, 256, 1000, (4, 8, 16, 32)[seed % 4], seed, b=4)
        est = Estimator(tr.x, tr.y, EstimatorConfig(n=tr.n, b=tr.b, seed=seed))
        bound = ratio_bound(est)
        x, y = list(tr.x), list(tr.y)
        for step in range(len(tr.ops) + 1):
            if step:
                op = tr.ops[step - 1]
                est.apply_update(op)
                s = x if op.target == "X" else y
                if op.kind == "S":
                    s[op.pos] = op.char
                elif op.kind == "I":
                    s.insert(op.pos, op.char)
                else:
                    del s[op.pos]
            br = est.query_distance()
            if br.lower > 0:
                worst = max(worst, br.ratio)
                ratio_bad += br.ratio > bound
            if step % 10 == 0:
                audited += 1
                contained += br.lower <= edit_distance_np(x, y) <= br.upper
    rate = contained / audited
    detail = (
        f"{contained}/{audited} audited brackets contain ED ({rate:.1%}), "
        f"max ratio {worst:.0f} vs bound {bound:.0f}, {ratio_bad} ratio violations, "
        f"{time.perf_counter() - t0:.0f}s"
    )
    acceptance(9, rate >= 0.95 and ratio_bad == 0, detail)


# ------------------------------------------------------------------ 10


def shape_stress(b: int, steps: int, seed: int) -> tuple[int, float]:
    t = PSTree("a" * 128, None, 4, b, capacity=10**6, with_tables=False)
    rng = random.Random(seed)
    bad = 0
    for _ in range(steps):
        n = t.root.size
        if (rng.random() < 0.5 and n < 256) or n <= 64:
            insert_leaf_shape(t, rng.randint(0, n))
        else:
            delete_leaf_shape(t, rng.randrange(n))
        bad += len(check_shape(t.root, b))
    spans = [u / b**h for h, u, rebuilt, own in t.stats.lifetimes if rebuilt and own and h >= 1]
    return bad, min(spans, default=math.inf)


def labeled_roundtrip(steps: int, seed: int) -> int:
    rng = random.Random(seed)
    s = LabeledString("abcd" * 8, pad=3, seed=seed)
    naive = [(s.core_label(i), s.core_val(i)) for i in range(s.core_length)]
    bad = 0
    for step in range(steps):
        r = rng.random()
        if r < 0.4 or len(naive) < 2:
            p, c = rng.randint(0, len(naive)), rng.choice("abcd")
            naive.insert(p, (s.insert(p, c), c))
        elif r < 0.75:
            p = rng.randrange(len(naive))
            bad += s.delete(p) != naive.pop(p)[0]
        else:
            p, c = rng.randrange(len(naive)), rng.choice("abcd")
            bad += s.substitute(p, c) != naive[p][0]
            naive[p] = (naive[p][0], c)
        lb, ch = naive[rng.randrange(len(naive))]
        bad += s.core_val(s.core_pos(lb)) != ch
        if step % 100 == 0:
            bad += s.core_string() != "".join(c for _, c in naive)
            bad += [s.core_label(i) for i in range(s.core_length)] != [lb for lb, _ in naive]
            bad += s.full_string() != "$" * 3 + s.core_string() + "$" * 3
    return bad


def test_criterion_10_structure(acceptance):
    bad4, span4 = shape_stress(4, 100_000, 10)
    bad2, _ = shape_stress(2, 10_000, 11)
    bad8, span8 = shape_stress(8, 10_000, 12)
    label_bad = labeled_roundtrip(20_000, 13)
    shape_bad = bad4 + bad2 + bad8
    ok = shape_bad == 0 and label_bad == 0 and min(span4, span8) >= 1 / 8
    detail = (
        f"1.2e5 shape updates (b=4,2,8), {shape_bad} violations; "
        f"min updates per rebuilt node / b^h: {span4:.3f} (b=4), {span8:.3f} (b=8); "
        f"labeled string: {label_bad} mismatches in 2e4 ops"
    )
    acceptance(10, ok, detail)


# ------------------------------------------------------------------ 11


CALIBRATION = 2.0


def test_criterion_11_precision_sampling(acceptance):
    rng = np.random.default_rng(11)
    n, trials, alpha, beta = 16, 1000, 2.0, 1.0
    worst_mean, worst_fail, ok = 0.0, 0.0, True
    for eps in (0.05, 0.1, 0.25, 0.5):
        for delta in (1e-2, 1e-3, 1e-4, 1e-6):
            p = ps.make_params(eps, delta)
            mean = float(np.mean(1.0 / ps.sample_many(p, rng, 100_000)))
            bound = CALIBRATION * eps**-2 * math.log(1 / delta) ** 2
            worst_mean = max(worst_mean, mean / bound)
            ok &= mean <= bound
            fails = 0
            for trial in range(trials):
                a = rng.uniform(0, 10, n) * (rng.random(n) < 0.5)
                u = ps.sample_many(p, rng, n)
                hi, lo = alpha * a + beta * u, np.maximum(a / alpha - beta * u, 0.0)
                mode = trial % 3
                if mode == 0:
                    noisy = hi
                elif mode == 1:
                    noisy = lo
                else:
                    noisy = lo + rng.random(n) * (hi - lo)
                out = ps.recover(noisy, u, alpha, beta, p)
                fails += not is_approx(a.sum(), out, (1 + eps) * alpha, beta)
            worst_fail = max(worst_fail, fails / trials / (2 * n * delta))
            ok &= fails / trials <= 2 * n * delta
    detail = f"max mean(1/u) / bound {worst_mean:.2f} (C={CALIBRATION:g}); max failure rate / 2n*delta {worst_fail:.2f}"
    acceptance(11, ok, detail)


# ------------------------------------------------------------------ 12


def visits_per_update(n: int, steps: int = 10_000, seed: int = 0) -> float:
    rng = random.Random(seed)
    et = EditTree(rand_str(rng, n, "abcd"), 8, 16, seed=seed)
    start = et.tree.visits
    length = n
    for _ in range(steps):
        r = rng.random()
        if r < 1 / 3:
            et.insert(rng.randint(0, length), rng.choice("abcd"))
            length += 1
        elif r < 2 / 3:
            et.delete(rng.randrange(length))
            length -= 1
        else:
            et.substitute(rng.randrange(length), rng.choice("abcd"))
    return (et.tree.visits - start) / steps


def test_criterion_12_scaling(acceptance):
    t0 = time.perf_counter()
    small = visits_per_update(2**12)
    large = visits_per_update(2**16)
    ratio = large / small
    detail = f"visits/update {small:.2f} at 2^12, {large:.2f} at 2^16, ratio {ratio:.2f} (bound 4), {time.perf_counter() - t0:.0f}s"
    acceptance(12, ratio <= 4, detail)


def test_short_y_sandwich_holds():
    """The lower bound restricted to ``|Y| <= |X|``, plus the length-corrected form."""
    rng = random.Random(101)
    for _ in range(300):
        x = rand_str(rng, rng.randint(1, 8))
        y = rand_str(rng, rng.randint(0, 10))
        sh = random_shape(len(x), rng)
        td, ed = root_td(sh, x, y), edit_distance(x, y)
        assert ed <= td + max(0, len(y) - len(x))
        if len(y) <= len(x):
            assert ed <= td
