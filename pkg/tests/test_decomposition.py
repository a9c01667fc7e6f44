from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynedit.decomposition import FAR, decompose, dpm_query, scan_order
from dynedit.errors import RangeError
from dynedit.labeled_string import LabeledString
from dynedit.oracles import edit_distance


def codes(s: str) -> np.ndarray:
    return np.array([ord(c) for c in s], dtype=np.int64)


def both(x: str, y: str, k: int):
    a = decompose(LabeledString(x, seed=1), LabeledString(y, seed=1), k, method="search")
    b = decompose(None, None, k, method="scan", x_codes=codes(x), y_codes=codes(y))
    return a, b


def test_example_phrases():
    d = decompose(LabeledString("abcd", seed=0), LabeledString("abXd", seed=0), 1)
    assert d.phrases() == [(0, 2, 0), (2, 3, None), (3, 4, 0)]
    assert d.points() == [0, 2, 3, 4]


def test_dpm_query_examples():
    x = LabeledString("abcabc", seed=2)
    y = LabeledString("xabcab", seed=2)
    assert dpm_query(x, y, 1, 4, 2) == -1
    assert dpm_query(x, y, 0, 1, 2) is None
    with pytest.raises(RangeError):
        dpm_query(x, y, 3, 9, 1)


def test_scan_order():
    assert scan_order(2) == [0, -1, 1, -2, 2]


def test_length_guard_and_far():
    x, y = "aaaa", "aaaaaaa"
    assert decompose(LabeledString(x), LabeledString(y), 2) is FAR
    assert not FAR
    assert repr(FAR) == "FAR"


@settings(max_examples=300, deadline=None)
@given(st.text("ab", max_size=30), st.lists(st.tuples(st.integers(0, 2), st.integers(0, 40), st.sampled_from("abc")), max_size=6), st.integers(0, 10))
def test_decomposition_sound_and_methods_agree(x, edits, k):
    y = list(x)
    for op, p, c in edits:
        if op == 0 and y:
            del y[p % len(y)]
        elif op == 1:
            y.insert(p % (len(y) + 1), c)
        elif y:
            y[p % len(y)] = c
    y = "".join(y)
    a, b = both(x, y, k)
    assert (a is FAR) == (b is FAR)
    if a is FAR:
        assert edit_distance(x, y) > k
        return
    assert a.boundaries == b.boundaries and a.shifts == b.shifts
    assert a.violations(x, y) == []
    assert a.dpm_calls <= (2 * a.k + 2) * (np.log2(max(len(y), 1)) + 2)


def test_never_far_within_k():
    rng = random.Random(3)
    for _ in range(200):
        n = rng.randint(1, 80)
        x = "".join(rng.choice("abcd") for _ in range(n))
        y = list(x)
        for _ in range(rng.randint(0, 6)):
            y.insert(rng.randint(0, len(y)), rng.choice("abcd"))
        y = "".join(y)
        ed = edit_distance(x, y)
        _, d = both(x, y, ed)
        assert d is not FAR
        assert d.violations(x, y) == []
