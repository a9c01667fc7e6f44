from __future__ import annotations

import math

import numpy as np
import pytest

from dynedit import precision_sampling as ps
from dynedit.errors import ArityError, ConfigError


def test_floor_is_the_half_delta_quantile():
    for eps, delta in [(0.1, 1e-3), (0.25, 1e-4), (0.5, 0.2)]:
        p = ps.make_params(eps, delta)
        assert ps.base_cdf(p, p.tau) == pytest.approx(delta / 2, rel=1e-9)


def test_samples_lie_in_range_and_are_seeded():
    p = ps.make_params(0.25, 1e-4)
    u = ps.sample_many(p, np.random.default_rng(1), 10_000)
    assert u.min() >= p.tau and u.max() <= 1.0
    a = [ps.sample(p, np.random.default_rng(7)) for _ in range(3)]
    assert a[0] == a[1] == a[2]


def test_inverse_mean_matches_integral():
    p = ps.make_params(0.25, 1e-4)
    emp = float(np.mean(1.0 / ps.sample_many(p, np.random.default_rng(0), 200_000)))
    assert emp == pytest.approx(ps.expected_inverse(p), rel=0.05)
    # calibration constant frozen at 2
    assert emp <= 2.0 * 0.25**-2 * math.log(1e4) ** 2


def test_recover_examples():
    p = ps.make_params(0.25, 1e-4)
    assert ps.recover([5.0], [1.0], 1.0, 0.0, p) == pytest.approx(5.0)
    assert ps.recover([0.0, 0.0], [0.3, 0.2], 2.0, 1.0, p) <= 1.0
    assert ps.recover([3.0, -1.0], [1.0, 1.0], 1.0, 0.0, p) == 3.0
    with pytest.raises(ArityError):
        ps.recover([1.0], [1.0, 1.0], 1.0, 0.0, p)
    with pytest.raises(ArityError):
        ps.recover_array(np.zeros((2, 3)), np.ones(3))


def test_bad_params():
    with pytest.raises(ConfigError):
        ps.make_params(0.0, 0.1)
    with pytest.raises(ConfigError):
        ps.make_params(0.1, 1.0)


def test_recover_with_exact_inputs():
    p = ps.make_params(0.25, 1e-5)
    rng = np.random.default_rng(3)
    fails = 0
    for _ in range(1000):
        a = rng.uniform(0, 10, 50)
        u = ps.sample_many(p, rng, 50)
        out = ps.recover(a, u, 1.0, 1.0, p)
        if not a.sum() / 1.25 - 1 <= out <= 1.25 * a.sum() + 1:
            fails += 1
    assert fails <= 10


def test_recover_array_is_columnwise_recover():
    p = ps.make_params(0.1, 1e-3)
    rng = np.random.default_rng(4)
    est = rng.normal(2, 3, (5, 7))
    cols = ps.recover_array(est)
    for j in range(7):
        assert cols[j] == pytest.approx(ps.recover(est[:, j], [1.0] * 5, 1.0, 0.0, p))
