import math

import numpy as np
import pytest

from codedgrad.errors import ParameterError
from codedgrad.straggler import (
    StragglerParams,
    completed_counts,
    p_exact,
    p_exact_vector,
    sample_completion_times,
)


def test_hand_values(params):
    # t = 0.1, r = 2: X thresholds 0.09, 0.04
    p0 = math.exp(-10 * 0.09)
    p2 = 1 - math.exp(-10 * 0.04)
    p1 = 1 - p0 - p2
    assert p_exact(0, 0.1, 2, params) == pytest.approx(p0, abs=1e-15)
    assert p_exact(1, 0.1, 2, params) == pytest.approx(p1, abs=1e-15)
    assert p_exact(2, 0.1, 2, params) == pytest.approx(p2, abs=1e-15)
    assert p0 == pytest.approx(0.40656965974059905, rel=1e-14)


def test_nothing_done_before_alpha(params):
    assert p_exact_vector(0.005, 3, params) == [1.0, 0.0, 0.0, 0.0]
    assert p_exact(0, 0.0, 3, params) == 1.0


def test_partial_window(params):
    # between alpha and 2 alpha only the first task can be done
    probs = p_exact_vector(0.015, 3, params)
    assert probs[2] == probs[3] == 0.0
    assert probs[1] == pytest.approx(1 - math.exp(-10 * 0.005))


def test_sums_to_one_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        p = StragglerParams(float(rng.uniform(0.1, 50)), float(rng.uniform(0, 0.5)))
        r = int(rng.integers(1, 6))
        t = float(rng.uniform(0, 3))
        v = p_exact_vector(t, r, p)
        assert abs(sum(v) - 1) < 1e-12
        assert min(v) >= 0


def test_parameter_checks(params):
    with pytest.raises(ParameterError):
        StragglerParams(0, 0.01)
    with pytest.raises(ParameterError):
        StragglerParams(1, -0.1)
    with pytest.raises(ParameterError):
        p_exact(3, 0.1, 2, params)
    with pytest.raises(ParameterError):
        p_exact(0, -1.0, 2, params)


def test_sampled_counts_follow_law(params):
    rng = np.random.default_rng(0)
    times = sample_completion_times(3, params, rng, size=200_000)
    assert times.shape == (200_000, 3)
    assert np.allclose(times[:, 1], 2 * times[:, 0])
    for t in (0.02, 0.08, 0.15, 0.3):
        counts = completed_counts(times, t)
        freq = np.bincount(counts, minlength=4) / len(counts)
        exact = p_exact_vector(t, 3, params)
        assert np.max(np.abs(freq - exact)) < 0.005


def test_single_worker_shape(params):
    out = sample_completion_times(2, params, np.random.default_rng(1))
    assert out.shape == (2,)
    assert out[0] >= params.alpha
