import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lpmlat.errors import InvalidSpec
from lpmlat.filters import (
    FilterSpec,
    FilterState,
    NonFiniteSample,
    composite_kernel,
    filter_channel,
    flag_outliers,
    gaussian_reference,
    weight,
    weights,
)

specs = st.builds(
    FilterSpec,
    window=st.sampled_from([1, 3, 5, 9, 15, 31]),
    passes=st.integers(1, 5),
    variance_window=st.sampled_from([1, 5, 31]),
)


def stream(spec, xs):
    state = FilterState(spec)
    return [state.push(x) for x in xs]


def test_spec_validation():
    for kw in (dict(window=4), dict(window=0), dict(passes=0), dict(variance_window=2),
               dict(outlier_variance_threshold=0.0), dict(weight_floor=0.0)):
        with pytest.raises(InvalidSpec):
            FilterSpec(**kw)


def test_delay_and_warmup():
    s = FilterSpec(window=31, passes=4, variance_window=31)
    assert s.delay == 60
    assert s.warmup_samples == 4 * 30 + 30
    assert FilterSpec(5, 1).delay == 2


def test_constant_stream():
    spec = FilterSpec(5, 3, 7)
    out = stream(spec, [2.5] * 60)
    for s in out[spec.warmup_samples:]:
        assert s.value == pytest.approx(2.5, abs=1e-12)
        assert s.variance == pytest.approx(0.0, abs=1e-20)
        assert not s.warmup
    assert all(s.warmup for s in out[: spec.warmup_samples])


def test_unit_impulse_box():
    out = [s.value for s in stream(FilterSpec(5, 1, 1), [1.0] + [0.0] * 9)]
    np.testing.assert_allclose(out[:5], 0.2, rtol=1e-15)
    np.testing.assert_allclose(out[5:], 0.0, atol=1e-17)
    # symmetric kernel: its centre of mass sits (N-1)/2 samples after the input
    assert np.dot(np.arange(10), out) / np.sum(out) == pytest.approx(2.0)


def test_step_response_is_monotone_s_curve():
    spec = FilterSpec(5, 4, 1)
    out = np.array([s.value for s in stream(spec, [0.0] * 5 + [1.0] * 30)])
    np.testing.assert_allclose(out, np.convolve(np.r_[np.zeros(5), np.ones(30)], composite_kernel(spec))[:35], atol=1e-12)
    assert np.all(np.diff(out) >= -1e-15)
    assert out[-1] == pytest.approx(1.0)
    box = np.full(5, 0.2)
    np.testing.assert_allclose(composite_kernel(spec), np.convolve(np.convolve(np.convolve(box, box), box), box))


def test_composite_kernel_examples():
    np.testing.assert_allclose(composite_kernel(FilterSpec(3, 1)), [1 / 3] * 3, rtol=1e-15)
    np.testing.assert_allclose(composite_kernel(FilterSpec(3, 2)), np.array([1, 2, 3, 2, 1]) / 9, rtol=1e-15)


@given(specs)
def test_kernel_properties(spec):
    k = composite_kernel(spec)
    assert len(k) == spec.passes * (spec.window - 1) + 1
    assert abs(k.sum() - 1.0) <= 1e-12
    np.testing.assert_allclose(k, k[::-1], atol=1e-15)
    # centre of mass is the group delay
    assert np.dot(np.arange(len(k)), k) == pytest.approx(spec.delay, abs=1e-9)


def _gauss_distance(spec):
    k, g = composite_kernel(spec), gaussian_reference(spec)
    return np.abs(k - g).max() / k.max()


def test_box_cascade_approaches_gaussian():
    # continuous limit for 4 passes: Irwin-Hall(4) peak 2/3 vs normal peak sqrt(3 / (2 pi))
    limit = (math.sqrt(3 / (2 * math.pi)) - 2 / 3) / (2 / 3)
    assert _gauss_distance(FilterSpec(301, 4)) == pytest.approx(limit, rel=0.02)
    assert _gauss_distance(FilterSpec(15, 4)) == pytest.approx(0.037493, abs=1e-6)
    d = [_gauss_distance(FilterSpec(31, p)) for p in (1, 2, 4, 8, 16)]
    assert all(a > b for a, b in zip(d, d[1:]))
    assert d[-1] < 0.01


@given(specs, st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=200))
def test_streaming_equals_batch(spec, xs):
    out = np.array([s.value for s in stream(spec, xs)])
    ref = np.convolve(xs, composite_kernel(spec))[: len(xs)]
    np.testing.assert_allclose(out, ref, atol=1e-9)


@given(specs, st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(spec, seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=80), rng.normal(size=80)
    lhs = [s.value for s in stream(spec, a * x + b * y)]
    rhs = a * np.array([s.value for s in stream(spec, x)]) + b * np.array([s.value for s in stream(spec, y)])
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


@given(specs, st.lists(st.floats(-100, 100), min_size=1, max_size=120))
def test_moving_variance_matches_window(spec, xs):
    out = stream(spec, xs)
    y = np.r_[np.zeros(spec.variance_window - 1), [s.value for s in out]]
    for k, s in enumerate(out):
        w = y[k : k + spec.variance_window]
        assert s.variance >= 0
        assert s.variance == pytest.approx(w.var(), abs=1e-7)
        assert s.weight > 0


def test_group_delay_by_cross_correlation():
    spec = FilterSpec(9, 3, 1)
    x = np.random.default_rng(0).normal(size=5000)
    y = np.array([s.value for s in stream(spec, x)])
    lags = np.arange(40)
    xc = [np.dot(x[: len(x) - L], y[L:]) for L in lags]
    assert lags[int(np.argmax(xc))] == spec.delay


def test_non_finite_rejected_state_unchanged():
    state = FilterState(FilterSpec(3, 2, 3))
    for v in (1.0, 2.0, 3.0):
        state.push(v)
    with pytest.raises(NonFiniteSample):
        state.push(math.nan)
    with pytest.raises(NonFiniteSample):
        state.push(math.inf)
    assert state.samples_seen == 3
    ref = FilterState(FilterSpec(3, 2, 3))
    for v in (1.0, 2.0, 3.0):
        ref.push(v)
    assert state.push(4.0) == ref.push(4.0)


def test_weights_examples():
    class S:
        def __init__(self, v):
            self.variance = v

    assert weights([S(1.0), S(4.0)]) == [1.0, 0.25]
    assert weight(0.0, 1e-6) == 1e6
    assert math.isfinite(weight(0.0, 1e-6))


def test_fixed_threshold_flags_in_stream():
    spec = FilterSpec(3, 1, 3, outlier_variance_threshold=0.5)
    out = stream(spec, [0.0] * 10 + [10.0] * 3 + [0.0] * 10)
    flagged = [s.frame_index for s in out if s.outlier]
    assert flagged and all(out[k].variance > 0.5 for k in flagged)
    assert not any(s.outlier for s in out if s.warmup)


def test_adaptive_threshold():
    var = np.r_[np.ones(10) * 99, np.full(100, 0.01), [1.0]]
    warm = np.r_[np.ones(10, bool), np.zeros(101, bool)]
    mask, thr = flag_outliers(var, warm, FilterSpec())
    assert thr == pytest.approx(0.25)
    assert mask.sum() == 1 and mask[-1]


def test_outlier_gets_smallest_weight():
    rng = np.random.default_rng(2)
    spec = FilterSpec()
    clean = filter_channel(rng.uniform(-0.1, 0.1, 3000), spec)
    x = rng.uniform(-0.1, 0.1, 3000)
    x[1500:1600] += 10.0
    dirty = filter_channel(x, spec)
    k = 1500 + spec.variance_delay + 50
    assert dirty.weight[k] < clean.weight[k] / 100
    assert dirty.outlier[k] and not clean.outlier.any()
