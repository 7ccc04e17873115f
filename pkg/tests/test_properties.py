import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenlab.exact1d import LowerOrderRatios, indicial_roots
from degenlab.errors import DegenerateRoots
from degenlab.inkspots import IntervalSet
from degenlab.weighted_spaces import NormSpec, SampledFunction, lp_theta_norm

finite = st.floats(-5, 5, allow_nan=False)
ps = st.floats(1.1, 6.0)


def bump(center, width, n=1201):
    return SampledFunction.from_log(
        lambda s: np.exp(-((s - center) / width) ** 2), -10.0, 10.0, n)


@settings(max_examples=60, deadline=None)
@given(c=st.floats(-3, 3), k=st.floats(-4, 4), p=ps, theta=finite)
def test_norm_homogeneity(c, k, p, theta):
    u = bump(c, 0.7)
    spec = NormSpec(p, theta)
    assert lp_theta_norm(u.scaled(k), spec) == pytest.approx(
        abs(k) * lp_theta_norm(u, spec), rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(c=st.floats(-2, 2), steps=st.integers(-100, 100), p=ps, theta=finite)
def test_dilation_covariance(c, steps, p, theta):
    u = bump(c, 0.5)
    shift = steps * u.h
    spec = NormSpec(p, theta)
    assert lp_theta_norm(u.dilated(shift), spec) == pytest.approx(
        math.exp(-theta * shift / p) * lp_theta_norm(u, spec), rel=1e-11)


@settings(max_examples=200, deadline=None)
@given(nb=finite, nbh=finite, nc=st.floats(-5, 30))
def test_vieta(nb, nbh, nc):
    try:
        r = indicial_roots(LowerOrderRatios(nb, nbh, nc))
    except DegenerateRoots:
        return
    assert r.alpha < r.beta
    b = 1.0 + nb + nbh
    scale = 1.0 + b * b + abs(nc)
    assert abs(r.alpha + r.beta + b) < 1e-12 * scale
    assert abs(r.alpha * r.beta + nc) < 1e-12 * scale

intervals = st.lists(st.tuples(st.floats(-50, 50), st.floats(0.01, 10)).map(
    lambda t: (t[0], t[0] + t[1])), max_size=8)


@settings(max_examples=150, deadline=None)
@given(a=intervals, b=intervals)
def test_interval_algebra(a, b):
    A, B = IntervalSet(a), IntervalSet(b)
    U, I = A.union(B), A.intersection(B)
    assert U.total_length + I.total_length == pytest.approx(A.total_length + B.total_length,
                                                            abs=1e-9)
    assert A.union(A).intervals == A.intervals
    assert A.intersection(A).total_length == pytest.approx(A.total_length, abs=1e-12)
    assert A.difference_measure(B) == pytest.approx(A.total_length - I.total_length, abs=1e-9)
    lo, hi = zip(*U.intervals) if U.intervals else ((), ())
    assert all(h < l2 for h, l2 in zip(hi, lo[1:]))
