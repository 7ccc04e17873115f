import numpy as np
import pytest

from degenlab import _kernels
from degenlab.fdsolver import LogGrid, RoughCoefficients, assemble_operator
from degenlab.weighted_spaces import ap_interval_family

pytestmark = pytest.mark.skipif(_kernels.NUMBA_KERNELS is None, reason="numba not importable")


def both(name, *args):
    return (getattr(_kernels.NUMPY_KERNELS, name)(*args),
            getattr(_kernels.NUMBA_KERNELS, name)(*args))


def test_thomas():
    rng = np.random.default_rng(1)
    n = 500
    lower, upper = -rng.random(n), -rng.random(n)
    diag = 3.0 + rng.random(n)
    rhs = rng.standard_normal(n)
    (x0, ok0), (x1, ok1) = both("thomas", lower, diag, upper, rhs)
    assert ok0 and ok1
    assert np.max(np.abs(x0 - x1)) < 1e-12
    A = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
    assert np.allclose(A @ x1, rhs, atol=1e-12)


def test_thomas_singular_reports_failure():
    z = np.zeros(4)
    for x, ok in both("thomas", z, z, z, np.ones(4)):
        assert not ok


def test_march():
    grid = LogGrid(-3.0, 3.0, 129)
    op = assemble_operator(RoughCoefficients.constant(0.1), grid)
    m = 40
    ones = np.ones(m)
    u0 = np.maximum(np.exp(grid.s[1:-1]) - 1.0, 0.0)
    args = (op.kl, op.kd, op.ku, op.kl_b, op.ku_b, op.mass, op.react, 0.1 * ones, ones, ones,
            0.5, 1.0 / m, 0.5, 2, np.zeros((m + 1, grid.n - 2)), np.zeros(m + 1),
            np.full(m + 1, u0[-1]), u0)
    a, b = both("march", *args)
    a, b = a[0] if isinstance(a, tuple) else a, b[0] if isinstance(b, tuple) else b
    assert a.shape == (m + 1, grid.n - 2)
    assert np.max(np.abs(a - b)) < 1e-10


@pytest.mark.parametrize("a,b,p", [(0.0, 0.0, 2.0), (0.5, -0.5, 2.0), (-0.5, 0.5, 3.0)])
def test_ap_sup(a, b, p):
    lo, hi = ap_interval_family(2 ** 8)
    x0, x1 = both("ap_sup", lo, hi, a, b, p, 2.0 ** -16)
    assert x0 == pytest.approx(x1, rel=1e-12)


def test_critical_radii():
    rng = np.random.default_rng(2)
    pts = np.sort(rng.uniform(0, 20, 40))
    centers = np.sort(rng.uniform(-2, 22, 300))
    r0, r1 = both("critical_radii", pts[::2], pts[1::2], centers, 0.4)
    assert np.array_equal(np.isfinite(r0), np.isfinite(r1))
    fin = np.isfinite(r0)
    assert np.max(np.abs(r0[fin] - r1[fin])) < 1e-12


def test_env_switch(monkeypatch):
    monkeypatch.setenv("DEGENLAB_NUMBA", "0")
    assert _kernels.active() is _kernels.NUMPY_KERNELS
    monkeypatch.setenv("DEGENLAB_NUMBA", "1")
    assert _kernels.active() is _kernels.NUMBA_KERNELS
