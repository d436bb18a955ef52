import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coulae.bound import BoundInputs, effective_K, estimate_xi, theorem2_bound
from coulae.data import grid_dataset
from coulae.kernel import KernelSpec
from coulae.net import MlpParams, identity_mlp


def _inputs(**kw):
    base = dict(N=1000, K=1.0, xi=1.0, lam=100.0, s=0.1, u=0.1, v=0.1, t=0.1)
    base.update(kw)
    return BoundInputs(**base)


def test_reference_value():
    res = theorem2_bound(_inputs())
    assert res.probability == pytest.approx(4 * math.exp(-20) + 4 * math.exp(-10), rel=1e-14)
    assert res.probability == pytest.approx(1.816e-4, rel=1e-3)
    assert res.threshold == pytest.approx(0.1 + 100 * 0.3)


def test_clamped_for_tiny_slack():
    res = theorem2_bound(_inputs(s=1e-12, u=1e-12, v=1e-12, t=1e-12))
    assert res.raw == pytest.approx(8.0)
    assert res.probability == 1.0


def test_odd_n_uses_floor():
    res = theorem2_bound(_inputs(N=5, s=0.5))
    assert res.terms[1] == pytest.approx(2 * math.exp(-2 * 2 * 0.25))


@pytest.mark.parametrize("bad", [dict(N=1), dict(N=2.5), dict(K=0.0), dict(xi=-1.0), dict(t=0.0),
                                 dict(lam=0.0), dict(s=math.inf)])
def test_rejects_invalid_inputs(bad):
    with pytest.raises(ValueError):
        _inputs(**bad)


pos = st.floats(1e-2, 5.0)


@given(st.integers(2, 5000), pos, pos, pos, pos, pos, pos)
def test_monotonicity(N, K, xi, s, u, v, t):
    r = theorem2_bound(_inputs(N=N, K=K, xi=xi, s=s, u=u, v=v, t=t)).raw
    assert theorem2_bound(_inputs(N=2 * N, K=K, xi=xi, s=s, u=u, v=v, t=t)).raw <= r
    for name in ("s", "u", "v", "t"):
        kw = dict(N=N, K=K, xi=xi, s=s, u=u, v=v, t=t)
        kw[name] *= 1.5
        assert theorem2_bound(_inputs(**kw)).raw <= r
    assert theorem2_bound(_inputs(N=N, K=1.5 * K, xi=xi, s=s, u=u, v=v, t=t)).raw >= r
    assert theorem2_bound(_inputs(N=N, K=K, xi=1.5 * xi, s=s, u=u, v=v, t=t)).raw >= r
    assert 0.0 <= theorem2_bound(_inputs(N=N, K=K, xi=xi, s=s, u=u, v=v, t=t)).probability <= 1.0


def test_doubling_n_strictly_decreases():
    assert theorem2_bound(_inputs(N=2000)).raw < theorem2_bound(_inputs(N=1000)).raw


@given(st.floats(1e-3, 1e3))
def test_lambda_only_moves_the_threshold(lam):
    a, b = theorem2_bound(_inputs(lam=lam)), theorem2_bound(_inputs(lam=1.0))
    assert a.probability == b.probability and a.terms == b.terms


def test_effective_k():
    assert effective_K(KernelSpec("gaussian", h=2, sigma=0.3)) == 1.0
    assert effective_K(KernelSpec("imq", h=3, c=7.0)) == 1.0
    assert effective_K(KernelSpec("coulomb", h=3, epsilon=1e-3)) == pytest.approx(1 / (4 * math.pi * 1e-3))
    assert effective_K(KernelSpec("coulomb", h=3, epsilon=0.0)) == math.inf
    assert effective_K(KernelSpec("coulomb", h=2, epsilon=1e-3)) == math.inf


def test_estimate_xi():
    X = grid_dataset(50, 0)
    H = grid_dataset(20, 1)
    assert estimate_xi(identity_mlp(2), identity_mlp(2), X, H) == (0.0, 0.0)
    zero = MlpParams([np.zeros((2, 2))], [np.zeros(2)])
    xi, mean = estimate_xi(identity_mlp(2), zero, X, H)
    both = np.vstack([X, H])
    assert xi == pytest.approx(((both**2).sum(1)).max(), rel=1e-14)
    assert mean == pytest.approx(((both**2).sum(1)).mean(), rel=1e-14)
    with pytest.raises(ValueError):
        estimate_xi(identity_mlp(2), zero, X, np.empty((0, 2)))
