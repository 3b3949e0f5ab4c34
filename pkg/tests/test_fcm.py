import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bvpp_sim.errors import DegenerateInput
from bvpp_sim.fcm import fcm, memberships, standardize


def kmeans(x, init, iters=100):
    c = init.copy()
    for _ in range(iters):
        labels = np.argmin(((x[:, None] - c[None]) ** 2).sum(-1), axis=1)
        c = np.array([x[labels == k].mean(axis=0) for k in range(len(c))])
    return labels, c


def test_two_modes_split_exactly():
    pts = np.array([[0.0, 0.0]] * 10 + [[100.0, 100.0]] * 10)
    res = fcm(pts, c=2, seed=3)
    assert sorted(np.bincount(res.hard_labels)) == [10, 10]
    assert len(set(res.hard_labels[:10])) == 1 and len(set(res.hard_labels[10:])) == 1
    z, _, _ = standardize(pts)
    labels, cents = kmeans(z, z[[0, 10]])
    for k in range(2):
        mode = z[res.hard_labels == k][0]
        assert np.abs(res.centroids[k] - mode).max() <= 1e-6
    assert {tuple(np.round(c, 6)) for c in cents} == {tuple(np.round(c, 6)) for c in res.centroids}
    assert np.allclose(res.to_feature_space()[res.hard_labels[0]], [0, 0], atol=1e-4)


def test_zero_distance_rule():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.2]])
    u, _ = memberships(pts, pts[:2], 2.0)
    assert np.array_equal(u[0], [1.0, 0.0]) and np.array_equal(u[1], [0.0, 1.0])
    assert 0 < u[2, 0] < 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4), st.floats(1.5, 3.0))
def test_rows_sum_to_one_and_objective_monotone(seed, c, m):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(40, 2)) * rng.uniform(0.5, 5, 2)
    res = fcm(pts, c=c, m=m, seed=seed)
    assert max(res.row_sum_error) <= 1e-9
    h = np.array(res.objective_history)
    assert np.all(np.diff(h) <= 1e-9 * max(1.0, h[0]))
    assert np.allclose(res.membership.sum(axis=1), 1.0, atol=1e-9)
    assert set(res.hard_labels) <= set(range(c))


def test_deterministic_for_seed():
    pts = np.random.default_rng(0).normal(size=(60, 2))
    a, b = fcm(pts, c=3, seed=9), fcm(pts, c=3, seed=9)
    assert np.array_equal(a.membership, b.membership) and np.array_equal(a.centroids, b.centroids)


def test_degenerate_inputs():
    with pytest.raises(DegenerateInput):
        fcm(np.zeros((10, 2)), c=3)
    with pytest.raises(DegenerateInput):
        fcm(np.arange(6.0).reshape(3, 2), c=3)
    with pytest.raises(DegenerateInput):
        fcm(np.arange(10.0).reshape(5, 2), c=1)
