import numpy as np
import pytest

from oda.baselines import BaselineModel, batch_da_fit, kmeans_fit, svq_fit, svq_step
from oda.core import OdaConfig
from oda.data import gen_blobs, stream
from oda.exceptions import NotClassifier, TooFewSamples


def test_svq_single_step():
    m = BaselineModel([[0.0, 0.0]], "svq")
    svq_step(m, [2.0, 0.0], stepsize_fn=lambda v: 0.5)
    np.testing.assert_allclose(m.codebook[0], [1.0, 0.0])
    assert m.update_counts.tolist() == [1]


def test_svq_tie_goes_to_lower_index():
    m = BaselineModel([[0.0, 0.0], [2.0, 0.0]], "svq")
    svq_step(m, [1.0, 0.0], stepsize_fn=lambda v: 0.5)
    np.testing.assert_allclose(m.codebook, [[0.5, 0.0], [2.0, 0.0]])


def test_svq_point_mass_converges():
    x0 = np.array([0.3, -0.7])
    m = svq_fit([[5.0, 5.0]], ((x0, None) for _ in range(1000)), 1000)
    np.testing.assert_allclose(m.codebook[0], x0, atol=1e-3)


def test_svq_single_codevector_is_running_mean():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(500, 3))
    m = BaselineModel([X[0]], "svq")
    m.update_counts[:] = 1
    running = X[0].copy()
    for t, x in enumerate(X[1:], start=2):
        svq_step(m, x)
        running = running + (x - running) / t
        assert np.max(np.abs(m.codebook[0] - running)) <= 1e-10
    np.testing.assert_allclose(m.codebook[0], X.mean(axis=0), atol=1e-10)


def test_svq_labeled_winner_of_other_class_stays():
    m = BaselineModel([[0.0, 0.0], [5.0, 0.0]], "svq", labels=np.array([0, 1]))
    svq_step(m, [1.0, 0.0], label=1)
    np.testing.assert_allclose(m.codebook, [[0.0, 0.0], [5.0, 0.0]])
    svq_step(m, [1.0, 0.0], stepsize_fn=lambda v: 0.5, label=0)
    np.testing.assert_allclose(m.codebook[0], [0.5, 0.0])


def test_svq_idivergence_step_stays_positive():
    m = BaselineModel([[0.1, 0.1]], "svq", "i-divergence")
    svq_step(m, [0.001, 3.0], stepsize_fn=lambda v: 0.9)
    assert (m.codebook > 0).all()
    # the move is preconditioned by 1 / mu
    assert m.codebook[0, 1] == pytest.approx(0.1 + 0.9 * 2.9 / 0.1)


def test_unlabeled_svq_cannot_predict():
    with pytest.raises(NotClassifier):
        BaselineModel([[0.0]], "svq").predict([[1.0]])


def test_kmeans_two_points():
    m = kmeans_fit([[0.0, 0.0], [4.0, 1.0]], 2)
    assert sorted(map(tuple, m.codebook)) == [(0.0, 0.0), (4.0, 1.0)]
    assert m.history.summary["distortion"] == 0.0


def test_kmeans_single_centroid_is_mean():
    m = kmeans_fit([[0, 0], [1, 0], [0, 1], [1, 1]], 1)
    np.testing.assert_allclose(m.codebook[0], [0.5, 0.5])


def test_kmeans_rejects_large_k():
    with pytest.raises(TooFewSamples):
        kmeans_fit([[0.0], [1.0]], 3)


@pytest.mark.parametrize("div", ["euclidean", "i-divergence"])
def test_kmeans_distortion_non_increasing(div):
    ds = gen_blobs(600, rng_seed=3)
    X = ds.points - ds.points.min(axis=0) + 0.1
    m = kmeans_fit(X, 7, divergence=div, rng_seed=1)
    dist = [r.avg_distortion for r in m.history.levels]
    assert len(dist) >= 2
    assert all(b <= a + 1e-12 for a, b in zip(dist, dist[1:]))


def test_batch_da_collapses_at_high_temperature():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(400, 2))
    cfg = OdaConfig.from_domain(float(np.ptp(X, axis=0).max()), 2)
    cfg = OdaConfig(**{**cfg.__dict__, "t_min": cfg.t_max * 0.5})
    model, rep = batch_da_fit(X, cfg, rng_seed=0)
    assert rep.k_trace[0] == 1
    np.testing.assert_allclose(model.codebook.mean(axis=0), X.mean(axis=0), atol=1e-2)


def test_batch_da_stays_in_hull_and_counts_presentations():
    ds = gen_blobs(300, rng_seed=4)
    cfg = OdaConfig.from_domain(ds.delta_s, ds.d, t_min=0.05 * ds.delta_s * ds.d)
    model, rep = batch_da_fit(ds.points, cfg, rng_seed=2)
    lo, hi = ds.points.min(axis=0), ds.points.max(axis=0)
    assert (model.codebook >= lo - 1e-9).all() and (model.codebook <= hi + 1e-9).all()
    seen = [r.samples_seen_cumulative for r in rep.levels]
    assert all(s % len(ds) == 0 for s in seen)
    assert all(a < b for a, b in zip(seen, seen[1:]))
    assert max(rep.k_trace) <= cfg.k_max


def test_baseline_round_trip():
    m = svq_fit([[0.0, 0.0], [1.0, 1.0]], stream(np.eye(2), 0, labels=np.array([0, 1])),
                50, labels=np.array([0, 1]))
    back = BaselineModel.from_dict(m.to_dict())
    np.testing.assert_array_equal(back.codebook, m.codebook)
    np.testing.assert_array_equal(back.predict(np.eye(2)), m.predict(np.eye(2)))
