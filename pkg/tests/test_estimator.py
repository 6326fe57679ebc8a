import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import MinMaxScaler

from oda import ODAClassifier, ODAClustering
from oda.data import gen_blobs, gen_circles

FAST = dict(t_min=None, max_obs_per_level=3000)


def test_params_round_trip():
    est = ODAClassifier(k_max=30, gamma=0.7, gibbs="plain", random_state=5)
    params = est.get_params()
    assert params["k_max"] == 30 and params["gibbs"] == "plain"
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(k_max=12)
    assert est.k_max == 12


def test_classifier_on_circles():
    ds = gen_circles(600, rng_seed=1)
    est = ODAClassifier(random_state=0, **FAST).fit(ds.points, ds.labels)
    assert est.score(ds.points, ds.labels) >= 0.95
    proba = est.predict_proba(ds.points[:20])
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert est.cluster_centers_.shape[1] == 2
    assert est.report_.k_trace[0] == 2


def test_classifier_string_labels_and_determinism():
    ds = gen_blobs(400, rng_seed=2)
    y = np.array(["red", "green", "blue"])[ds.labels]
    a = ODAClassifier(random_state=3, **FAST).fit(ds.points, y)
    b = ODAClassifier(random_state=3, **FAST).fit(ds.points, y)
    assert set(a.predict(ds.points)) <= {"red", "green", "blue"}
    np.testing.assert_array_equal(a.cluster_centers_, b.cluster_centers_)
    assert a.report_.to_dict() == b.report_.to_dict()


def test_pipeline_and_cross_validation():
    ds = gen_blobs(300, rng_seed=4)
    pipe = make_pipeline(MinMaxScaler(), ODAClassifier(random_state=0, **FAST))
    scores = cross_val_score(pipe, ds.points, ds.labels, cv=3)
    assert scores.mean() >= 0.9


def test_explicit_init_array():
    ds = gen_circles(300, rng_seed=2)
    est = ODAClassifier(init=[[5.0, 5.0], [6.0, 6.0]], random_state=0, **FAST)
    est.fit(ds.points, ds.labels)
    with pytest.raises(ValueError):
        ODAClassifier(init=[[0.0, 0.0]]).fit(ds.points, ds.labels)


def test_clustering_transform_and_score():
    ds = gen_blobs(400, rng_seed=5)
    est = ODAClustering(random_state=0, t_min=0.1 * ds.delta_s * 2, max_obs_per_level=3000)
    labels = est.fit_predict(ds.points)
    assert labels.shape == (400,)
    D = est.transform(ds.points)
    assert D.shape == (400, est.n_clusters_)
    np.testing.assert_array_equal(D.argmin(axis=1), labels)
    assert est.score(ds.points) == pytest.approx(-D.min(axis=1).mean())
