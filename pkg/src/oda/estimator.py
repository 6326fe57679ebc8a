"""scikit-learn estimators wrapping :class:`~oda.core.OdaModel`."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, ClusterMixin, TransformerMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import OdaConfig, OdaModel
from .data import stream


def _seeds(random_state):
    ss = np.random.SeedSequence(random_state)
    model_seq, stream_seq = ss.spawn(2)
    return np.random.default_rng(model_seq), np.random.default_rng(stream_seq)


class _OdaBase(BaseEstimator):
    def __init__(self, divergence="euclidean", k_max=100, gamma=0.8, t_max=None,
                 t_min=None, eps_c=None, eps_n=None, eps_r=1e-7, delta=None,
                 step_a=1.0, step_b=0.9, max_obs_per_level=None, check_every=100,
                 init="sample", random_state=None, track_metrics=True):
        self.divergence = divergence
        self.k_max = k_max
        self.gamma = gamma
        self.t_max = t_max
        self.t_min = t_min
        self.eps_c = eps_c
        self.eps_n = eps_n
        self.eps_r = eps_r
        self.delta = delta
        self.step_a = step_a
        self.step_b = step_b
        self.max_obs_per_level = max_obs_per_level
        self.check_every = check_every
        self.init = init
        self.random_state = random_state
        self.track_metrics = track_metrics

    def _make_config(self, X, **extra) -> OdaConfig:
        span = X.max(axis=0) - X.min(axis=0)
        delta_s = float(span.max()) if X.shape[0] > 1 else 0.0
        if not delta_s > 0:
            delta_s = 1.0
        return OdaConfig.from_domain(
            delta_s, X.shape[1], self.divergence,
            k_max=self.k_max, gamma=self.gamma, t_max=self.t_max, t_min=self.t_min,
            eps_c=self.eps_c, eps_n=self.eps_n, eps_r=self.eps_r, delta=self.delta,
            step_a=self.step_a, step_b=self.step_b,
            max_obs_per_level=self.max_obs_per_level or 10 * X.shape[0],
            check_every=self.check_every, **extra)

    def _seed_points(self, X, groups, rng):
        """One starting codevector per group of row indices."""
        if isinstance(self.init, str):
            if self.init == "sample":
                return [X[rng.choice(g)] for g in groups]
            if self.init == "mean":
                return [X[g].mean(axis=0) for g in groups]
            raise ValueError(f"init must be 'sample', 'mean' or an array, got {self.init!r}")
        init = np.atleast_2d(np.asarray(self.init, dtype=float))
        if init.shape != (len(groups), X.shape[1]):
            raise ValueError(f"init must have shape {(len(groups), X.shape[1])}")
        return list(init)

    def _train(self, X, y, seeds, config, model_rng, stream_rng):
        self.model_ = OdaModel.init(config, seeds, rng=model_rng)
        source = stream(X, rng_seed=stream_rng, labels=y)
        eval_set = (X, y) if self.track_metrics else None
        self.report_ = self.model_.fit(source, eval_set=eval_set)
        self.report_.rng_seed = self.random_state
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def cluster_centers_(self):
        check_is_fitted(self, "model_")
        return self.model_.mu.copy()

    def _check(self, X):
        check_is_fitted(self, "model_")
        return check_array(X)


class ODAClassifier(ClassifierMixin, _OdaBase):
    """Prototype classifier trained by online deterministic annealing.

    Parameters left as ``None`` are scaled to the training data: with
    ``s = delta_S * d`` (largest bounding-box edge times dimension),
    ``t_max = 100 s``, ``t_min = 0.001 s``, ``eps_c = 1e-4 s``,
    ``eps_n = 1e-3 s`` and ``delta = 0.01 s``.

    Parameters
    ----------
    divergence : {"euclidean", "i-divergence"}
    k_max : int
        Codebook size at which splitting stops.
    gibbs : {"conditional", "plain", "class"}
        How labeled samples are associated with codevectors during training.
        ``"conditional"`` normalizes over codevectors of the sample's class,
        ``"plain"`` over all codevectors, ``"class"`` over all codevectors
        with other-class ones at zero distortion.
    cross_class_split : bool
        Also spawn one child per other class at each split.
    init : {"sample", "mean"} or array of shape (n_classes, n_features)
        Starting codevector of each class.

    Attributes
    ----------
    model_ : OdaModel
    report_ : RunReport
    classes_ : ndarray
    """

    def __init__(self, divergence="euclidean", k_max=100, gamma=0.8, t_max=None,
                 t_min=None, eps_c=None, eps_n=None, eps_r=1e-7, delta=None,
                 step_a=1.0, step_b=0.9, max_obs_per_level=None, check_every=100,
                 gibbs="conditional", cross_class_split=True, init="sample",
                 random_state=None, track_metrics=True):
        super().__init__(divergence, k_max, gamma, t_max, t_min, eps_c, eps_n, eps_r,
                         delta, step_a, step_b, max_obs_per_level, check_every, init,
                         random_state, track_metrics)
        self.gibbs = gibbs
        self.cross_class_split = cross_class_split

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        config = self._make_config(X, gibbs=self.gibbs,
                                   cross_class_split=self.cross_class_split)
        model_rng, stream_rng = _seeds(self.random_state)
        groups = [np.flatnonzero(y == c) for c in self.classes_]
        points = self._seed_points(X, groups, model_rng)
        seeds = list(zip(points, self.classes_))
        return self._train(X, y, seeds, config, model_rng, stream_rng)

    def predict(self, X):
        return self.model_.predict(self._check(X))

    def predict_proba(self, X):
        """Gibbs association mass of each class (summed over its codevectors)."""
        P = self.model_.membership_matrix(self._check(X))
        out = np.zeros((P.shape[0], len(self.classes_)))
        index = {c: i for i, c in enumerate(self.model_.classes)}
        cols = [index[c] for c in self.classes_.tolist()]
        for j, col in enumerate(cols):
            out[:, j] = P[:, self.model_.label_idx == col].sum(axis=1)
        return out


class ODAClustering(ClusterMixin, TransformerMixin, _OdaBase):
    """Clustering by online deterministic annealing.

    The number of clusters is not a parameter: it grows as the temperature
    drops, up to ``k_max``. ``transform`` returns the divergence of each
    sample to every codevector.
    """

    def fit(self, X, y=None):
        X = check_array(X)
        config = self._make_config(X)
        model_rng, stream_rng = _seeds(self.random_state)
        seeds = self._seed_points(X, [np.arange(X.shape[0])], model_rng)
        self._train(X, None, seeds, config, model_rng, stream_rng)
        self.labels_ = self.predict(X)
        return self

    @property
    def n_clusters_(self):
        check_is_fitted(self, "model_")
        return self.model_.n_codevectors

    def predict(self, X):
        idx, _ = self.model_.quantize(self._check(X))
        return idx

    def transform(self, X):
        return self.model_.div.pairwise(self._check(X), self.model_.mu)

    def score(self, X, y=None):
        """Negative average distortion (larger is better)."""
        _, dist = self.model_.quantize(self._check(X))
        return -float(dist.mean())
