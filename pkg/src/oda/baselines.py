"""Reference algorithms: stochastic VQ, Bregman k-means and batch annealing.

All three share :class:`BaselineModel`, a plain codebook that can quantize
(and, for the labeled stochastic VQ, classify) new data.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import OdaConfig, TemperatureSchedule
from .divergence import Divergence, as_divergence
from .exceptions import ConfigError, NotClassifier, TooFewSamples
from .metrics import f1_macro
from .report import FORMAT_VERSION, LevelRecord, RunReport

POSITIVE_FLOOR = 1e-12
KINDS = ("svq", "kmeans", "batch-da")


@dataclass
class BaselineModel:
    codebook: np.ndarray
    kind: str
    divergence: Divergence = field(default_factory=Divergence)
    labels: np.ndarray | None = None
    classes: list = field(default_factory=list)
    update_counts: np.ndarray | None = None
    history: RunReport = field(default_factory=RunReport)

    def __post_init__(self):
        self.codebook = np.atleast_2d(np.array(self.codebook, dtype=float))
        if self.codebook.shape[0] == 0:
            raise ConfigError("codebook", "must not be empty")
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {KINDS}")
        self.divergence = as_divergence(self.divergence)
        if self.update_counts is None:
            self.update_counts = np.zeros(self.codebook.shape[0], dtype=int)
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if not self.classes:
                self.classes = np.unique(self.labels).tolist()
        self.history.algorithm = self.kind

    @property
    def is_classifier(self) -> bool:
        return self.labels is not None

    @property
    def n_codevectors(self) -> int:
        return self.codebook.shape[0]

    def quantize(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        D = self.divergence.pairwise(np.atleast_2d(X), self.codebook)
        idx = np.argmin(D, axis=1)
        dist = D[np.arange(D.shape[0]), idx]
        if single:
            return int(idx[0]), float(dist[0])
        return idx, dist

    def predict(self, X):
        if not self.is_classifier:
            raise NotClassifier(f"{self.kind} model has no class labels")
        idx, _ = self.quantize(X)
        return self.labels[idx]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "divergence": {"kind": self.divergence.name,
                           "dimension": self.divergence.dimension},
            "codebook": self.codebook.tolist(),
            "labels": None if self.labels is None else self.labels.tolist(),
            "classes": list(self.classes),
            "update_counts": self.update_counts.tolist(),
            "history": self.history.to_dict(include_timing=True),
        }

    @classmethod
    def from_dict(cls, data) -> "BaselineModel":
        if data.get("format_version") != FORMAT_VERSION:
            raise ConfigError("format_version", "unsupported version")
        div = data["divergence"]
        return cls(np.array(data["codebook"]), data["kind"],
                   Divergence(div["kind"], div.get("dimension")),
                   None if data["labels"] is None else np.array(data["labels"]),
                   data["classes"], np.array(data["update_counts"], dtype=int),
                   RunReport.from_dict(data["history"]))


def default_stepsize(v: int) -> float:
    """``1 / (1 + v)`` where ``v`` counts earlier updates of the winner."""
    return 1.0 / (1.0 + v)


def svq_step(model: BaselineModel, x, stepsize_fn=default_stepsize, label=None) -> BaselineModel:
    """Move the nearest codevector toward ``x``.

    The step is ``mu + a * M (x - mu)`` with ``M = I`` for the squared
    Euclidean distance and ``M = diag(1 / mu)`` for the I-divergence (the
    constant factor of the Euclidean gradient is folded into ``a``).
    With labels, the winner only moves when its class matches ``label``.
    """
    x = np.asarray(x, dtype=float)
    div = model.divergence
    div.check(x, model.codebook)
    h = int(np.argmin(div.to_codebook(x, model.codebook)))
    if model.is_classifier:
        if label is None:
            raise NotClassifier("a labeled codebook needs the sample label")
        if model.labels[h] != label:
            return model
    a = stepsize_fn(int(model.update_counts[h]))
    mu = model.codebook[h]
    if div.requires_positive:
        new = mu + a * (x - mu) / mu
        model.codebook[h] = np.maximum(new, POSITIVE_FLOOR)
    else:
        model.codebook[h] = mu + a * (x - mu)
    model.update_counts[h] += 1
    return model


def svq_fit(seeds, stream, n_obs, divergence="euclidean", labels=None,
            stepsize_fn=default_stepsize, eval_set=None, record_every=None) -> BaselineModel:
    """Run :func:`svq_step` on ``n_obs`` draws from ``stream``.

    ``seeds`` fixes the initial codebook (and thus ``K``). A trace point is
    recorded every ``record_every`` observations.
    """
    model = BaselineModel(np.array(seeds, dtype=float), "svq", as_divergence(divergence),
                          labels=labels)
    record_every = record_every or max(1, n_obs // 20)
    start = time.perf_counter()
    for t in range(1, n_obs + 1):
        x, y = next(stream)
        svq_step(model, x, stepsize_fn, y if model.is_classifier else None)
        if t % record_every == 0 or t == n_obs:
            model.history.append(_trace_point(model, eval_set, t, start))
    model.history.summary = {"k_final": model.n_codevectors, "samples_seen": n_obs}
    return model


def _trace_point(model, eval_set, seen, start, temperature=0.0):
    dist = acc = f1 = None
    if eval_set is not None:
        X, y = eval_set
        _, d = model.quantize(X)
        dist = float(d.mean())
        if model.is_classifier and y is not None:
            pred = model.predict(X)
            acc = float(np.mean(pred == np.asarray(y)))
            f1 = f1_macro(y, pred)
    return LevelRecord(temperature=temperature, k_effective=model.n_codevectors,
                       samples_seen_cumulative=int(seen), avg_distortion=dist,
                       accuracy=acc, f1_macro=f1,
                       wall_time_ms=1000.0 * (time.perf_counter() - start))


def _farthest_point_seeds(X, k, div, rng):
    centers = [X[rng.integers(X.shape[0])]]
    nearest = div.pairwise(X, centers[0][None, :], check=False)[:, 0]
    for _ in range(1, k):
        i = int(np.argmax(nearest))
        centers.append(X[i])
        nearest = np.minimum(nearest, div.pairwise(X, X[i][None, :], check=False)[:, 0])
    return np.array(centers)


def kmeans_fit(X, k, init="farthest", max_iter=300, divergence="euclidean",
               rng_seed=0) -> BaselineModel:
    """Lloyd iterations under a Bregman divergence.

    Centroids are plain means of their Voronoi cells. An emptied cell is
    reseeded at the point farthest from its current codevector. The trace
    holds the distortion after every iteration against the number of
    sample presentations so far.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    div = as_divergence(divergence, X.shape[1])
    div.check(X)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise TooFewSamples(f"k={k} needs between 1 and {n} points")
    rng = np.random.default_rng(rng_seed)
    if isinstance(init, str):
        if init != "farthest":
            raise ConfigError("init", "expected 'farthest' or an array of centers")
        M = _farthest_point_seeds(X, k, div, rng)
    else:
        M = np.array(init, dtype=float)
    model = BaselineModel(M, "kmeans", div)
    start = time.perf_counter()
    assign = None
    for it in range(1, max_iter + 1):
        D = div.pairwise(X, M, check=False)
        new = np.argmin(D, axis=1)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        model.history.append(LevelRecord(
            temperature=0.0, k_effective=k, samples_seen_cumulative=it * n,
            avg_distortion=float(D[np.arange(n), assign].mean()),
            wall_time_ms=1000.0 * (time.perf_counter() - start)))
        counts = np.bincount(assign, minlength=k)
        sums = np.zeros_like(M)
        np.add.at(sums, assign, X)
        for j in range(k):
            if counts[j]:
                M[j] = sums[j] / counts[j]
            else:
                far = int(np.argmax(D[np.arange(n), assign]))
                M[j] = X[far]
                assign[far] = j
        model.codebook = M
    model.codebook = M
    model.update_counts = np.bincount(assign, minlength=k)
    _, d = model.quantize(X)
    model.history.summary = {"k_final": k, "iterations": len(model.history),
                             "distortion": float(d.mean())}
    return model


def batch_da_fit(X, config: OdaConfig, rng_seed=0, max_iter=1000, seed_point=None):
    """Offline deterministic annealing on the full dataset.

    At each temperature the Gibbs memberships of every point and the
    weighted-mean codevectors are alternated until no codevector moves by
    more than ``eps_c``; then coincident codevectors are merged and the
    survivors are split by ``+/- delta`` exactly as in the online learner.
    Returns ``(model, report)``; the report counts sample presentations
    (one per point per iteration).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    div = config.divergence
    if div.dimension is None:
        div = div.with_dimension(X.shape[1])
    div.check(X)
    n = X.shape[0]
    rng = np.random.default_rng(rng_seed)
    schedule = TemperatureSchedule(config.t_max, config.t_min, config.gamma)
    M = (X.mean(axis=0) if seed_point is None else np.asarray(seed_point, float))[None, :]
    report = RunReport(config=config.to_dict(), rng_seed=rng_seed, algorithm="batch-da")
    seen = 0
    while True:
        start = time.perf_counter()
        T = schedule.current
        mass = np.ones(M.shape[0])
        for _ in range(max_iter):
            D = div.pairwise(X, M, check=False)
            logw = -D / T
            logw -= logw.max(axis=1, keepdims=True)
            P = np.exp(logw)
            P /= P.sum(axis=1, keepdims=True)
            seen += n
            mass = P.sum(axis=0)
            live = mass > 0
            new = M.copy()
            new[live] = (P[:, live].T @ X) / mass[live, None]
            moved = div._raw(new, M)
            M = new
            if np.all(moved < config.eps_c):
                break
        M, mass = _merge_codebook(M, mass, div, config.eps_n)
        keep = mass / n >= config.eps_r
        if keep.any():
            M, mass = M[keep], mass[keep]
        D = div.pairwise(X, M, check=False)
        report.append(LevelRecord(
            temperature=float(T), k_effective=int(M.shape[0]),
            samples_seen_cumulative=int(seen),
            avg_distortion=float(D.min(axis=1).mean()),
            wall_time_ms=1000.0 * (time.perf_counter() - start)))
        schedule.lower()
        if schedule.exhausted or M.shape[0] >= config.k_max:
            break
        M = _split(M, mass, config.k_max, config.delta, rng, div.requires_positive)
    model = BaselineModel(M, "batch-da", div, history=report)
    report.summary = {"levels": len(report), "k_final": int(M.shape[0]),
                      "samples_seen": int(seen),
                      "distortion": report.levels[-1].avg_distortion}
    return model, report


def _merge_codebook(M, mass, div, eps_n):
    keep, total = [], mass.astype(float).copy()
    for j in range(M.shape[0]):
        if keep:
            d = div._raw(M[j][None, :], M[keep])
            close = np.flatnonzero(d < eps_n)
            if close.size:
                total[keep[close[0]]] += total[j]
                continue
        keep.append(j)
    return M[keep], total[keep]


def _split(M, mass, k_max, delta, rng, positive):
    """Replace the heaviest codevectors by perturbed pairs, splitting no
    more than ``k_max`` minus the current size allows."""
    n_split = min(M.shape[0], k_max - M.shape[0])
    split = np.zeros(M.shape[0], dtype=bool)
    split[np.argsort(-mass, kind="stable")[:n_split]] = True
    out = []
    for mu, fork in zip(M, split):
        if not fork:
            out.append(mu)
            continue
        u = rng.standard_normal(mu.size)
        u *= delta / np.linalg.norm(u)
        for child in (mu + u, mu - u):
            if positive:
                child = np.where(child > 0, child, 0.5 * mu)
            out.append(child)
    return np.array(out)
