"""Online deterministic annealing.

A codebook of prototypes is trained by stochastic approximation at a
descending sequence of temperatures. At each temperature every codevector
keeps two running estimates, a mass ``rho`` (its prior probability) and a
first moment ``sigma``; its location is ``sigma / rho``. Both estimates are
updated with every observation using the Gibbs association probability of the
sample, so no gradients of the divergence are needed.

Between temperature levels the codebook is pruned (coincident codevectors are
merged, codevectors whose mass vanished are dropped) and every survivor is
split into a perturbed pair. Pairs that are still above their critical
temperature collapse back together during the next level and are merged
again, so the codebook grows only when the data supports it.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .divergence import Divergence, as_divergence
from .exceptions import (
    CapacityReached,
    ConfigError,
    DomainViolation,
    DuplicateClassSeed,
    EmptySeeds,
    NotClassifier,
    NotInitialized,
    ScheduleExhausted,
    UnknownLabel,
)
from .metrics import f1_macro
from .report import FORMAT_VERSION, LevelRecord, RunReport

log = logging.getLogger(__name__)

GIBBS_MODES = ("plain", "conditional", "class")


@dataclass
class TemperatureSchedule:
    """Geometric schedule ``T <- gamma * T`` from ``t_max`` down to ``t_min``."""

    t_max: float
    t_min: float
    gamma: float = 0.8
    current: float | None = None

    def __post_init__(self):
        if not (self.t_max > 0 and self.t_min > 0):
            raise ConfigError("schedule", "temperatures must be positive")
        if not self.t_min < self.t_max:
            raise ConfigError("schedule.t_min", "t_min must be below t_max")
        if not 0 < self.gamma < 1:
            raise ConfigError("schedule.gamma", "gamma must lie in (0, 1)")
        if self.current is None:
            self.current = float(self.t_max)

    @property
    def exhausted(self) -> bool:
        return self.current <= self.t_min

    def lower(self) -> float:
        self.current = self.gamma * self.current
        return self.current

    def n_levels(self) -> int:
        """Number of temperatures strictly above ``t_min`` starting at ``t_max``."""
        return int(math.ceil(math.log(self.t_min / self.t_max) / math.log(self.gamma)))


@dataclass
class OdaConfig:
    """Learner parameters.

    ``eps_c`` and ``eps_n`` are in divergence units, ``delta`` is the length
    of the perturbation vector. :meth:`from_domain` scales all of them to the
    data the way the reference experiments do.

    ``gibbs`` decides how a labeled sample distributes its weight:
    ``"conditional"`` normalizes over codevectors of the sample's class,
    ``"plain"`` over all codevectors, and ``"class"`` over all codevectors
    with those of other classes placed at zero distortion. Other-class
    codevectors never receive mass from the update in any mode.
    """

    t_max: float
    t_min: float
    gamma: float = 0.8
    k_max: int = 100
    eps_c: float = 1e-4
    eps_n: float = 1e-3
    eps_r: float = 1e-7
    delta: float = 1e-2
    step_a: float = 1.0
    step_b: float = 0.9
    max_obs_per_level: int = 10_000
    check_every: int = 100
    divergence: Divergence = field(default_factory=Divergence)
    cross_class_split: bool = True
    gibbs: str = "conditional"

    def __post_init__(self):
        self.divergence = as_divergence(self.divergence)
        self.validate()

    @classmethod
    def from_domain(cls, delta_s: float, dim: int, divergence="euclidean", **overrides):
        """Defaults scaled by the largest bounding-box edge ``delta_s`` and
        the dimension ``dim``."""
        if not delta_s > 0:
            raise ConfigError("delta_s", "largest bounding-box edge must be positive")
        scale = float(delta_s) * int(dim)
        params = dict(
            t_max=100.0 * scale,
            t_min=0.001 * scale,
            gamma=0.8,
            k_max=100,
            eps_c=0.0001 * scale,
            eps_n=0.001 * scale,
            eps_r=1e-7,
            delta=0.01 * scale,
            step_a=1.0,
            step_b=0.9,
            divergence=as_divergence(divergence, dim),
        )
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)

    def validate(self):
        positive = ("t_max", "t_min", "eps_c", "eps_n", "eps_r", "delta",
                    "step_a", "step_b")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        for name in ("k_max", "max_obs_per_level", "check_every"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(name, "must be a positive integer")
        if not self.t_min < self.t_max:
            raise ConfigError("t_min", "must be below t_max")
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma", "must lie in (0, 1)")
        if not self.eps_r < 1:
            raise ConfigError("eps_r", "must be well below 1")
        if self.gibbs not in GIBBS_MODES:
            raise ConfigError("gibbs", f"must be one of {GIBBS_MODES}")
        if self.delta > self.eps_n:
            log.info("perturbation delta=%g exceeds merge threshold eps_n=%g",
                     self.delta, self.eps_n)

    def schedule(self) -> TemperatureSchedule:
        return TemperatureSchedule(self.t_max, self.t_min, self.gamma)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["divergence"] = {"kind": self.divergence.name,
                           "dimension": self.divergence.dimension}
        return d

    @classmethod
    def from_dict(cls, data) -> "OdaConfig":
        data = dict(data)
        div = data.pop("divergence", "euclidean")
        if isinstance(div, dict):
            div = Divergence(div["kind"], div.get("dimension"))
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        return cls(divergence=div, **data)


@dataclass
class Codevector:
    """Read-only view of one codevector of an :class:`OdaModel`."""

    mu: np.ndarray
    class_label: object
    rho: float
    sigma: np.ndarray
    prev_mu: np.ndarray


def gibbs_weights(distortions, rho, temperature) -> np.ndarray:
    """Association probabilities ``rho_i exp(-d_i / T)`` normalized to one.

    The exponent is shifted by its maximum before exponentiation, so any
    constant offset of the distortions cancels exactly.
    """
    d = np.asarray(distortions, dtype=float)
    with np.errstate(divide="ignore"):
        logw = np.log(rho) - d / temperature
    top = logw.max()
    if not np.isfinite(top):
        # every prior mass is zero: fall back to the unweighted Gibbs form
        logw = -d / temperature
        top = logw.max()
    w = np.exp(logw - top)
    return w / w.sum()


def sa_update(rho, sigma, x, p, s, alpha):
    """One stochastic-approximation step of the mass/moment estimates.

    ``rho <- rho + alpha (s p - rho)``, ``sigma <- sigma + alpha (s p x - sigma)``,
    in place. ``s`` masks codevectors of a different class than ``x``.
    """
    sp = s * p
    rho += alpha * (sp - rho)
    sigma += alpha * (sp[:, None] * x[None, :] - sigma)


class OdaModel:
    """Annealing state: codebook, temperature, counters and history.

    Build one with :meth:`init`. Not thread-safe; use :meth:`clone` to hand a
    snapshot to concurrent readers.
    """

    def __init__(self, config: OdaConfig, mu, label_idx, rho, sigma, classes,
                 schedule=None, rng=None):
        self.config = config
        self.div = config.divergence
        self.mu = np.array(mu, dtype=float)
        self.label_idx = None if label_idx is None else np.array(label_idx, dtype=int)
        self.rho = np.array(rho, dtype=float)
        self.sigma = np.array(sigma, dtype=float)
        self.classes = list(classes)
        self._class_index = {c: i for i, c in enumerate(self.classes)}
        self.schedule = schedule if schedule is not None else config.schedule()
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.prev_mu = self.mu.copy()
        self.n = 0
        self.total_observations = 0
        self.capacity_reached = False
        self.forced_advance = False
        self.history = RunReport(config=config.to_dict())
        self._level_distortion = 0.0
        self._level_start = time.perf_counter()

    # -- construction ---------------------------------------------------

    @classmethod
    def init(cls, config: OdaConfig, seeds, rng=None) -> "OdaModel":
        """One codevector per seed.

        A seed is either a bare vector (clustering) or an ``(x, label)``
        tuple whose first item is a vector (classification). In
        classification mode each class is seeded exactly once.
        """
        seeds = list(seeds)
        if not seeds:
            raise EmptySeeds("at least one seed is required")
        xs, labels = [], []
        for item in seeds:
            if isinstance(item, tuple) and len(item) == 2 and np.ndim(item[0]) == 1:
                x, lab = item
            else:
                x, lab = item, None
            xs.append(np.asarray(x, dtype=float))
            labels.append(lab)
        mu = np.vstack(xs)
        dim = mu.shape[1]
        div = config.divergence
        if div.dimension is None:
            config = replace(config, divergence=div.with_dimension(dim))
        config.divergence.check(mu)

        has_label = [lab is not None for lab in labels]
        if any(has_label) and not all(has_label):
            raise ConfigError("seeds", "either every seed has a label or none does")
        if all(has_label):
            labels = [_plain(lab) for lab in labels]
            if len(set(labels)) != len(labels):
                raise DuplicateClassSeed("each class may be seeded only once")
            classes = sorted(labels, key=_sort_key)
            index = {c: i for i, c in enumerate(classes)}
            label_idx = [index[lab] for lab in labels]
        else:
            classes, label_idx = [], None
        rho = np.ones(len(seeds))
        return cls(config, mu, label_idx, rho, mu * rho[:, None], classes, rng=rng)

    # -- basic properties -----------------------------------------------

    @property
    def is_classifier(self) -> bool:
        return self.label_idx is not None

    @property
    def temperature(self) -> float:
        return self.schedule.current

    @property
    def n_codevectors(self) -> int:
        return self.mu.shape[0]

    K = n_codevectors

    @property
    def codevector_labels(self):
        if not self.is_classifier:
            return [None] * self.n_codevectors
        return [self.classes[i] for i in self.label_idx]

    @property
    def codebook(self) -> list[Codevector]:
        labels = self.codevector_labels
        return [Codevector(self.mu[i].copy(), labels[i], float(self.rho[i]),
                           self.sigma[i].copy(), self.prev_mu[i].copy())
                for i in range(self.n_codevectors)]

    def clone(self) -> "OdaModel":
        return OdaModel.from_dict(self.to_dict())

    def _class_of(self, label) -> int:
        try:
            return self._class_index[_plain(label)]
        except (KeyError, TypeError):
            raise UnknownLabel(f"label {label!r} is not one of {self.classes}") from None

    def _sample(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self.div.check(x, self.mu)
        return x

    # -- online learning ------------------------------------------------

    def _membership(self, x, ci):
        d = self.div.to_codebook(x, self.mu)
        self._last_min_distortion = d.min()
        if ci is None or self.config.gibbs == "plain":
            return gibbs_weights(d, self.rho, self.temperature)
        same = self.label_idx == ci
        if self.config.gibbs == "class":
            return gibbs_weights(np.where(same, d, 0.0), self.rho, self.temperature)
        p = np.zeros_like(d)
        p[same] = gibbs_weights(d[same], self.rho[same], self.temperature)
        return p

    def membership(self, x, label=None) -> np.ndarray:
        """Association probabilities of ``x`` to every codevector.

        For a classifier the label of ``x`` is required; how it shapes the
        weights depends on ``config.gibbs`` (see :class:`OdaConfig`).
        """
        x = self._sample(x)
        return self._membership(x, self._label_arg(label))

    def _label_arg(self, label):
        if not self.is_classifier:
            return None
        if label is None:
            raise UnknownLabel("a classification model needs the sample label")
        return self._class_of(label)

    def observe(self, x, label=None) -> "OdaModel":
        """Update every codevector with one observation."""
        if self.n_codevectors == 0:
            raise NotInitialized("model has no codevectors")
        x = self._sample(x)
        ci = self._label_arg(label)
        p = self._membership(x, ci)
        s = 1.0 if ci is None else (self.label_idx == ci).astype(float)
        # n counts observations at this level including the current one, so
        # the first step never fully overwrites the previous estimates
        self.n += 1
        self.total_observations += 1
        alpha = 1.0 / (self.config.step_a + self.config.step_b * self.n)
        sa_update(self.rho, self.sigma, x, p, s, alpha)
        live = self.rho >= self.config.eps_r
        self.mu[live] = self.sigma[live] / self.rho[live, None]
        self._level_distortion += self._last_min_distortion
        return self

    def snapshot(self) -> None:
        """Record current locations as the reference for :meth:`converged`."""
        self.prev_mu = self.mu.copy()

    def drift(self) -> np.ndarray:
        """``d(mu_now, mu_snapshot)`` per codevector (current location first)."""
        return self.div._raw(self.mu, self.prev_mu)

    def converged(self) -> bool:
        if self.n >= self.config.max_obs_per_level:
            if not np.all(self.drift() < self.config.eps_c):
                self.forced_advance = True
            return True
        return bool(np.all(self.drift() < self.config.eps_c))

    def train_level(self, stream) -> int:
        """Observe samples from ``stream`` until the level has converged.

        Convergence is evaluated every ``check_every`` observations against
        the locations recorded at the previous check. Returns the number of
        observations used.
        """
        every = self.config.check_every
        cap = self.config.max_obs_per_level
        self.snapshot()
        while True:
            x, y = next(stream)
            self.observe(x, y)
            if self.n % every == 0 or self.n >= cap:
                if self.converged():
                    return self.n
                self.snapshot()

    # -- level transitions ----------------------------------------------

    def _same_class(self, i, j) -> bool:
        return not self.is_classifier or self.label_idx[i] == self.label_idx[j]

    def _merge(self):
        eps_n = self.config.eps_n
        keep = []
        rho = self.rho.copy()
        for j in range(self.n_codevectors):
            if keep:
                cand = np.array(keep)
                if self.is_classifier:
                    cand = cand[self.label_idx[cand] == self.label_idx[j]]
                if cand.size:
                    d = self.div._raw(self.mu[j][None, :], self.mu[cand])
                    close = np.flatnonzero(d < eps_n)
                    if close.size:
                        rho[cand[close[0]]] += rho[j]
                        continue
            keep.append(j)
        self._select(np.array(keep, dtype=int), rho)

    def _remove_idle(self):
        idle = self.rho < self.config.eps_r
        if not idle.any():
            return
        keep = ~idle
        if self.is_classifier:
            for c in range(len(self.classes)):
                members = np.flatnonzero(self.label_idx == c)
                if members.size and not keep[members].any():
                    keep[members[np.argmax(self.rho[members])]] = True
        elif not keep.any():
            keep[np.argmax(self.rho)] = True
        self._select(np.flatnonzero(keep), self.rho)

    def _select(self, idx, rho):
        self.mu = self.mu[idx]
        self.rho = rho[idx]
        self.sigma = self.sigma[idx]
        self.prev_mu = self.prev_mu[idx]
        if self.is_classifier:
            self.label_idx = self.label_idx[idx]

    def _renormalize(self):
        total = self.rho.sum()
        if total > 0:
            self.rho = self.rho / total
        self.sigma = self.mu * self.rho[:, None]

    def _unit(self, dim):
        u = self.rng.standard_normal(dim)
        return u / np.linalg.norm(u)

    def _project(self, child, parent):
        if self.div.requires_positive:
            # keep perturbed children inside the positive orthant
            child = np.where(child > 0, child, 0.5 * parent)
        return child

    def _perturb(self):
        """Split codevectors into perturbed pairs without letting the number
        of distinct codevectors exceed ``k_max`` if every split succeeds.
        The heaviest codevectors are split first."""
        delta = self.config.delta
        K = self.n_codevectors
        n_classes = len(self.classes)
        budget = self.config.k_max - K
        cross = self.is_classifier and self.config.cross_class_split and n_classes > 1
        n_split = min(K, budget // n_classes) if cross else min(K, budget)
        if cross and n_split < 1:
            cross, n_split = False, min(K, budget)
        order = np.argsort(-self.rho, kind="stable")
        split = np.zeros(K, dtype=bool)
        split[order[:n_split]] = True
        mus, rhos, labs = [], [], []
        for i in range(K):
            mu, rho = self.mu[i], self.rho[i]
            lab = self.label_idx[i] if self.is_classifier else None
            if not split[i]:
                mus.append(mu)
                rhos.append(rho)
                labs.append(lab)
                continue
            share = rho / (2 + (n_classes - 1 if cross else 0))
            u = delta * self._unit(mu.size)
            for child in (mu + u, mu - u):
                mus.append(self._project(child, mu))
                rhos.append(share)
                labs.append(lab)
            if cross:
                for c in range(n_classes):
                    if c != lab:
                        mus.append(self._project(mu + delta * self._unit(mu.size), mu))
                        rhos.append(share)
                        labs.append(c)
        self.mu = np.vstack(mus)
        self.rho = np.array(rhos)
        self.sigma = self.mu * self.rho[:, None]
        self.prev_mu = self.mu.copy()
        if self.is_classifier:
            self.label_idx = np.array(labs, dtype=int)

    def n_effective(self) -> int:
        """Codevectors that remain distinct after merging at ``eps_n``."""
        probe = self.clone()
        probe._merge()
        return probe.n_codevectors

    def advance_level(self, eval_set=None) -> "OdaModel":
        """Close the current temperature level and open the next one.

        Merges coincident codevectors, drops idle ones, records the level in
        :attr:`history`, lowers the temperature and splits survivors into
        perturbed pairs (plus one child per other class when
        ``cross_class_split`` is on), as many as the remaining room below
        ``k_max`` allows. Splitting is skipped once the codebook holds
        ``k_max`` codevectors or the schedule is exhausted.
        """
        if self.schedule.exhausted:
            raise ScheduleExhausted(f"temperature {self.temperature:g} is at t_min")
        if self.capacity_reached:
            raise CapacityReached(f"codebook already holds {self.n_codevectors} codevectors")
        self._merge()
        self._remove_idle()
        self._renormalize()
        self._record_level(eval_set)

        self.schedule.lower()
        if self.n_codevectors >= self.config.k_max:
            self.capacity_reached = True
        elif not self.schedule.exhausted:
            self._perturb()
        self.n = 0
        self.forced_advance = False
        self._level_distortion = 0.0
        self._level_start = time.perf_counter()
        self.snapshot()
        return self

    def _record_level(self, eval_set):
        acc = f1 = None
        if eval_set is not None:
            X, y = eval_set
            X = np.asarray(X, dtype=float)
            D = self.div.pairwise(X, self.mu, check=False)
            distortion = float(D.min(axis=1).mean())
            if self.is_classifier and y is not None:
                pred = self._predict_from(D)
                y = np.asarray(y)
                acc = float(np.mean(pred == y))
                f1 = f1_macro(y, pred)
        else:
            distortion = self._level_distortion / self.n if self.n else None
        self.history.append(LevelRecord(
            temperature=float(self.temperature),
            k_effective=int(self.n_codevectors),
            samples_seen_cumulative=int(self.total_observations),
            avg_distortion=distortion,
            accuracy=acc,
            f1_macro=f1,
            wall_time_ms=1000.0 * (time.perf_counter() - self._level_start),
            forced_advance=bool(self.forced_advance),
            observations=int(self.n),
        ))

    def fit(self, stream, eval_set=None) -> RunReport:
        """Run the full annealing loop on an iterator of ``(x, label)`` pairs.

        Stops once the temperature falls to ``t_min`` or the codebook reaches
        ``k_max``. Returns :attr:`history`.
        """
        stream = iter(stream)
        while not (self.schedule.exhausted or self.capacity_reached):
            self.train_level(stream)
            self.advance_level(eval_set)
        self.history.summary = {
            "levels": len(self.history),
            "k_final": int(self.n_codevectors),
            "samples_seen": int(self.total_observations),
            "temperature_final": float(self.temperature),
        }
        return self.history

    # -- inference ------------------------------------------------------

    def _predict_from(self, D):
        with np.errstate(divide="ignore"):
            score = np.log(self.rho)[None, :] - D / self.temperature
        winners = np.argmax(score, axis=1)
        labels = np.array(self.classes, dtype=object)[self.label_idx[winners]]
        return _compact(labels)

    def predict(self, X):
        """Class of the codevector with the largest association probability.

        Accepts one sample or a 2-D array; ties go to the lowest index.
        """
        if not self.is_classifier:
            raise NotClassifier("predict needs a classification model")
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        D = self.div.pairwise(np.atleast_2d(X), self.mu)
        out = self._predict_from(D)
        return out[0] if single else out

    def quantize(self, X):
        """Nearest codevector index and the attained divergence."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        D = self.div.pairwise(np.atleast_2d(X), self.mu)
        idx = np.argmin(D, axis=1)
        dist = D[np.arange(D.shape[0]), idx]
        if single:
            return int(idx[0]), float(dist[0])
        return idx, dist

    def membership_matrix(self, X) -> np.ndarray:
        """Unconditioned Gibbs probabilities for every row of ``X``."""
        D = self.div.pairwise(np.atleast_2d(np.asarray(X, dtype=float)), self.mu)
        with np.errstate(divide="ignore"):
            logw = np.log(self.rho)[None, :] - D / self.temperature
        logw -= logw.max(axis=1, keepdims=True)
        w = np.exp(logw)
        return w / w.sum(axis=1, keepdims=True)

    # -- persistence ----------------------------------------------------

    def to_dict(self) -> dict:
        labels = self.codevector_labels
        return {
            "format_version": FORMAT_VERSION,
            "kind": "oda",
            "config": self.config.to_dict(),
            "schedule": asdict(self.schedule),
            "classes": [_plain(c) for c in self.classes],
            "n": self.n,
            "total_observations": self.total_observations,
            "capacity_reached": self.capacity_reached,
            "forced_advance": self.forced_advance,
            "codebook": [
                {"mu": self.mu[i].tolist(), "class_label": _plain(labels[i]),
                 "rho": float(self.rho[i]), "sigma": self.sigma[i].tolist(),
                 "prev_mu": self.prev_mu[i].tolist()}
                for i in range(self.n_codevectors)
            ],
            "rng_state": self.rng.bit_generator.state,
            "history": self.history.to_dict(include_timing=True),
        }

    @classmethod
    def from_dict(cls, data) -> "OdaModel":
        if data.get("kind", "oda") != "oda":
            raise ConfigError("kind", f"expected an oda model, got {data.get('kind')!r}")
        if data.get("format_version") != FORMAT_VERSION:
            raise ConfigError("format_version",
                              f"unsupported version {data.get('format_version')!r}")
        config = OdaConfig.from_dict(data["config"])
        classes = list(data["classes"])
        cb = data["codebook"]
        mu = np.array([c["mu"] for c in cb], dtype=float)
        if classes:
            index = {c: i for i, c in enumerate(classes)}
            label_idx = [index[c["class_label"]] for c in cb]
        else:
            label_idx = None
        rng = np.random.default_rng()
        rng.bit_generator.state = data["rng_state"]
        model = cls(config, mu, label_idx, [c["rho"] for c in cb],
                    [c["sigma"] for c in cb], classes,
                    schedule=TemperatureSchedule(**data["schedule"]), rng=rng)
        model.prev_mu = np.array([c["prev_mu"] for c in cb], dtype=float).reshape(mu.shape)
        model.n = data["n"]
        model.total_observations = data["total_observations"]
        model.capacity_reached = data["capacity_reached"]
        model.forced_advance = data["forced_advance"]
        model.history = RunReport.from_dict(data["history"])
        return model

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "OdaModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _plain(value):
    """Convert numpy scalars to builtins so labels survive JSON."""
    return value.item() if isinstance(value, np.generic) else value


def _sort_key(label):
    return (not isinstance(label, (int, float)), str(label) if not isinstance(label, (int, float)) else label)


def _compact(labels: np.ndarray) -> np.ndarray:
    """Object array of labels -> native dtype when possible."""
    try:
        return labels.astype(np.asarray(labels.tolist()).dtype)
    except (TypeError, ValueError):
        return labels
