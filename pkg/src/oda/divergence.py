"""Bregman divergences used as the proximity measure of every learner.

Two generators are supported:

* ``phi(x) = <x, x>`` gives the squared Euclidean distance ``||x - mu||^2``.
* ``phi(x) = <x, log x>`` gives the generalized I-divergence
  ``<x, log x - log mu> - <1, x - mu>``, defined on strictly positive vectors.

For any Bregman divergence the minimizer of ``sum_i w_i d(x_i, mu)`` over
``mu`` is the weighted mean of the ``x_i``, which is what makes the annealing
updates gradient-free.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, DomainViolation, ZeroMass


class DivergenceKind(str, enum.Enum):
    SQUARED_EUCLIDEAN = "euclidean"
    GENERALIZED_I = "i-divergence"


_ALIASES = {
    "euclidean": DivergenceKind.SQUARED_EUCLIDEAN,
    "squared-euclidean": DivergenceKind.SQUARED_EUCLIDEAN,
    "sqeuclidean": DivergenceKind.SQUARED_EUCLIDEAN,
    "i-divergence": DivergenceKind.GENERALIZED_I,
    "idiv": DivergenceKind.GENERALIZED_I,
    "generalized-i": DivergenceKind.GENERALIZED_I,
}


@dataclass(frozen=True)
class Divergence:
    """A Bregman divergence of a given kind on ``R^dimension``.

    ``dimension`` may be left as ``None`` to accept vectors of any (matching)
    length.
    """

    kind: DivergenceKind = DivergenceKind.SQUARED_EUCLIDEAN
    dimension: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", as_kind(self.kind))
        if self.dimension is not None and int(self.dimension) < 1:
            raise ValueError("dimension must be a positive integer")

    @classmethod
    def from_name(cls, name, dimension=None) -> "Divergence":
        return cls(as_kind(name), dimension)

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def requires_positive(self) -> bool:
        return self.kind is DivergenceKind.GENERALIZED_I

    def with_dimension(self, dimension: int) -> "Divergence":
        return Divergence(self.kind, int(dimension))

    # -- validation -----------------------------------------------------

    def check(self, *arrays: np.ndarray) -> None:
        """Raise if any array is outside the domain or has the wrong width."""
        width = None
        for a in arrays:
            w = a.shape[-1]
            if width is None:
                width = w
            elif w != width:
                raise DimensionMismatch(f"vector lengths differ: {width} != {w}")
            if self.dimension is not None and w != self.dimension:
                raise DimensionMismatch(
                    f"expected vectors of length {self.dimension}, got {w}")
            if self.requires_positive and not np.all(a > 0):
                raise DomainViolation(
                    "generalized I-divergence needs strictly positive coordinates")

    # -- evaluation -----------------------------------------------------

    def evaluate(self, x, mu) -> float:
        """Return ``d(x, mu)`` for two vectors."""
        x = np.asarray(x, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if x.shape != mu.shape:
            raise DimensionMismatch(f"shapes differ: {x.shape} != {mu.shape}")
        self.check(x, mu)
        return float(self._raw(x, mu))

    def _raw(self, x, mu):
        # Broadcasting kernel, no validation. Reduces over the last axis.
        if self.kind is DivergenceKind.SQUARED_EUCLIDEAN:
            diff = x - mu
            return np.sum(diff * diff, axis=-1)
        return np.sum(x * (np.log(x) - np.log(mu)) - x + mu, axis=-1)

    def to_codebook(self, x, codebook) -> np.ndarray:
        """Divergences from one sample ``x`` to each row of ``codebook``."""
        return self._raw(x[None, :], codebook)

    def pairwise(self, X, M, check=True) -> np.ndarray:
        """Matrix ``D[i, k] = d(X[i], M[k])``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if check:
            self.check(X, M)
        if self.kind is DivergenceKind.SQUARED_EUCLIDEAN:
            # expanded form loses accuracy near zero; clip the rounding error
            D = (np.sum(X * X, axis=1)[:, None] - 2.0 * X @ M.T
                 + np.sum(M * M, axis=1)[None, :])
            return np.maximum(D, 0.0)
        xlogx = np.sum(X * np.log(X) - X, axis=1)
        return xlogx[:, None] - X @ np.log(M).T + np.sum(M, axis=1)[None, :]

    def weighted_centroid(self, points, weights) -> np.ndarray:
        """Weighted mean of ``points``; the unique minimizer of the
        weighted divergence sum for every Bregman divergence."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (points.shape[0],):
            raise DimensionMismatch("one weight per point is required")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        self.check(points)
        total = weights.sum()
        if not total > 0:
            raise ZeroMass("all weights are zero")
        return weights @ points / total


def as_kind(value) -> DivergenceKind:
    if isinstance(value, DivergenceKind):
        return value
    try:
        return _ALIASES[str(value).lower()]
    except KeyError:
        raise ValueError(
            f"unknown divergence {value!r}; expected 'euclidean' or 'i-divergence'"
        ) from None


def as_divergence(value, dimension=None) -> Divergence:
    if isinstance(value, Divergence):
        return value if dimension is None else value.with_dimension(dimension)
    return Divergence(as_kind(value), dimension)


def evaluate(div: Divergence, x, mu) -> float:
    return div.evaluate(x, mu)


def weighted_centroid(div: Divergence, points, weights) -> np.ndarray:
    return div.weighted_centroid(points, weights)
