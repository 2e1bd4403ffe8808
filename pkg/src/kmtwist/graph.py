"""Deterministic nearest-neighbor ring graphs and their graphons.

Nodes are indexed ``1..n``.  Two nodes are adjacent when their index
distance ``|k - j|`` is at most ``n*kappa`` or at least ``n*(1 - kappa)``
(the second clause is the wraparound).  Loops are allowed, and
``kappa = 1/2`` yields the complete simple graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Guards floor(n*kappa) against representation error, e.g. 100*0.29.
_FLOOR_EPS = 1e-9


class GraphIndexError(IndexError):
    """Node index outside ``1..n``."""


@dataclass(frozen=True)
class GraphSpec:
    """A ``floor(n*kappa)``-nearest-neighbor graph on ``n`` nodes.

    The weight matrix is circulant, so a single distance mask of length
    ``n`` describes it completely.
    """

    n: int
    kappa: float
    mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not 0.0 < self.kappa <= 0.5:
            raise ValueError(f"kappa must lie in (0, 1/2], got {self.kappa!r}")
        object.__setattr__(self, "n", int(self.n))
        d = np.arange(self.n)
        mask = (np.minimum(d, self.n - d) <= self.band_radius).astype(np.int8)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def band_radius(self) -> int:
        return math.floor(self.n * self.kappa + _FLOOR_EPS)

    @property
    def is_complete(self) -> bool:
        """True when every pair of nodes (and every loop) is an edge."""
        return 2 * self.band_radius + 1 >= self.n

    @property
    def degree_uniform(self) -> int:
        return int(self.mask.sum())

    def dense(self) -> np.ndarray:
        """Full ``n x n`` weight matrix (for oracles and small problems)."""
        k = np.arange(self.n)
        return self.mask[(k[None, :] - k[:, None]) % self.n].astype(float)


def _check_index(spec: GraphSpec, k: int) -> None:
    if not 1 <= k <= spec.n:
        raise GraphIndexError(f"node index {k} outside [1, {spec.n}]")


def weight(spec: GraphSpec, k: int, j: int) -> int:
    """Edge weight ``w_kj`` in {0, 1} from the index-distance rule."""
    _check_index(spec, k)
    _check_index(spec, j)
    d = abs(k - j)
    r = spec.band_radius
    # d <= n*kappa  or  d >= n*(1-kappa)  <=>  n - d <= n*kappa
    return int(d <= r or spec.n - d <= r)


def degree(spec: GraphSpec, k: int) -> int:
    _check_index(spec, k)
    return sum(weight(spec, k, j) for j in range(1, spec.n + 1))


def graphon_limit(kappa: float, x: float, y: float) -> int:
    """Limit graphon ``W(x, y)`` on the unit square."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError("graphon arguments must lie in [0, 1]")
    d = abs(x - y)
    return int(d <= kappa or d >= 1.0 - kappa)


def graphon_step(spec: GraphSpec, x: float, y: float) -> int:
    """Step graphon ``W^n`` constant on the cells ``I_k x I_j``."""
    n = spec.n
    k = min(int(x * n) + 1, n)
    j = min(int(y * n) + 1, n)
    return weight(spec, k, j)
