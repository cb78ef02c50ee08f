"""Finite (quasi-)metric spaces: the substrate for all covering and partition work.

A space is a fixed list of points with a dense symmetric distance matrix.
Everything downstream (entropy numbers, partitions, interpolation,
Gaussian/matrix bounds) operates on subsets of such a space, so spaces are
immutable after construction and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORM_NAMES = ("l2", "euclidean", "l1", "linf")


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Ground point set with a symmetric nonnegative distance matrix.

    quasi_constant is data, not a mode switch: 1.0 for true metrics, 2.0
    for the regularized matrix-process distance. Downstream algorithms take
    it as a parameter where a proof needs it.
    """

    dist: np.ndarray
    coords: np.ndarray | None = None
    point_ids: tuple = ()
    quasi_constant: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.array_equal(d, d.T):
            raise ValueError("distance matrix must be symmetric")
        if (d < 0).any():
            raise ValueError("distances must be nonnegative")
        if np.diagonal(d).any():
            raise ValueError("distance matrix must have zero diagonal")
        if self.quasi_constant < 1.0:
            raise ValueError("quasi_constant must be >= 1")
        object.__setattr__(self, "dist", d)
        if self.coords is not None:
            object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        if not self.point_ids:
            object.__setattr__(self, "point_ids", tuple(range(d.shape[0])))
        elif len(self.point_ids) != d.shape[0]:
            raise ValueError("point_ids length must match distance matrix")

    @property
    def size(self) -> int:
        return self.dist.shape[0]

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def subset(self, indices) -> "SubsetView":
        return SubsetView(self, indices)

    def all_points(self) -> "SubsetView":
        return SubsetView(self, range(self.size))


@dataclass(frozen=True)
class SubsetView:
    """Sorted, duplicate-free view of a subset of a space's points."""

    space: FiniteMetricSpace
    indices: tuple = field(default=())

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        for i in idx:
            if not 0 <= i < self.space.size:
                raise ValueError(f"point index {i} out of range")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i) -> bool:
        return i in set(self.indices)

    def array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int)


def pairwise_distances(coords: np.ndarray, norm_spec) -> np.ndarray:
    """Dense distance matrix of coords rows under the given norm descriptor."""
    x = np.asarray(coords, dtype=float)
    diff = x[:, None, :] - x[None, :, :]
    if norm_spec in ("l2", "euclidean"):
        d = np.sqrt((diff**2).sum(axis=2))
    elif norm_spec == "l1":
        d = np.abs(diff).sum(axis=2)
    elif norm_spec == "linf":
        d = np.abs(diff).max(axis=2)
    elif isinstance(norm_spec, dict) and "weighted_l2" in norm_spec:
        w = np.asarray(norm_spec["weighted_l2"], dtype=float)
        if (w < 0).any():
            raise ValueError("weighted_l2 weights must be nonnegative")
        if w.shape[0] != x.shape[1]:
            raise ValueError("weighted_l2 weights dimension mismatch")
        d = np.sqrt((w * diff**2).sum(axis=2))
    elif callable(norm_spec):
        n = x.shape[0]
        d = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                d[i, j] = d[j, i] = float(norm_spec(x[i] - x[j]))
    else:
        raise ValueError(f"unknown norm spec: {norm_spec!r}")
    np.fill_diagonal(d, 0.0)
    return 0.5 * (d + d.T)


def build_space(coords, norm_spec="l2", point_ids=()) -> FiniteMetricSpace:
    """Build a metric space from coordinate rows and a norm descriptor.

    norm_spec is one of "l2"/"euclidean", "l1", "linf",
    {"weighted_l2": [w_1, ..., w_d]}, {"matrix": [[...]]} (a pre-computed
    symmetric distance matrix), or a callable norm on difference vectors.
    """
    x = np.asarray(coords, dtype=float)
    if x.size == 0:
        raise ValueError("coords must be nonempty")
    if x.ndim != 2:
        raise ValueError("coords must be a list of equal-length vectors")
    if isinstance(norm_spec, dict) and "matrix" in norm_spec:
        d = np.asarray(norm_spec["matrix"], dtype=float)
        if d.shape != (x.shape[0],) * 2:
            raise ValueError("custom matrix shape mismatch")
        if not np.array_equal(d, d.T):
            raise ValueError("custom distance matrix must be symmetric")
        return FiniteMetricSpace(dist=d, coords=x, point_ids=tuple(point_ids))
    d = pairwise_distances(x, norm_spec)
    return FiniteMetricSpace(dist=d, coords=x, point_ids=tuple(point_ids))


def space_from_matrix(dist, quasi_constant=1.0, point_ids=()) -> FiniteMetricSpace:
    return FiniteMetricSpace(
        dist=np.asarray(dist, dtype=float),
        quasi_constant=float(quasi_constant),
        point_ids=tuple(point_ids),
    )


def check_metric(space: FiniteMetricSpace, kappa: float = 1.0) -> list:
    """All triples (i, j, k) with dist[i,j] > kappa*(dist[i,k] + dist[k,j]).

    Empty iff the space is a kappa-quasi-metric. Exact float comparisons,
    no epsilon.
    """
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1")
    d = space.dist
    # lhs[i,j,k] = d[i,j]; rhs[i,j,k] = d[i,k] + d[k,j]
    lhs = d[:, :, None]
    rhs = d[:, None, :] + d.T[None, :, :]
    bad = lhs > kappa * rhs
    return [tuple(int(v) for v in t) for t in zip(*np.nonzero(bad))]


def diam(subset: SubsetView) -> float:
    """Max pairwise distance in the subset; 0 for empty sets and singletons."""
    if len(subset) <= 1:
        return 0.0
    idx = subset.array()
    return float(subset.space.dist[np.ix_(idx, idx)].max())


def diam_indices(space: FiniteMetricSpace, indices) -> float:
    idx = sorted(set(indices))
    if len(idx) <= 1:
        return 0.0
    return float(space.dist[np.ix_(idx, idx)].max())


def point_set_to_json(space: FiniteMetricSpace, norm_name="l2") -> dict:
    if space.coords is None:
        return {"points": [], "norm": {"matrix": space.dist.tolist()}}
    return {"points": space.coords.tolist(), "norm": norm_name}


def space_from_json(obj: dict) -> FiniteMetricSpace:
    """Load {"points": [[...]], "norm": ...} into a space.

    When only a custom matrix is given, points may be omitted.
    """
    if "points" not in obj:
        raise ValueError("point-set JSON missing field 'points'")
    norm = obj.get("norm", "l2")
    pts = obj["points"]
    if isinstance(norm, dict) and "matrix" in norm and not pts:
        return space_from_matrix(norm["matrix"])
    return build_space(pts, norm)
