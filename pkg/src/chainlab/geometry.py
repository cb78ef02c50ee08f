"""Gauges and the lattice/convexity predicates behind the closed-form bounds.

A gauge is a nonnegative, homogeneous, symmetric function of vectors; lattice
gauges are additionally coordinate-monotone. The estimators here sample the
defining inequalities of the three geometric constants (lower-q estimate M,
q-convexity modulus eta, interpolation-set condition L); since each constant
is a supremum or infimum over pairs, sampling gives a one-sided estimate and
the tests pin instances with known analytic values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

MAX_EXACT_SUPPORT = 12


@dataclass(frozen=True)
class GaugeSpec:
    """Evaluatable gauge with the flags the estimators rely on."""

    evaluate: Callable
    dimension: int
    is_lattice: bool = False
    name: str = "custom"

    def __call__(self, v) -> float:
        return float(self.evaluate(np.asarray(v, dtype=float)))


def weighted_lq_gauge(weights, exponent: float) -> GaugeSpec:
    w = np.asarray(weights, dtype=float)
    if (w < 0).any():
        raise ValueError("weights must be nonnegative")
    if exponent < 1:
        raise ValueError("exponent must be >= 1")

    def ev(v):
        return (w * np.abs(v) ** exponent).sum() ** (1.0 / exponent)

    return GaugeSpec(ev, len(w), is_lattice=True, name=f"weighted_l{exponent}")


def l1_gauge(d: int) -> GaugeSpec:
    return weighted_lq_gauge(np.ones(d), 1.0)


def euclidean_gauge(d: int) -> GaugeSpec:
    return weighted_lq_gauge(np.ones(d), 2.0)


def ellipsoid_gauge(weights) -> GaugeSpec:
    """sqrt(sum w_k x_k^2); the k-weighted ellipsoid uses w_k = k."""
    w = np.asarray(weights, dtype=float)

    def ev(v):
        return float(np.sqrt((w * v * v).sum()))

    return GaugeSpec(ev, len(w), is_lattice=True, name="ellipsoid")


def lattice_split_point(y, z) -> np.ndarray:
    """u = (y ∧ z) ∨ 0 + (y ∨ z) ∧ 0, the overlap part of y and z.

    Coordinatewise, |y| - |u| = |y - u| <= |y - z|, and symmetrically in z:
    u keeps whatever y and z agree on and drops the rest.
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if y.shape != z.shape:
        raise ValueError("dimension mismatch")
    return np.maximum(np.minimum(y, z), 0.0) + np.minimum(np.maximum(y, z), 0.0)


def _set_partitions_of(items):
    items = list(items)
    if not items:
        yield ()
        return

    def rec(i, blocks):
        if i == len(items):
            yield tuple(tuple(b) for b in blocks)
            return
        x = items[i]
        for b in blocks:
            b.append(x)
            yield from rec(i + 1, blocks)
            b.pop()
        blocks.append([x])
        yield from rec(i + 1, blocks)
        blocks.pop()

    yield from rec(1, [[items[0]]])


def renorm_lower_q(
    gauge: GaugeSpec,
    q: float,
    x,
    mode: str = "exact",
    samples: int = 200,
    seed: int = 0,
) -> float:
    """Renormed gauge value: sup over disjoint-support splits of [sum ||x_i||^q]^(1/q).

    The renormed gauge has lower-q constant one and sits between the original
    gauge and M times it. Exact enumeration of support partitions up to
    support size 12; the sampled mode is a lower estimate.
    """
    if not gauge.is_lattice:
        raise ValueError("renorming needs a lattice gauge")
    x = np.asarray(x, dtype=float)
    support = [i for i in range(len(x)) if x[i] != 0]
    if not support:
        return 0.0
    if mode == "exact":
        if len(support) > MAX_EXACT_SUPPORT:
            raise ValueError(f"exact renorming capped at support size {MAX_EXACT_SUPPORT}")
        best = 0.0
        for part in _set_partitions_of(support):
            tot = 0.0
            for block in part:
                piece = np.zeros_like(x)
                piece[list(block)] = x[list(block)]
                tot += gauge(piece) ** q
            best = max(best, tot ** (1.0 / q))
        return best
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    best = gauge(x)
    for _ in range(samples):
        k = rng.integers(1, len(support) + 1)
        labels = rng.integers(0, k, size=len(support))
        tot = 0.0
        for b in range(k):
            block = [support[i] for i in range(len(support)) if labels[i] == b]
            if not block:
                continue
            piece = np.zeros_like(x)
            piece[block] = x[block]
            tot += gauge(piece) ** q
        best = max(best, tot ** (1.0 / q))
    return best


def estimate_geometry_constants(
    gauge: GaugeSpec,
    q: float,
    mode: str,
    samples: int = 500,
    seed: int = 0,
    prob=None,
    t_values=None,
) -> float:
    """Sampled estimate of one of the three geometric constants.

    lower_q: max over sampled disjoint splits of [sum ||x_i||^q]^(1/q) /
    ||sum |x_i|||; a lower estimate of the lower-q constant M.
    q_convex: min over sampled unit pairs of (1 - ||(x+y)/2||) / ||x-y||^q;
    an upper estimate of the convexity modulus eta (needs q >= 2).
    geom_condition: max over interpolation-set pairs of ||y-z||_T^q /
    (t ||y-z||); a lower estimate of the set-shrinkage constant L (needs an
    interpolation problem whose ground has coordinates).
    """
    rng = np.random.default_rng(seed)
    d = gauge.dimension
    if mode == "lower_q":
        if not gauge.is_lattice:
            raise ValueError("lower_q needs a lattice gauge")
        best, used = 0.0, 0
        for _ in range(samples):
            x = rng.standard_normal(d)
            k = int(rng.integers(1, d + 1))
            labels = rng.integers(0, k, size=d)
            denom = gauge(np.abs(x))
            if denom == 0:
                continue
            tot = 0.0
            for b in range(k):
                piece = np.where(labels == b, x, 0.0)
                tot += gauge(piece) ** q
            best = max(best, tot ** (1.0 / q) / denom)
            used += 1
        if used == 0:
            raise ValueError("all samples degenerate")
        return best
    if mode == "q_convex":
        if q < 2:
            raise ValueError("q-convexity needs q >= 2")
        best, used = np.inf, 0
        for _ in range(samples):
            x = rng.standard_normal(d)
            y = rng.standard_normal(d)
            gx, gy = gauge(x), gauge(y)
            if gx == 0 or gy == 0:
                continue
            x, y = x / gx, y / gy
            sep = gauge(x - y)
            if sep == 0:
                continue
            best = min(best, (1.0 - gauge((x + y) / 2)) / sep**q)
            used += 1
        if used == 0:
            raise ValueError("all samples degenerate")
        return best
    if mode == "geom_condition":
        from .interpolation import interpolation_set

        if prob is None or t_values is None:
            raise ValueError("geom_condition needs prob and t_values")
        coords = prob.ground.coords
        if coords is None:
            raise ValueError("geom_condition needs coordinates on the ground")
        best, used = 0.0, 0
        for t in t_values:
            if t <= 0:
                continue
            kt = interpolation_set(prob, t).indices
            for i, yi in enumerate(kt):
                for zj in kt[i + 1 :]:
                    dyz = prob.ground.dist[yi, zj]
                    if dyz == 0:
                        continue
                    best = max(best, gauge(coords[yi] - coords[zj]) ** q / (t * dyz))
                    used += 1
        if used == 0:
            raise ValueError("all samples degenerate")
        return best
    raise ValueError(f"unknown mode {mode!r}")
