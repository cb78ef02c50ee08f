"""Interpolation functionals over finite ground sets.

K(t, x) trades a penalty against a (possibly powered) distance:
K(t, x) = min over ground y of f(y) + t^q d(x, y)^q. Its minimizer pi_t(x)
projects the target onto the multiscale skeleton K_t = {pi_t(x)}; the
telescoping identity along a geometric t-grid is what turns penalties into
summable chaining controls.

Minimizers exist because the ground set is finite; ties prefer y = x (the
choice that makes pi_t a projection on sublevel targets) and then the
lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metric import FiniteMetricSpace, SubsetView


@dataclass(frozen=True)
class InterpolationProblem:
    """Ground space + penalty + power; target is the set being approximated.

    penalty maps point index -> nonnegative value; points absent from the
    map are excluded candidates. power q = 1 is the linear variant
    f(y) + t*d(x,y); q > 1 is the powered variant f(y) + t^q d(x,y)^q.
    """

    ground: FiniteMetricSpace
    penalty: dict
    target: SubsetView
    power: float = 1.0

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("power must be >= 1")
        pen = {int(k): float(v) for k, v in self.penalty.items()}
        if not pen:
            raise ValueError("penalty excludes every candidate")
        for k, v in pen.items():
            if not 0 <= k < self.ground.size:
                raise ValueError(f"penalty key {k} out of range")
            if not np.isfinite(v) or v < 0:
                raise ValueError("penalties must be finite and nonnegative")
        object.__setattr__(self, "penalty", pen)

    @property
    def candidates(self) -> tuple:
        return tuple(sorted(self.penalty))


def k_functional(prob: InterpolationProblem, t: float, x: int) -> tuple[float, int]:
    """(K(t,x), pi_t(x)): exact minimum of f(y) + t^q d(x,y)^q over candidates.

    Prefers y = x when x attains the minimum, then the lowest index.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    q = prob.power
    d = prob.ground.dist
    best_val, best_y = np.inf, None
    for y in prob.candidates:
        val = prob.penalty[y] + (t * d[x, y]) ** q
        if val < best_val:
            best_val, best_y = val, y
    if x in prob.penalty and prob.penalty[x] == best_val:
        best_y = x
    return float(best_val), int(best_y)


def interpolation_set(prob: InterpolationProblem, t: float) -> SubsetView:
    """K_t: the deduplicated image of the target under pi_t."""
    pts = {k_functional(prob, t, x)[1] for x in prob.target.indices}
    return SubsetView(prob.ground, sorted(pts))


def t_grid(a: float, alpha: float, n_levels: int) -> list:
    """Geometric grid a * 2^(n/alpha), n = 0..n_levels-1 (the grid every check uses)."""
    return [a * 2.0 ** (n / alpha) for n in range(n_levels)]


def stabilization_t(prob: InterpolationProblem) -> float:
    """A t beyond which pi_t(x) = x for every x with finite penalty.

    Once t^q * (min positive distance)^q exceeds the penalty range, moving
    is too expensive.
    """
    pen = prob.penalty
    spread = max(pen.values()) - min(pen.values())
    d = prob.ground.dist
    cand = prob.candidates
    pos = [d[i, j] for i in cand for j in cand if d[i, j] > 0]
    if not pos or spread == 0:
        return 1.0
    return (spread / min(pos) ** prob.power) ** (1.0 / prob.power) + 1.0


@dataclass(frozen=True)
class TelescopingReport:
    sums: dict
    bounds: dict
    max_ratio: float
    a: float
    alpha: float
    n_levels: int


def telescoping_check(
    prob: InterpolationProblem,
    alpha: float,
    a: float,
    n_levels: int | None = None,
) -> TelescopingReport:
    """Per-point projection-error sums along the geometric t-grid.

    S(x) = sum_n (2^(n/alpha) d(x, pi_(a 2^(n/alpha))(x)))^q must satisfy
    S(x) <= f(x) / (a^q (1 - 2^(-q/alpha))), the explicit constant the
    telescoping argument yields; the report carries the worst ratio.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    q = prob.power
    if n_levels is None:
        t_star = stabilization_t(prob)
        n_levels = max(4, int(np.ceil(alpha * np.log2(max(t_star / a, 2.0)))) + 2)
    grid = t_grid(a, alpha, n_levels)
    const = a**q * (1.0 - 2.0 ** (-q / alpha))
    sums, bounds = {}, {}
    max_ratio = 0.0
    for x in prob.target.indices:
        s = 0.0
        for n, t in enumerate(grid):
            _, pi = k_functional(prob, t, x)
            s += (2.0 ** (n / alpha) * prob.ground.dist[x, pi]) ** q
        sums[x] = s
        f_x = prob.penalty.get(x, np.inf)
        bounds[x] = f_x / const
        if f_x > 0:
            max_ratio = max(max_ratio, s * const / f_x)
        elif s > 0:
            max_ratio = np.inf
    return TelescopingReport(sums, bounds, max_ratio, a, alpha, n_levels)


@dataclass(frozen=True)
class ProjectionReport:
    idempotent: bool
    image_in_target: bool
    image_is_fixed_set: bool
    image: tuple
    fixed_set: tuple


def projection_check(prob: InterpolationProblem, t: float, u: float) -> ProjectionReport:
    """Verify pi_t is a projection when the target is the sublevel set {f <= u}.

    Checks, exactly: pi_t(pi_t(x)) = pi_t(x); K_t inside the target; and
    K_t = {x in T : K(t,x) = f(x)}. Requires the linear variant (power 1),
    where the triangle inequality drives the argument.
    """
    if prob.power != 1:
        raise ValueError("projection property needs the linear variant (power=1)")
    sub = {y for y, f in prob.penalty.items() if f <= u}
    if set(prob.target.indices) != sub:
        raise ValueError("target is not the sublevel set {f <= u}")
    pi = {x: k_functional(prob, t, x)[1] for x in prob.target.indices}
    image = tuple(sorted(set(pi.values())))
    idem = all(k_functional(prob, t, pi[x])[1] == pi[x] for x in prob.target.indices)
    in_target = all(y in sub for y in image)
    fixed = tuple(
        sorted(x for x in prob.target.indices if k_functional(prob, t, x)[0] == prob.penalty[x])
    )
    return ProjectionReport(idem, in_target, image == fixed, image, fixed)


def ellipsoid_closed_form(t: float, x) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form minimizer and image-ellipsoid weights for the k-weighted ball.

    For the penalty sum_k k y_k^2 with squared Euclidean transport cost at
    scale t, the minimizer shrinks coordinatewise, pi_k = t^2/(t^2+k) * x_k,
    and the image of the unit ball is the ellipsoid with weights
    ((t^2+k)/t^2)^2 * k. At t = 0 the minimizer is the origin and the
    weights are infinite.
    """
    x = np.asarray(x, dtype=float)
    k = np.arange(1, x.shape[0] + 1, dtype=float)
    if t == 0:
        return np.zeros_like(x), np.full_like(x, np.inf)
    pi = t**2 / (t**2 + k) * x
    weights = ((t**2 + k) / t**2) ** 2 * k
    return pi, weights


def ellipsoid_gauge_sq(x) -> float:
    """The k-weighted squared gauge sum_k k x_k^2."""
    x = np.asarray(x, dtype=float)
    k = np.arange(1, x.shape[0] + 1, dtype=float)
    return float((k * x * x).sum())
