"""Covering engine: entropy numbers, packing duality, local entropy, proper nets.

The n-th entropy number of A is the smallest covering radius achievable with
fewer than 2^(2^n) net points. The ambient "anywhere" net of the abstract
definition is realized as the loaded ground set; proper_net shows how to pull
a net back into the target subset at a bounded factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .metric import FiniteMetricSpace, SubsetView, diam

EXACT_GROUND_CAP = 20
LEVEL_CAP = 5


def net_budget(n: int) -> int:
    """Largest allowed net size at level n: 2^(2^n) - 1 (strict cap)."""
    if n < 0:
        raise ValueError("level must be >= 0")
    if n > LEVEL_CAP:
        raise ValueError(f"level {n} > {LEVEL_CAP}: 2^(2^n) not workable")
    return 2 ** (2**n) - 1


def partition_cap(n: int) -> int:
    """Cell-count cap 2^(2^n) - 1 for partition validation at any level.

    Beyond level 5 the true cap dwarfs any desk-scale point count, so a
    fixed large sentinel stands in for it.
    """
    if n < 0:
        raise ValueError("level must be >= 0")
    if n > LEVEL_CAP:
        return 2**32
    return 2 ** (2**n) - 1


def singleton_level(size: int) -> int:
    """Smallest level whose net budget covers `size` points one-to-one."""
    n = 0
    while net_budget(n) < size:
        n += 1
    return n


@dataclass(frozen=True)
class EntropyResult:
    """One entropy-number evaluation: level, value, witness net, method tag."""

    n: int
    value: float
    net: tuple
    method: str

    def __post_init__(self):
        if len(self.net) > net_budget(self.n):
            raise ValueError("net exceeds the 2^(2^n)-1 cardinality cap")


def _cover_radius(space: FiniteMetricSpace, a_idx, net_idx) -> float:
    if len(a_idx) == 0:
        return 0.0
    sub = space.dist[np.ix_(list(a_idx), list(net_idx))]
    return float(sub.min(axis=1).max())


def entropy_number(
    space: FiniteMetricSpace,
    subset: SubsetView,
    n: int,
    method: str = "exact",
    ground: SubsetView | None = None,
) -> EntropyResult:
    """e_n of the subset: inf over nets of fewer than 2^(2^n) ground points.

    exact: brute force over nets drawn from the ground set (|ground| <= 20).
    greedy: farthest-first traversal with net points from the subset itself;
    its value is at most twice the exact value over the same ground. Ties in
    the traversal break to the lowest point index.
    """
    if ground is None:
        ground = space.all_points()
    if ground.space is not space or subset.space is not space:
        raise ValueError("subset and ground must view the same space")
    budget = net_budget(n)
    a_idx = subset.indices
    if len(a_idx) == 0:
        return EntropyResult(n, 0.0, (), method)

    if method == "greedy":
        net = _farthest_first(space, a_idx, budget)
        return EntropyResult(n, _cover_radius(space, a_idx, net), tuple(net), "greedy")

    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    g_idx = ground.indices
    if len(g_idx) > EXACT_GROUND_CAP:
        raise ValueError(
            f"exact entropy requires |ground| <= {EXACT_GROUND_CAP}, got {len(g_idx)}"
        )
    k = min(budget, len(g_idx))
    d_ag = space.dist[np.ix_(list(a_idx), list(g_idx))]
    best_val = np.inf
    best_net = None
    for combo in combinations(range(len(g_idx)), k):
        val = d_ag[:, combo].min(axis=1).max()
        if val < best_val:
            best_val = float(val)
            best_net = combo
            if best_val == 0.0:
                break
    net = tuple(g_idx[i] for i in best_net)
    return EntropyResult(n, best_val, net, "exact")


def _farthest_first(space: FiniteMetricSpace, a_idx, k: int) -> list:
    """Gonzalez traversal over a_idx; deterministic via lowest-index ties."""
    a = list(a_idx)
    centers = [a[0]]
    d_to_net = space.dist[np.ix_(a, centers)].min(axis=1)
    while len(centers) < k and d_to_net.max() > 0:
        far = int(np.argmax(d_to_net))  # argmax takes the first = lowest index
        centers.append(a[far])
        d_to_net = np.minimum(d_to_net, space.dist[np.ix_(a, [a[far]])][:, 0])
    return centers


def greedy_packing(space: FiniteMetricSpace, subset: SubsetView, n: int, delta: float) -> list:
    """Maximal delta-separated subset built by a single greedy scan.

    Points are scanned in index order and kept whenever they are more than
    delta away from everything kept so far. When delta < e_n(A) with nets
    restricted to A, the result has at least 2^(2^n) points (packing duality
    at level n).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if n < 0:
        raise ValueError("level must be >= 0")
    chosen: list = []
    for i in subset.indices:
        if all(space.dist[i, j] > delta for j in chosen):
            chosen.append(i)
    return chosen


def local_entropy(
    space: FiniteMetricSpace,
    target: SubsetView,
    n: int,
    a: float,
    x: int,
    method: str = "exact",
    ground: SubsetView | None = None,
) -> float:
    """Local entropy number at x: largest scanned radius r with e_n(T ∩ B(x, r/a)) > r.

    Candidate radii are {a*d(x,y), d(x,y) : y in T} plus 0; the ball is
    piecewise constant in r with breakpoints there, so the scan is exact on
    the realized space. Always at most e_n(T).
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if ground is None:
        ground = space.all_points()
    t_idx = target.array()
    dx = space.dist[x, t_idx]
    candidates = sorted(set(float(v) for v in np.concatenate([a * dx, dx])) | {0.0})
    best = 0.0
    for r in candidates:
        ball = tuple(int(i) for i in t_idx[dx <= r / a])
        if not ball:
            continue
        e = entropy_number(space, SubsetView(space, ball), n, method, ground)
        if e.value > r:
            best = max(best, r)
    return best


def proper_net(
    space: FiniteMetricSpace,
    target: SubsetView,
    n: int,
    method: str = "exact",
    ground: SubsetView | None = None,
) -> EntropyResult:
    """Net contained in the target with covering radius <= 4 * e_n(target).

    Snaps an ambient net into the target: each ambient net point is replaced
    by its nearest target point. With an exact base net the radius is within
    factor 4 of the exact e_n; with a greedy base net, within factor 8.
    """
    if len(target) == 0:
        raise ValueError("proper_net requires a nonempty target")
    base = entropy_number(space, target, n, method, ground)
    t_idx = target.array()
    snapped = []
    for s in base.net:
        j = int(t_idx[np.argmin(space.dist[s, t_idx])])
        if j not in snapped:
            snapped.append(j)
    if not snapped:
        snapped = [int(t_idx[0])]
    radius = _cover_radius(space, t_idx, snapped)
    return EntropyResult(n, radius, tuple(sorted(snapped)), f"proper_{base.method}")


# Exact k-center for grounds too large for brute force (branch-and-bound set
# cover over the candidate radius set). Used by the covering-vs-trace checks
# and the partition builder; validated against entropy_number on small inputs.


def _cover_decision(ball_masks: list, universe: int, budget: int) -> list | None:
    """Centers (ball indices, at most budget) covering the universe, or None."""
    if universe == 0:
        return []
    if budget == 0:
        return None
    live = [(i, m & universe) for i, m in enumerate(ball_masks) if m & universe]
    if not live:
        return None
    best_cover = max(m.bit_count() for _, m in live)
    need = -(-universe.bit_count() // best_cover)
    if need > budget:
        return None
    # branch on the uncovered point with the fewest candidate balls
    pt_counts = {}
    u = universe
    while u:
        p = u & -u
        pt_counts[p] = sum(1 for _, m in live if m & p)
        u ^= p
    p = min(pt_counts, key=pt_counts.get)
    options = sorted(
        (i for i, m in live if m & p),
        key=lambda i: -(ball_masks[i] & universe).bit_count(),
    )
    for i in options:
        rest = _cover_decision(ball_masks, universe & ~ball_masks[i], budget - 1)
        if rest is not None:
            return [i] + rest
    return None


def exact_kcenter(
    space: FiniteMetricSpace,
    subset: SubsetView,
    n: int,
    ground: SubsetView | None = None,
) -> EntropyResult:
    """Exact e_n for grounds beyond the brute-force cap.

    Binary search over realized radii with an exact set-cover decision at
    each radius; equals entropy_number(..., "exact") where both apply.
    """
    if ground is None:
        ground = space.all_points()
    a_idx = list(subset.indices)
    g_idx = list(ground.indices)
    if len(a_idx) == 0:
        return EntropyResult(n, 0.0, (), "exact_kcenter")
    budget = net_budget(n)
    if budget >= len(g_idx):
        return EntropyResult(n, _cover_radius(space, a_idx, g_idx), tuple(g_idx), "exact_kcenter")
    d_ag = space.dist[np.ix_(a_idx, g_idx)]
    radii = np.unique(d_ag)
    # greedy upper bound narrows the search window
    greedy = _farthest_first(space, a_idx, budget)
    ub = _cover_radius(space, a_idx, greedy)
    lo, hi = 0, int(np.searchsorted(radii, ub))
    hi = min(hi, len(radii) - 1)
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        r = radii[mid]
        masks = []
        for g in range(len(g_idx)):
            m = 0
            for ai, da in enumerate(d_ag[:, g]):
                if da <= r:
                    m |= 1 << ai
            masks.append(m)
        sol = _cover_decision(masks, (1 << len(a_idx)) - 1, budget)
        if sol is not None:
            best = (float(r), tuple(sorted(g_idx[i] for i in sol)))
            hi = mid - 1
        else:
            lo = mid + 1
    if best is None:
        # greedy window missed (cannot happen: ub is feasible), fall back
        best = (ub, tuple(sorted(greedy)))
    return EntropyResult(n, best[0], best[1], "exact_kcenter")
