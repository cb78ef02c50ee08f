"""Gaussian processes on finite index sets and the majorizing-measure pipeline.

Width estimates use common random numbers: one path matrix per (seed,
samples) pair serves every subset, so subset monotonicity holds sample by
sample and the ball K-functional telescopes exactly in the estimated
quantities, not just in expectation. Paths are generated in fixed-size
blocks with per-block seeds, which makes every estimate independent of how
work might be carved up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metric import FiniteMetricSpace, SubsetView
from .partitions import ControlMatrix, contraction_build, value
from .report import BoundReport

BLOCK = 4096
EIG_FLOOR = -1e-10
TELESCOPE_CONST = 1.0 / (1.0 - 2.0 ** (-0.5))  # exact constant of the ball telescoping


@dataclass(frozen=True)
class GaussianProcess:
    """Centered process given by its covariance over a finite index set."""

    cov: np.ndarray
    ids: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.cov, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("covariance must be square")
        if not np.allclose(c, c.T, atol=0, rtol=0):
            raise ValueError("covariance must be symmetric")
        w = np.linalg.eigvalsh(c)
        if w.min() < EIG_FLOOR:
            raise ValueError(f"covariance not PSD: min eigenvalue {w.min():.3e}")
        object.__setattr__(self, "cov", c)
        if not self.ids:
            object.__setattr__(self, "ids", tuple(range(c.shape[0])))

    @property
    def size(self) -> int:
        return self.cov.shape[0]


def process_from_json(obj: dict) -> GaussianProcess:
    if "cov" in obj:
        return GaussianProcess(np.asarray(obj["cov"], dtype=float))
    if "points" in obj:
        pts = np.asarray(obj["points"], dtype=float)
        if obj.get("embed", "l2") != "l2":
            raise ValueError("process JSON field 'embed' must be 'l2'")
        return GaussianProcess(pts @ pts.T)
    raise ValueError("process JSON missing field 'cov' or 'points'")


def natural_metric(process: GaussianProcess) -> FiniteMetricSpace:
    """Space over the index set with d(x,y) = sqrt(E|X_x - X_y|^2)."""
    c = process.cov
    v = np.diagonal(c)
    sq = v[:, None] + v[None, :] - 2 * c
    sq = np.maximum(sq, 0.0)
    d = np.sqrt(sq)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return FiniteMetricSpace(dist=d, point_ids=process.ids)


def sample_paths(process: GaussianProcess, samples: int, seed: int) -> np.ndarray:
    """(samples, |T|) path matrix; block-seeded, worker-count invariant."""
    w, vecs = np.linalg.eigh(process.cov)
    factor = vecs * np.sqrt(np.clip(w, 0.0, None))
    n = process.size
    blocks = []
    for b in range(0, samples, BLOCK):
        m = min(BLOCK, samples - b)
        rng = np.random.default_rng(np.random.SeedSequence([seed, b // BLOCK]))
        z = rng.standard_normal((m, n))
        blocks.append(z @ factor.T)
    return np.vstack(blocks)


def mc_sup(
    process: GaussianProcess,
    subset: SubsetView | None = None,
    samples: int = 20000,
    seed: int = 0,
    paths: np.ndarray | None = None,
) -> tuple[float, float]:
    """(estimate, standard error) of the expected supremum over the subset."""
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    if paths is None:
        paths = sample_paths(process, samples, seed)
    idx = subset.array() if subset is not None else np.arange(process.size)
    sup = paths[:, idx].max(axis=1)
    return float(sup.mean()), float(sup.std(ddof=1) / math.sqrt(len(sup)))


@dataclass
class BallWidthCache:
    """Estimated widths of all balls B(x, s) at realized radii, one path set.

    radii[x] is ascending; widths[x][j] estimates the width of the ball of
    radius radii[x][j] around x. Widths are prefix maxima of the shared path
    matrix, so they are monotone in the radius sample-by-sample.
    """

    process: GaussianProcess
    space: FiniteMetricSpace
    samples: int
    seed: int
    radii: dict = field(default_factory=dict)
    widths: dict = field(default_factory=dict)
    g_total: float = 0.0
    g_total_se: float = 0.0
    paths: np.ndarray | None = None

    @classmethod
    def build(cls, process, samples=20000, seed=0):
        space = natural_metric(process)
        paths = sample_paths(process, samples, seed)
        g, se = mc_sup(process, None, samples, seed, paths=paths)
        cache = cls(process, space, samples, seed, g_total=g, g_total_se=se, paths=paths)
        n = process.size
        for x in range(n):
            order = np.argsort(space.dist[x], kind="stable")
            run = np.maximum.accumulate(paths[:, order], axis=1)
            means = run.mean(axis=0)
            r_sorted = space.dist[x][order]
            rad, wid = [], []
            for j in range(n):
                # last prefix index at each distinct radius defines the ball
                if j + 1 < n and r_sorted[j + 1] == r_sorted[j]:
                    continue
                rad.append(float(r_sorted[j]))
                wid.append(float(means[j]))
            cache.radii[x] = rad
            cache.widths[x] = wid
        return cache

    def width_at(self, x: int, s: float) -> float:
        rad = self.radii[x]
        j = int(np.searchsorted(rad, s, side="right")) - 1
        return self.widths[x][max(j, 0)]


def ball_k_functional(
    process: GaussianProcess, t: float, x: int, cache: BallWidthCache
) -> tuple[float, float]:
    """(K(t,x), s(t,x)) for K(t,x) = inf over s >= 0 of t*s + G(T) - G(B(x,s)).

    The width is piecewise constant in s with breakpoints at realized
    distances, so the infimum is exact on the breakpoint set; ties go to the
    smallest radius.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    rad = cache.radii[x]
    wid = cache.widths[x]
    best_val, best_s = np.inf, 0.0
    for r, w in zip(rad, wid):
        val = t * r + cache.g_total - w
        if val < best_val:
            best_val, best_s = val, r
    return float(best_val), float(best_s)


def mm_pipeline(
    process: GaussianProcess,
    a: float = 0.5,
    samples: int = 20000,
    seed: int = 0,
    cache: BallWidthCache | None = None,
    builder_scale: float = 1.0,
) -> BoundReport:
    """Constructive width-to-partition pipeline: controls s_n(x) = s(a 2^(n/2), x).

    Feeds ((a+1) s_n, builder_scale * a) to the partition builder and returns
    the witness with its chaining value. Asserts the exact ball telescoping
    sum bound sum_n 2^(n/2) s_n(x) <= G(T) / (a (1 - 2^(-1/2))). Flags low
    confidence when the width SE exceeds 10% of the width.
    """
    if process.size > 64:
        raise ValueError("mm_pipeline is budgeted for |T| <= 64")
    if a <= 0:
        raise ValueError("a must be positive")
    if cache is None:
        cache = BallWidthCache.build(process, samples, seed)
    space = cache.space
    target = space.all_points()
    g, g_se = cache.g_total, cache.g_total_se
    low_confidence = bool(g > 0 and g_se > 0.1 * g)

    from .entropy import singleton_level

    diam_t = float(space.dist.max())
    if diam_t > 0 and g > 0:
        crossing = max((g / max(a, 1e-12)), 2.0)
        n_lv = max(singleton_level(process.size) + 1, int(np.ceil(2 * np.log2(crossing))) + 1)
    else:
        n_lv = singleton_level(process.size) + 1
    n_lv = min(n_lv, 24)

    s = np.zeros((n_lv + 1, process.size))
    for n in range(1, n_lv + 1):
        t = a * 2.0 ** (n / 2.0)
        for x in range(process.size):
            s[n, x] = ball_k_functional(process, t, x, cache)[1]

    # exact telescoping audit in the estimated quantities
    budget = TELESCOPE_CONST * g / a
    tele_sums = np.sum([2.0 ** (n / 2.0) * s[n] for n in range(1, n_lv + 1)], axis=0)
    tele_max = float(tele_sums.max()) if process.size else 0.0

    res = None
    for factor in (1.0, 2.0, 4.0, 8.0):
        ctrl = ControlMatrix(s=factor * (a + 1.0) * s, a=builder_scale * a)
        res = contraction_build(space, target, ctrl, alpha=2.0)
        if res.feasible:
            break
    diagnostics = res.diagnostics
    val = value(res.sequence, alpha=2.0, p=1.0)
    comps = {
        "value": val,
        "g_hat": g,
        "g_se": g_se,
        "telescope_max": tele_max,
        "telescope_budget": budget,
    }
    params = {"alpha": 2.0, "p": 1.0, "a": a, "samples": samples, "seed": seed}
    rep = BoundReport(
        "mm_pipeline",
        val,
        comps,
        params,
        witness=res.sequence,
        se=g_se,
        diagnostics=list(diagnostics) + (["low-confidence: SE > 10% of width"] if low_confidence else []),
    )
    if tele_max > budget:
        rep.diagnostics.append(f"telescoping excess: {tele_max} > {budget}")
    return rep


def sudakov_minoration_gap(
    process: GaussianProcess,
    points,
    sigma: float,
    b: float,
    c1: float = 0.1,
    c2: float = 10.0,
    samples: int = 20000,
    seed: int = 0,
    cache: BallWidthCache | None = None,
) -> float:
    """Gap of the separated-ball growth inequality at constants (c1, c2).

    min_i G(B(x_i, sigma)) + c1*b*sqrt(log n) - G(union of balls)
    - c2*sigma*sqrt(log n); nonpositive means the inequality holds. Logs are
    natural. The points must be pairwise at least b apart.
    """
    if sigma < 0 or b <= 0:
        raise ValueError("need sigma >= 0 and b > 0")
    if cache is None:
        cache = BallWidthCache.build(process, samples, seed)
    space = cache.space
    pts = list(points)
    for i, xi in enumerate(pts):
        for xj in pts[i + 1 :]:
            if space.dist[xi, xj] < b:
                raise ValueError(f"points {xi},{xj} closer than b")
    n = len(pts)
    logn = math.log(n) if n > 1 else 0.0
    min_ball = min(cache.width_at(x, sigma) for x in pts)
    union = sorted({int(j) for x in pts for j in np.nonzero(space.dist[x] <= sigma)[0]})
    g_union, _ = mc_sup(process, SubsetView(space, union), cache.samples, cache.seed, paths=cache.paths)
    return float(min_ball + c1 * b * math.sqrt(logn) - g_union - c2 * sigma * math.sqrt(logn))
