"""Admissible partition sequences and the explicit contraction-principle builder.

An admissible sequence is an increasing chain of partitions of a target set
with fewer than 2^(2^n) cells at level n. Its value is the worst-case
weighted sum of cell diameters along a point's cell chain; the chaining
functional is the infimum of that value over all admissible sequences.

The builder turns per-point controls s_n(x) plus a contraction coefficient
`a` into an explicit admissible sequence: each level splits every cell into
segments on which s_n is nearly constant, then covers each segment by fewer
than 2^(2^n) pieces of controlled diameter. Levels 0 and 1 stay whole and
the built levels enter at index 2, which keeps the cardinality caps valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .entropy import _cover_decision, net_budget, partition_cap, singleton_level
from .metric import FiniteMetricSpace, SubsetView, diam_indices


@dataclass(frozen=True)
class AdmissibleSequence:
    """Increasing partitions of a target set under doubly-exponential caps."""

    space: FiniteMetricSpace
    target: tuple
    levels: tuple  # levels[n] = tuple of cells; cell = sorted tuple of indices
    level_kinds: tuple = ()  # parallel tags: root | built | singleton | given

    def __post_init__(self):
        object.__setattr__(self, "target", tuple(sorted(set(self.target))))
        lv = tuple(tuple(tuple(sorted(c)) for c in level) for level in self.levels)
        object.__setattr__(self, "levels", lv)
        if not self.level_kinds:
            object.__setattr__(self, "level_kinds", ("given",) * len(lv))

    @property
    def n_max(self) -> int:
        return len(self.levels) - 1

    def validate(self) -> None:
        t = set(self.target)
        if not self.levels:
            raise ValueError("sequence has no levels")
        if len(self.levels[0]) != 1 or set(self.levels[0][0]) != t:
            raise ValueError("level 0 must be the single cell {T}")
        for n, level in enumerate(self.levels):
            if len(level) > partition_cap(n):
                raise ValueError(f"level {n} has {len(level)} cells, cap is {partition_cap(n)}")
            seen: set = set()
            for cell in level:
                if not cell:
                    raise ValueError(f"empty cell at level {n}")
                if seen & set(cell):
                    raise ValueError(f"overlapping cells at level {n}")
                seen |= set(cell)
            if seen != t:
                raise ValueError(f"level {n} does not cover the target")
        for n in range(1, len(self.levels)):
            parents = {i: cell for cell in self.levels[n - 1] for i in cell}
            for cell in self.levels[n]:
                parent_cells = {parents[i] for i in cell}
                if len(parent_cells) != 1:
                    raise ValueError(f"cell at level {n} is not nested in one parent")

    def cell_of(self, n: int, x: int) -> tuple:
        for cell in self.levels[n]:
            if x in cell:
                return cell
        raise KeyError(f"point {x} not in level {n}")


def value(seq: AdmissibleSequence, alpha: float, p: float = 1.0) -> float:
    """[sup_x sum_n (2^(n/alpha) diam(A_n(x)))^p]^(1/p), summed to n_max.

    Levels beyond n_max contribute nothing; the sequence is understood to
    continue with singleton refinements, so callers should extend sequences
    to a level where zero-diameter cells are admissible.
    """
    if alpha <= 0 or p < 1:
        raise ValueError("need alpha > 0 and p >= 1")
    space = seq.space
    dcache = {cell: diam_indices(space, cell) for level in seq.levels for cell in level}
    best = 0.0
    for x in seq.target:
        s = 0.0
        for n, level in enumerate(seq.levels):
            cell = next(c for c in level if x in c)
            s += (2.0 ** (n / alpha) * dcache[cell]) ** p
        best = max(best, s)
    return best ** (1.0 / p)


@dataclass(frozen=True)
class ControlMatrix:
    """Per-level, per-point controls s_n(x) >= 0 plus the coefficient a >= 0.

    Row n of `s` is consumed when building level n; row 0 is unused.
    """

    s: np.ndarray
    a: float

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.ndim != 2:
            raise ValueError("s must be a (levels, points) matrix")
        if not np.isfinite(s).all() or (s < 0).any():
            raise ValueError("controls must be finite and nonnegative")
        if self.a < 0:
            raise ValueError("a must be >= 0")
        object.__setattr__(self, "s", s)

    @property
    def levels(self) -> int:
        return self.s.shape[0] - 1


@dataclass
class BuildResult:
    sequence: AdmissibleSequence
    diagnostics: list = field(default_factory=list)
    s_used: np.ndarray | None = None
    a_used: float = 0.0

    @property
    def feasible(self) -> bool:
        return not self.diagnostics


def _voronoi_pieces(space, points, centers):
    pieces = {c: [] for c in centers}
    for p in points:
        best = min(centers, key=lambda c: (space.dist[p, c], c))
        pieces[best].append(p)
    return [tuple(sorted(v)) for c, v in pieces.items() if v]


def _greedy_cover(space, points, radius):
    pts = list(points)
    centers = [pts[0]]
    d = space.dist[np.ix_(pts, centers)].min(axis=1)
    while d.max() > radius:
        far = int(np.argmax(d))
        centers.append(pts[far])
        d = np.minimum(d, space.dist[np.ix_(pts, [pts[far]])][:, 0])
    return centers


def _cover_segment(space, seg, radius, budget, ground_idx):
    """Cover the segment by <= budget balls of the given radius; None if impossible."""
    centers = _greedy_cover(space, seg, radius)
    if len(centers) <= budget:
        return centers
    masks = []
    for g in ground_idx:
        m = 0
        for j, p in enumerate(seg):
            if space.dist[p, g] <= radius:
                m |= 1 << j
        masks.append(m)
    sol = _cover_decision(masks, (1 << len(seg)) - 1, budget)
    if sol is None:
        return None
    return [ground_idx[i] for i in sol]


def _subdivide(space, seg, radius, budget, ground_idx):
    """Pieces of diameter <= 2*radius covering the segment, or None.

    The realized piece diameters are verified against 2*radius; in the
    (float-boundary) event a Voronoi piece exceeds it, the offending piece
    is split further while the budget allows.
    """
    centers = _cover_segment(space, seg, radius, budget, ground_idx)
    if centers is None:
        return None
    pieces = _voronoi_pieces(space, seg, centers)
    fixed = []
    queue = list(pieces)
    while queue:
        piece = queue.pop()
        if diam_indices(space, piece) <= 2 * radius or len(piece) == 1:
            fixed.append(piece)
            continue
        sub = space.dist[np.ix_(piece, piece)]
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        half_a = [p for p in piece if space.dist[p, piece[i]] <= space.dist[p, piece[j]]]
        half_b = [p for p in piece if p not in half_a]
        queue.append(tuple(sorted(half_a)))
        queue.append(tuple(sorted(half_b)))
    if len(fixed) > budget:
        return None
    return sorted(fixed)


def contraction_build(
    space: FiniteMetricSpace,
    target: SubsetView,
    ctrl: ControlMatrix,
    alpha: float,
    n_max: int | None = None,
) -> BuildResult:
    """Build an admissible sequence from entropy controls, level by level.

    Level n splits every current cell into n segments on which the control
    is pinned between consecutive thresholds 2^(-2i/alpha) * diam(T), then
    covers each segment with fewer than 2^(2^n) pieces of diameter at most
    2*(a*diam(parent) + sup of the control over the segment). Controls are
    clipped at diam(T) first. The built levels are shifted up by two and a
    singleton tail is appended, so the result is always admissible; any
    segment that cannot be covered within its cardinality budget is reported
    as a hypothesis-violation diagnostic and stops the refinement there.
    """
    t_idx = target.indices
    n_pts = space.size
    if ctrl.s.shape[1] != n_pts:
        raise ValueError("control matrix width must match the space size")
    diam_t = diam_indices(space, t_idx)
    levels_avail = ctrl.levels if n_max is None else min(ctrl.levels, n_max)
    s_clip = np.minimum(ctrl.s, diam_t)
    a = ctrl.a
    ground_idx = list(range(n_pts))

    built = [[tuple(t_idx)]]  # built[n] corresponds to level n of the raw chain
    diagnostics = []
    for n in range(1, levels_avail + 1):
        budget = partition_cap(n)
        new_level = []
        stop = False
        for parent in built[n - 1]:
            if len(parent) == 1:
                new_level.append(parent)
                continue
            dp = diam_indices(space, parent)
            segments = _split_segments(parent, s_clip[n], n, alpha, diam_t)
            for seg in segments:
                sup_s = max(s_clip[n][x] for x in seg)
                radius = a * dp + sup_s
                pieces = _subdivide(space, seg, radius, budget, ground_idx)
                if pieces is None:
                    diagnostics.append(
                        {"level": n, "segment": tuple(seg), "radius": radius, "budget": budget}
                    )
                    stop = True
                    break
                new_level.extend(pieces)
            if stop:
                break
        if stop:
            break
        # cardinality audit from the construction: strictly below 2^(2^(n+2))
        if len(new_level) >= 2 ** (2 ** (n + 2)):
            raise RuntimeError("cardinality audit failed; construction is broken")
        built.append(sorted(new_level))

    levels = [[tuple(t_idx)], [tuple(t_idx)]] + built
    kinds = ["root", "root"] + ["root"] + ["built"] * (len(built) - 1)
    # singleton tail: refine to zero-diameter cells as soon as the cap allows
    if any(len(c) > 1 for c in levels[-1]):
        n_next = len(levels)
        while partition_cap(n_next) < len(t_idx):
            levels.append(levels[-1])
            kinds.append("copy")
            n_next += 1
        levels.append([(i,) for i in t_idx])
        kinds.append("singleton")
    seq = AdmissibleSequence(space, t_idx, tuple(tuple(l) for l in levels), tuple(kinds))
    seq.validate()
    result = BuildResult(seq, diagnostics, s_used=s_clip, a_used=a)
    bad = diameter_recursion_violations(result, alpha, diam_t)
    if bad:
        raise RuntimeError(f"diameter recursion violated: {bad[:3]}")
    return result


def _split_segments(parent, s_row, n, alpha, diam_t):
    """Split a cell into n segments by thresholded control values.

    Segment i < n holds points with s in (2^(-2i/a)*D, 2^(-2(i-1)/a)*D];
    segment n holds the rest (s <= 2^(-2(n-1)/a)*D). Clipped controls never
    exceed D, so the segments cover the cell.
    """
    if diam_t == 0.0:
        return [tuple(parent)]
    thresholds = [2.0 ** (-2.0 * i / alpha) * diam_t for i in range(n)]
    segments = [[] for _ in range(n)]
    for x in parent:
        s = s_row[x]
        placed = False
        for i in range(1, n):
            if thresholds[i] < s <= thresholds[i - 1]:
                segments[i - 1].append(x)
                placed = True
                break
        if not placed:
            segments[n - 1].append(x)
    return [tuple(seg) for seg in segments if seg]


def diameter_recursion_violations(result: BuildResult, alpha: float, diam_t: float | None = None) -> list:
    """Exact audit of the per-cell diameter recursion on built levels.

    For every built level n >= 3 and point x:
    diam(A_n(x)) <= 2a*diam(A_(n-1)(x)) + 2^(1+2/alpha)*s_(n-2)(x)
                    + 2^(1-2(n-3)/alpha)*diam(T).
    Singleton tail levels hold trivially; copied levels are skipped.
    """
    seq = result.sequence
    space = seq.space
    if diam_t is None:
        diam_t = diam_indices(space, seq.target)
    s = result.s_used
    a = result.a_used
    viol = []
    for n in range(3, seq.n_max + 1):
        if seq.level_kinds[n] == "copy":
            continue
        for x in seq.target:
            lhs = diam_indices(space, seq.cell_of(n, x))
            s_val = float(s[n - 2][x]) if s is not None and n - 2 <= s.shape[0] - 1 else 0.0
            rhs = (
                2 * a * diam_indices(space, seq.cell_of(n - 1, x))
                + 2.0 ** (1 + 2.0 / alpha) * s_val
                + 2.0 ** (1 - 2.0 * (n - 3) / alpha) * diam_t
            )
            if lhs > rhs:
                viol.append({"level": n, "point": x, "lhs": lhs, "rhs": rhs})
    return viol


# ---------------------------------------------------------------------------
# exact chaining-functional oracle (full enumeration at toy scale)


def _set_partitions(elems, max_blocks=None):
    elems = list(elems)
    if not elems:
        yield ()
        return

    def rec(i, blocks):
        if i == len(elems):
            yield tuple(tuple(sorted(b)) for b in blocks)
            return
        x = elems[i]
        for b in blocks:
            b.append(x)
            yield from rec(i + 1, blocks)
            b.pop()
        if max_blocks is None or len(blocks) < max_blocks:
            blocks.append([x])
            yield from rec(i + 1, blocks)
            blocks.pop()

    yield from rec(1, [[elems[0]]])


@dataclass(frozen=True)
class GammaResult:
    value: float
    witness: AdmissibleSequence


def gamma_exact(
    space: FiniteMetricSpace,
    target: SubsetView,
    alpha: float,
    p: float = 1.0,
    n_max: int = 2,
) -> GammaResult:
    """Exact infimum of the value over admissible chains truncated at n_max.

    Full enumeration of nested partition chains (at most 3 cells at level 1,
    15 at level 2); beyond n_max the chain continues with singleton
    refinements, which add nothing to the value. Limited to |T| <= 6 and
    n_max <= 2. The returned witness attains the value.
    """
    t_idx = target.indices
    if len(t_idx) > 6:
        raise ValueError("gamma_exact is limited to |T| <= 6")
    if n_max > 2:
        raise ValueError("gamma_exact is limited to n_max <= 2")
    if net_budget(n_max + 1) < len(t_idx):
        raise ValueError("singleton continuation infeasible; raise n_max")
    dcache: dict = {}

    def dm(cell):
        if cell not in dcache:
            dcache[cell] = diam_indices(space, cell)
        return dcache[cell]

    w = {n: 2.0 ** (n / alpha) for n in range(n_max + 1)}
    base = tuple(sorted(t_idx))
    if len(t_idx) <= 1 or n_max == 0:
        seq = _with_singleton_tail(space, base, [[base]])
        return GammaResult(value(seq, alpha, p), seq)

    best_val = np.inf
    best_chain = None
    for lvl1 in _set_partitions(base, max_blocks=net_budget(1)):
        if n_max == 1:
            chains = [(lvl1,)]
        else:
            refinements = [list(_set_partitions(block)) for block in lvl1]
            chains = []
            for combo in product(*refinements):
                lvl2 = tuple(cell for part in combo for cell in part)
                if len(lvl2) <= net_budget(2):
                    chains.append((lvl1, lvl2))
        for chain in chains:
            worst = 0.0
            for x in base:
                tot = (w[0] * dm(base)) ** p
                for n, level in enumerate(chain, start=1):
                    cell = next(c for c in level if x in c)
                    tot += (w[n] * dm(cell)) ** p
                worst = max(worst, tot)
            val = worst ** (1.0 / p)
            if val < best_val:
                best_val = val
                best_chain = chain
    levels = [[base]] + [list(l) for l in best_chain]
    seq = _with_singleton_tail(space, base, levels)
    return GammaResult(best_val, seq)


def _with_singleton_tail(space, t_idx, levels):
    kinds = ["given"] * len(levels)
    if any(len(c) > 1 for c in levels[-1]):
        n_next = len(levels)
        while partition_cap(n_next) < len(t_idx):
            levels.append(levels[-1])
            kinds.append("copy")
            n_next += 1
        levels.append([(i,) for i in t_idx])
        kinds.append("singleton")
    return AdmissibleSequence(space, t_idx, tuple(tuple(l) for l in levels), tuple(kinds))


# ---------------------------------------------------------------------------
# nets <-> partitions (the two-sided comparison of the net and partition forms)


@dataclass(frozen=True)
class ConversionResult:
    nets: tuple
    sequence: AdmissibleSequence
    net_value: float
    partition_value: float
    diagnostics: tuple = ()


def net_value(space, target: SubsetView, nets, alpha: float, p: float = 1.0) -> float:
    """sup_x [sum_n (2^(n/alpha) d(x, T_n))^p]^(1/p) over the given nets."""
    best = 0.0
    for x in target.indices:
        tot = 0.0
        for n, net in enumerate(nets):
            dx = min(space.dist[x, j] for j in net)
            tot += (2.0 ** (n / alpha) * dx) ** p
        best = max(best, tot)
    return best ** (1.0 / p)


def nets_partition_convert(
    space: FiniteMetricSpace,
    target: SubsetView,
    *,
    seq: AdmissibleSequence | None = None,
    nets=None,
    direction: str,
    alpha: float,
    p: float = 1.0,
) -> ConversionResult:
    """Convert between admissible partitions and net sequences.

    partition->nets picks the lowest-index point of each cell, so the net
    value never exceeds the partition value (termwise d(x,T_n) <= diam).
    nets->partition feeds s_n(x) = d(x,T_n) with a = 0 into the builder,
    since nets bound subset entropy numbers directly.
    """
    if direction == "partition->nets":
        if seq is None:
            raise ValueError("partition->nets needs seq")
        nets_out = tuple(tuple(sorted(cell[0] for cell in level)) for level in seq.levels)
        nv = net_value(space, target, nets_out, alpha, p)
        pv = value(seq, alpha, p)
        return ConversionResult(nets_out, seq, nv, pv)
    if direction == "nets->partition":
        if nets is None:
            raise ValueError("nets->partition needs nets")
        for n, net in enumerate(nets):
            if len(net) > net_budget(n):
                raise ValueError(f"net at level {n} exceeds the cardinality cap")
        s = np.zeros((len(nets), space.size))
        for n in range(1, len(nets)):
            for x in range(space.size):
                s[n][x] = min(space.dist[x, j] for j in nets[n])
        ctrl = ControlMatrix(s=s, a=0.0)
        res = contraction_build(space, target, ctrl, alpha)
        nv = net_value(space, target, nets, alpha, p)
        pv = value(res.sequence, alpha, p)
        return ConversionResult(tuple(tuple(n) for n in nets), res.sequence, nv, pv, tuple(map(str, res.diagnostics)))
    raise ValueError(f"unknown direction {direction!r}")


def sequence_to_json(seq: AdmissibleSequence) -> dict:
    return {"levels": [[list(cell) for cell in level] for level in seq.levels]}


def sequence_from_json(space: FiniteMetricSpace, obj: dict) -> AdmissibleSequence:
    levels = tuple(tuple(tuple(cell) for cell in level) for level in obj["levels"])
    target = tuple(sorted({i for cell in levels[0] for i in cell}))
    seq = AdmissibleSequence(space, target, levels)
    seq.validate()
    return seq
