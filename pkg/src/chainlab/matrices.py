"""Structured Gaussian matrices X = sum_k g_k A_k and their norm bounds.

The coefficient matrices induce three geometries on vectors: the anchored
norm ||v||_z, the quartic norm |||v|||, and the process distance d(v, w),
which (because each A_k is symmetric) is the Euclidean distance between the
quadratic-form profiles of v and w. The regularized distance adds the
squared quartic norm and satisfies a 2-relaxed triangle inequality plus a
midpoint halving property, which is what lets the chaining machinery run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metric import FiniteMetricSpace
from .report import BoundReport

BLOCK = 4096
PSD_FLOOR = -1e-8
RANK_ONE_TOL = 1e-10


@dataclass(frozen=True)
class CoefficientEnsemble:
    """Validated symmetric coefficient matrices with structure flags.

    ordering is the permutation applied before k-dependent log weights; the
    default sorts by decreasing spectral norm, which minimizes the weighted
    bound. rank-one generators are kept when the ensemble was built from
    vectors.
    """

    matrices: np.ndarray
    psd: bool = False
    rank_one: bool = False
    generators: np.ndarray | None = None
    ordering: tuple = ()
    variance_matrix: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.matrices, dtype=float)
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise ValueError("matrices must be a (m, d, d) stack")
        for k in range(a.shape[0]):
            if not np.array_equal(a[k], a[k].T):
                raise ValueError(f"matrix {k} is not symmetric")
        object.__setattr__(self, "matrices", a)
        if not self.ordering:
            norms = [float(np.linalg.norm(a[k], 2)) for k in range(a.shape[0])]
            order = tuple(int(i) for i in np.argsort([-n for n in norms], kind="stable"))
            object.__setattr__(self, "ordering", order)

    @property
    def m(self) -> int:
        return self.matrices.shape[0]

    @property
    def d(self) -> int:
        return self.matrices.shape[1]


def build_ensemble(
    matrices=None, rank_one=None, independent_entry=None
) -> CoefficientEnsemble:
    """Build and validate an ensemble from one of the three input forms.

    independent_entry expands a symmetric nonnegative entry-deviation matrix
    b into the d(d+1)/2 coefficient matrices of the independent-entry model:
    b_ij (e_i e_j^T + e_j e_i^T) off the diagonal and b_ii e_i e_i^T on it,
    so that the sampled entry deviations match b exactly.
    """
    given = [x is not None for x in (matrices, rank_one, independent_entry)]
    if sum(given) != 1:
        raise ValueError("exactly one of matrices/rank_one/independent_entry required")
    if matrices is not None:
        a = np.asarray(matrices, dtype=float)
        psd = all(np.linalg.eigvalsh(a[k]).min() >= PSD_FLOOR for k in range(a.shape[0]))
        return CoefficientEnsemble(a, psd=psd)
    if rank_one is not None:
        x = np.asarray(rank_one, dtype=float)
        if x.ndim != 2:
            raise ValueError("rank_one must be a list of vectors")
        a = np.einsum("ki,kj->kij", x, x)
        for k in range(a.shape[0]):
            if np.linalg.norm(a[k] - np.outer(x[k], x[k])) > RANK_ONE_TOL:
                raise ValueError("rank-one reconstruction failed")
        return CoefficientEnsemble(a, psd=True, rank_one=True, generators=x)
    b = np.asarray(independent_entry, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("independent_entry matrix must be square")
    if not np.array_equal(b, b.T):
        raise ValueError("independent_entry matrix must be symmetric")
    if (b < 0).any():
        raise ValueError("independent_entry matrix must be nonnegative")
    d = b.shape[0]
    mats = []
    for i in range(d):
        for j in range(i + 1):
            a_ij = np.zeros((d, d))
            if i == j:
                a_ij[i, i] = b[i, i]
            else:
                a_ij[i, j] = a_ij[j, i] = b[i, j]
            mats.append(a_ij)
    return CoefficientEnsemble(np.array(mats), variance_matrix=b)


def ensemble_from_json(obj: dict) -> CoefficientEnsemble:
    if "matrices" in obj:
        return build_ensemble(matrices=obj["matrices"])
    if "rank_one" in obj:
        return build_ensemble(rank_one=obj["rank_one"])
    if "independent_entry" in obj:
        return build_ensemble(independent_entry=obj["independent_entry"])
    raise ValueError("ensemble JSON missing field 'matrices'/'rank_one'/'independent_entry'")


def _gaussian_blocks(samples: int, width: int, seed: int):
    for b in range(0, samples, BLOCK):
        m = min(BLOCK, samples - b)
        rng = np.random.default_rng(np.random.SeedSequence([seed, b // BLOCK]))
        yield rng.standard_normal((m, width))


def sample_matrices(ensemble: CoefficientEnsemble, samples: int, seed: int):
    """Yield sampled X = sum_k g_k A_k draw by draw (block-seeded)."""
    for z in _gaussian_blocks(samples, ensemble.m, seed):
        for g in z:
            yield np.tensordot(g, ensemble.matrices, axes=1)


def mc_spectral_norm(
    ensemble: CoefficientEnsemble, samples: int = 2000, seed: int = 0
) -> BoundReport:
    """Monte Carlo estimate of the expected spectral norm of X."""
    if samples < 500:
        raise ValueError("samples must be >= 500")
    vals = np.array([float(np.abs(np.linalg.eigvalsh(x)).max()) for x in sample_matrices(ensemble, samples, seed)])
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(samples))
    return BoundReport(
        "mc_norm", est, {"value": est}, {"samples": samples, "seed": seed}, se=se
    )


def mixed_norms(ensemble: CoefficientEnsemble, v, z=None, w=None) -> dict:
    """The four coefficient geometries: ||v||_z, |||v|||, d(v,w), dtilde(v,w)."""
    a = ensemble.matrices
    v = np.asarray(v, dtype=float)
    if v.shape[0] != ensemble.d:
        raise ValueError("dimension mismatch")
    out = {}
    av = a @ v
    out["quartic"] = float((np.einsum("ki,i->k", av, v) ** 2).sum() ** 0.25)
    if z is not None:
        z = np.asarray(z, dtype=float)
        if z.shape[0] != ensemble.d:
            raise ValueError("dimension mismatch")
        out["anchored"] = float(np.sqrt((np.einsum("ki,i->k", av, z) ** 2).sum()))
    if w is not None:
        w = np.asarray(w, dtype=float)
        if w.shape[0] != ensemble.d:
            raise ValueError("dimension mismatch")
        aw_diff = a @ (v - w)
        d_vw = float(np.sqrt((np.einsum("ki,i->k", aw_diff, v + w) ** 2).sum()))
        quart_diff = float((np.einsum("ki,i->k", aw_diff, v - w) ** 2).sum() ** 0.25)
        out["process_distance"] = d_vw
        out["quasi_distance"] = d_vw + quart_diff**2
    return out


def quartic_norm(ensemble: CoefficientEnsemble, v) -> float:
    return mixed_norms(ensemble, v)["quartic"]


def quasi_distance(ensemble: CoefficientEnsemble, v, w) -> float:
    return mixed_norms(ensemble, v, w=w)["quasi_distance"]


def quasi_metric_space(ensemble: CoefficientEnsemble, points) -> FiniteMetricSpace:
    """Finite space of the given vectors under the regularized distance (kappa=2)."""
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = quasi_distance(ensemble, pts[i], pts[j])
    return FiniteMetricSpace(dist=d, coords=pts, quasi_constant=2.0)


def sq_sum_norm(ensemble: CoefficientEnsemble) -> float:
    """Spectral norm of sum_k A_k^2."""
    s = np.einsum("kij,kjl->il", ensemble.matrices, ensemble.matrices)
    return float(np.linalg.norm(s, 2))


def anchored_sup_norm(ensemble: CoefficientEnsemble, g) -> float:
    """sup over unit z of ||g||_z: top eigenvalue root of sum_k (A_k g)(A_k g)^T."""
    ag = ensemble.matrices @ np.asarray(g, dtype=float)
    gram = ag.T @ ag  # sum_k (A_k g)(A_k g)^T
    return float(np.sqrt(np.linalg.eigvalsh(gram).max()))


def matrix_closed_bounds(
    ensemble: CoefficientEnsemble,
    kind: str,
    samples: int = 2000,
    seed: int = 0,
) -> BoundReport:
    """Rudelson-style, dimension-free, or width-plus-entropy spectral bounds.

    rudelson: ||sum A_k^2||^(1/2) sqrt(log(m+1)).
    dimension_free (rank one only): ||sum A_k^2 log(k+1)||^(1/2) with the
    ensemble's ordering supplying the log weights.
    supernck (psd only): ||sum A_k^2||^(1/2) plus the Monte Carlo mean of
    sup_z ||g||_z, the computable surrogate for the quartic-ball entropy sup.
    """
    if kind == "rudelson":
        base = sq_sum_norm(ensemble) ** 0.5
        lf = math.sqrt(math.log(ensemble.m + 1))
        return BoundReport("rudelson", base * lf, {"base_norm": base, "log_factor": lf}, {})
    if kind == "dimension_free":
        if not ensemble.rank_one:
            raise ValueError("dimension_free needs a rank-one ensemble")
        a = ensemble.matrices
        weighted = np.zeros((ensemble.d, ensemble.d))
        for pos, k in enumerate(ensemble.ordering, start=1):
            weighted += a[k] @ a[k] * math.log(pos + 1)
        val = float(np.linalg.norm(weighted, 2)) ** 0.5
        return BoundReport(
            "dimension_free",
            val,
            {"weighted_norm": val},
            {"ordering": list(ensemble.ordering)},
        )
    if kind == "supernck":
        if not ensemble.psd:
            raise ValueError("supernck needs a psd ensemble")
        first = sq_sum_norm(ensemble) ** 0.5
        vals = []
        for z in _gaussian_blocks(samples, ensemble.d, seed):
            for g in z:
                vals.append(anchored_sup_norm(ensemble, g))
        vals = np.array(vals)
        second = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
        return BoundReport(
            "supernck",
            first + second,
            {"first": first, "second": second},
            {"samples": samples, "seed": seed},
            se=se,
        )
    raise ValueError(f"unknown kind {kind!r}")


def _sphere_points(d: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((count, d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


def gordon_bound(
    ensemble: CoefficientEnsemble,
    t_points=None,
    eta: float = 0.25,
    samples: int = 200,
    seed: int = 0,
    n_max: int = 2,
    sphere_points: int = 200,
) -> BoundReport:
    """Two-term quadratic-form bound for psd ensembles over T inside the ball.

    First term: eta^(-1/2) [sup_v <v, (sum A_k^2) v>]^(1/2) via the exact
    trace identity for the anchored-norm ellipsoid entropies. Second term:
    the squared sup_n 2^(n/4) greedy entropy of a seeded ball discretization
    under the quartic norm (an upper-bound proxy when T is a strict subset).
    """
    if not ensemble.psd:
        raise ValueError("gordon_bound needs a psd ensemble")
    from .entropy import entropy_number
    from .metric import build_space

    sq = np.einsum("kij,kjl->il", ensemble.matrices, ensemble.matrices)
    if t_points is None:
        trace_sup = float(np.linalg.eigvalsh(sq).max())
    else:
        pts = np.asarray(t_points, dtype=float)
        trace_sup = float(max(p @ sq @ p for p in pts))
    first = eta ** (-0.5) * trace_sup**0.5

    disc = _sphere_points(ensemble.d, sphere_points, seed)
    disc = np.vstack([disc, np.zeros(ensemble.d)])
    n_pts = disc.shape[0]
    qd = np.zeros((n_pts, n_pts))
    for i in range(n_pts):
        for j in range(i + 1, n_pts):
            qd[i, j] = qd[j, i] = quartic_norm(ensemble, disc[i] - disc[j])
    space = FiniteMetricSpace(dist=qd, coords=disc)
    sup_ent = 0.0
    for n in range(n_max + 1):
        e = entropy_number(space, space.all_points(), n, "greedy").value
        sup_ent = max(sup_ent, 2.0 ** (n / 4.0) * e)
    second = sup_ent**2
    return BoundReport(
        "gordon",
        first + second,
        {"first": first, "second": second, "trace_sup": trace_sup, "entropy_sup": sup_ent},
        {"eta": eta, "n_max": n_max, "seed": seed, "method": "trace+covering"},
    )


def latala_variants(
    ensemble: CoefficientEnsemble | None,
    kind: str,
    v,
    variance_matrix=None,
) -> float:
    """Quartic-norm variants from the independent-entry discussion.

    abs_variant replaces each A_k by its operator absolute value; b_variant
    uses the entry deviations directly and needs the squared-deviation matrix
    to be positive semidefinite.
    """
    v = np.asarray(v, dtype=float)
    if kind == "abs_variant":
        if ensemble is None:
            raise ValueError("abs_variant needs an ensemble")
        tot = 0.0
        for k in range(ensemble.m):
            w, vecs = np.linalg.eigh(ensemble.matrices[k])
            abs_a = (vecs * np.abs(w)) @ vecs.T
            tot += float(v @ abs_a @ v) ** 2
        return tot**0.25
    if kind == "b_variant":
        if variance_matrix is None:
            raise ValueError("b_variant needs the entry-deviation matrix")
        b = np.asarray(variance_matrix, dtype=float)
        b_sq = b * b
        if np.linalg.eigvalsh(b_sq).min() < PSD_FLOOR:
            raise ValueError("b_variant needs (b_ij^2) positive semidefinite")
        v_sq = v * v
        return float(v_sq @ b_sq @ v_sq) ** 0.25
    raise ValueError(f"unknown kind {kind!r}")


def row_norm_lower(variance_matrix, samples: int = 2000, seed: int = 0) -> BoundReport:
    """Monte Carlo mean of the max Euclidean row norm in the independent-entry model."""
    ens = build_ensemble(independent_entry=variance_matrix)
    vals = np.array([float(np.sqrt((x * x).sum(axis=1)).max()) for x in sample_matrices(ens, samples, seed)])
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(samples))
    return BoundReport("row_norm_lower", est, {"value": est}, {"samples": samples, "seed": seed}, se=se)


def spectral_vs_rows_samples(variance_matrix, samples: int = 2000, seed: int = 0):
    """Per-sample (spectral norm, max row norm) pairs with shared draws.

    The spectral norm dominates the best row deterministically, so the
    first column is at least the second, sample by sample.
    """
    ens = build_ensemble(independent_entry=variance_matrix)
    out = np.zeros((samples, 2))
    for i, x in enumerate(sample_matrices(ens, samples, seed)):
        out[i, 0] = float(np.abs(np.linalg.eigvalsh(x)).max())
        out[i, 1] = float(np.sqrt((x * x).sum(axis=1)).max())
    return out
