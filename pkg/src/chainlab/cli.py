"""Batch experiment runner over all modules.

Subcommands load one JSON instance each, evaluate the relevant bounds, and
write a JSON or CSV report (plus rendered figures next to it). Identical
configs, seeds included, produce byte-identical delimited reports; every
stochastic value carries its standard error and sample count. Exit codes:
0 success, 1 input error (message names the field), 2 when a run finished
but a builder reported hypothesis-violation diagnostics.

CHAINLAB_THREADS caps the worker count of any internal parallelism; all
estimators reduce in fixed block order, so results do not depend on it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds, entropy, gaussian, interpolation, matrices, metric, partitions
from .report import BoundReport, report_to_json_file, reports_to_csv_rows, write_csv


class SystemExit2(Exception):
    """Input error carrying the message for exit code 1."""


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SystemExit2(f"input error: file not found: {path}")
    except json.JSONDecodeError as e:
        raise SystemExit2(f"input error: malformed JSON in {path}: {e}")


def _config_echo(args):
    cfg = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
    cfg["threads"] = os.environ.get("CHAINLAB_THREADS", "")
    return cfg


def _emit(args, reports, figure_cb=None):
    cfg = _config_echo(args)
    instance = Path(args.input).stem if getattr(args, "input", None) else "inline"
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        if args.format == "csv":
            write_csv(reports_to_csv_rows(reports, instance), out)
            cfg_path = out.with_suffix(".config.json")
            with open(cfg_path, "w") as fh:
                json.dump(cfg, fh, indent=2, sort_keys=True)
                fh.write("\n")
        else:
            report_to_json_file(reports, out, config=cfg)
        if figure_cb is not None and not args.no_figures:
            figure_cb(out.with_suffix(".png"))
    else:
        payload = {"config": cfg, "reports": [r.to_json() for r in reports]}
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    if any(r.diagnostics for r in reports):
        return 2
    return 0


def cmd_metric_check(args):
    obj = _load_json(args.input)
    try:
        space = metric.space_from_json(obj)
    except (ValueError, KeyError) as e:
        raise SystemExit2(f"input error: {e}")
    viol = metric.check_metric(space, args.kappa)
    rep = BoundReport(
        "metric_check",
        float(len(viol)),
        {"value": float(len(viol))},
        {"kappa": args.kappa},
        diagnostics=[f"violating triple {t}" for t in viol[:32]],
    )
    # a metric violation is an input property, not a builder failure: report value
    code = _emit(args, [rep], figure_cb=lambda p: _fig_heatmap(space, p))
    return 0 if code in (0, 2) else code


def _fig_heatmap(space, path):
    from .figures import save_heatmap

    save_heatmap(path, space.dist, title="distance matrix")


def cmd_entropy(args):
    obj = _load_json(args.input)
    try:
        space = metric.space_from_json(obj)
    except (ValueError, KeyError) as e:
        raise SystemExit2(f"input error: {e}")
    target = space.all_points()
    n_max = args.n_max if args.n_max is not None else bounds.default_n_max(space, target)
    method = "exact" if space.size <= entropy.EXACT_GROUND_CAP else "greedy"
    reports = []
    weighted = []
    for n in range(n_max + 1):
        res = entropy.entropy_number(space, target, n, method)
        weighted.append(2.0 ** (n / args.alpha) * res.value)
        reports.append(
            BoundReport(
                f"entropy_{n}",
                res.value,
                {"value": res.value, "weighted": weighted[-1], "net_size": float(len(res.net))},
                {"alpha": args.alpha, "n_max": n, "method": res.method},
            )
        )

    def fig(path):
        from .figures import save_decay

        save_decay(path, list(range(n_max + 1)), {"weighted e_n": weighted}, title="entropy decay")

    return _emit(args, reports, figure_cb=fig)


def cmd_gamma(args):
    obj = _load_json(args.input)
    try:
        space = metric.space_from_json(obj)
    except (ValueError, KeyError) as e:
        raise SystemExit2(f"input error: {e}")
    target = space.all_points()
    method = "exact" if space.size <= entropy.EXACT_GROUND_CAP else "greedy"
    reports = [
        bounds.classical_bounds(space, target, args.alpha, args.p, "sudakov", method=method),
        bounds.classical_bounds(space, target, args.alpha, args.p, "dudley", method=method),
        bounds.classical_bounds(space, target, args.alpha, args.p, "local_dudley", a=args.a, method=method),
    ]
    if space.size <= 6:
        g = partitions.gamma_exact(space, target, args.alpha, args.p)
        reports.append(
            BoundReport("gamma_exact", g.value, {"value": g.value}, {"alpha": args.alpha, "p": args.p})
        )

    def fig(path):
        from .figures import save_bars

        save_bars(path, [r.name for r in reports], [r.value for r in reports], title="chaining bounds")

    return _emit(args, reports, figure_cb=fig)


def cmd_interpolate(args):
    obj = _load_json(args.input)
    try:
        space = metric.space_from_json(obj)
        pen_list = obj["penalty"]
    except (ValueError, KeyError) as e:
        raise SystemExit2(f"input error: missing or bad field: {e}")
    if len(pen_list) != space.size:
        raise SystemExit2("input error: field 'penalty' length must match points")
    penalty = {i: float(v) for i, v in enumerate(pen_list) if v is not None}
    power = float(obj.get("power", args.q or 1.0))
    prob = interpolation.InterpolationProblem(space, penalty, space.all_points(), power)
    tele = interpolation.telescoping_check(prob, args.alpha, args.a)
    n_levels = tele.n_levels
    grid = interpolation.t_grid(args.a, args.alpha, n_levels)
    k_curves = {
        x: [interpolation.k_functional(prob, t, x)[0] for t in grid] for x in prob.target.indices
    }
    k_sizes = [len(interpolation.interpolation_set(prob, t)) for t in grid]
    reports = [
        BoundReport(
            "telescoping_max_ratio",
            tele.max_ratio,
            {"value": tele.max_ratio},
            {"alpha": args.alpha, "a": args.a, "q": power, "n_max": n_levels},
        )
    ]
    for n, t in enumerate(grid):
        reports.append(
            BoundReport(
                f"interpolation_set_{n}",
                float(k_sizes[n]),
                {"value": float(k_sizes[n]), "t": t},
                {"alpha": args.alpha, "a": args.a},
            )
        )

    def fig(path):
        from .figures import save_curves

        series = {f"x={x}": ys for x, ys in list(k_curves.items())[:12]}
        save_curves(path, grid, series, xlabel="t", ylabel="K(t,x)", title="K-functionals", logx=True)

    return _emit(args, reports, figure_cb=fig)


def cmd_lattice(args):
    obj = _load_json(args.input)
    try:
        space = metric.space_from_json(obj)
        gauge_spec = obj["gauge"]
    except (ValueError, KeyError) as e:
        raise SystemExit2(f"input error: missing or bad field: {e}")
    from .geometry import weighted_lq_gauge

    gauge = weighted_lq_gauge(gauge_spec["weights"], gauge_spec.get("exponent", 1.0))
    target = space.all_points()
    q = args.q or 1.0
    m_const = args.m_const or 1.0
    method = "exact" if space.size <= entropy.EXACT_GROUND_CAP else "greedy"
    if space.coords is None:
        raise SystemExit2("input error: lattice subcommand needs coordinate points")
    penalty = {i: gauge(space.coords[i]) ** q for i in range(space.size)}
    prob = interpolation.InterpolationProblem(space, penalty, target, power=1.0)
    reports = [
        bounds.classical_bounds(space, target, args.alpha, args.p, "sudakov", method=method),
        bounds.closed_form_bounds(space, target, args.alpha, "lattice", q, m_const, method=method),
        bounds.constructive_pipeline(
            space, target, args.alpha, args.p, "geom", q=q, geom_l=2.0**q, prob=prob, method=method
        ),
    ]

    def fig(path):
        from .figures import save_bars

        save_bars(path, [r.name for r in reports], [r.value for r in reports], title="lattice bounds")

    return _emit(args, reports, figure_cb=fig)


def cmd_gaussian_sandwich(args):
    obj = _load_json(args.input)
    try:
        process = gaussian.process_from_json(obj)
    except (ValueError, KeyError) as e:
        raise SystemExit2(f"input error: {e}")
    if args.seed is None:
        raise SystemExit2("input error: flag --seed is required for stochastic runs")
    cache = gaussian.BallWidthCache.build(process, args.samples, args.seed)
    space = cache.space
    target = space.all_points()
    method = "exact" if space.size <= entropy.EXACT_GROUND_CAP else "greedy"
    sud = bounds.classical_bounds(space, target, 2.0, 1.0, "sudakov", method=method)
    width = BoundReport(
        "gaussian_width",
        cache.g_total,
        {"value": cache.g_total},
        {"samples": args.samples, "seed": args.seed},
        se=cache.g_total_se,
    )
    mm = gaussian.mm_pipeline(process, a=args.a, samples=args.samples, seed=args.seed, cache=cache)
    reports = [sud, width, mm]

    def fig(path):
        from .figures import save_bars

        save_bars(
            path,
            [r.name for r in reports],
            [r.value for r in reports],
            errors=[r.se or 0 for r in reports],
            title="width sandwich",
        )

    return _emit(args, reports, figure_cb=fig)


def cmd_matrix_bounds(args):
    obj = _load_json(args.input)
    try:
        ens = matrices.ensemble_from_json(obj)
    except (ValueError, KeyError) as e:
        raise SystemExit2(f"input error: {e}")
    if args.seed is None:
        raise SystemExit2("input error: flag --seed is required for stochastic runs")
    reports = [
        matrices.mc_spectral_norm(ens, args.samples, args.seed),
        matrices.matrix_closed_bounds(ens, "rudelson"),
    ]
    if ens.rank_one:
        reports.append(matrices.matrix_closed_bounds(ens, "dimension_free"))
    if ens.psd:
        reports.append(matrices.matrix_closed_bounds(ens, "supernck", args.samples, args.seed))
        reports.append(matrices.gordon_bound(ens, eta=args.eta, seed=args.seed))
    if ens.variance_matrix is not None:
        reports.append(matrices.row_norm_lower(ens.variance_matrix, args.samples, args.seed))

    def fig(path):
        from .figures import save_bars

        save_bars(
            path,
            [r.name for r in reports],
            [r.value for r in reports],
            errors=[r.se or 0 for r in reports],
            title="matrix norm bounds",
        )

    return _emit(args, reports, figure_cb=fig)


def cmd_ellipsoid_demo(args):
    d = args.d
    t = args.t
    x = np.ones(d)
    pi, weights = interpolation.ellipsoid_closed_form(t, x)
    # independent oracle: per-coordinate golden-section search on the quadratic
    oracle = np.array([_min_quadratic_1d(t, k + 1, x[k]) for k in range(d)])
    dev = float(np.abs(pi - oracle).max())
    reports = [
        BoundReport(
            "ellipsoid_pi",
            float(np.linalg.norm(pi)),
            {
                "value": float(np.linalg.norm(pi)),
                **{f"pi_{k+1}": float(pi[k]) for k in range(d)},
                "oracle_max_dev": dev,
            },
            {"a": t},
        )
    ]
    if not np.isinf(weights).any():
        reports.append(
            BoundReport(
                "ellipsoid_weights",
                float(weights.max()),
                {"value": float(weights.max()), **{f"w_{k+1}": float(weights[k]) for k in range(d)}},
                {"a": t},
            )
        )

    def fig(path):
        from .figures import save_curves

        ks = list(range(1, d + 1))
        save_curves(
            path,
            ks,
            {"shrink factor t^2/(t^2+k)": [t**2 / (t**2 + k) for k in ks]},
            xlabel="coordinate k",
            ylabel="factor",
            title=f"ellipsoid projection at t={t}",
        )

    return _emit(args, reports, figure_cb=fig)


def _min_quadratic_1d(t, k, xk, iters=200):
    # minimize k*y^2 + t^2*(x-y)^2 by ternary search (oracle for the closed form)
    lo, hi = min(0.0, xk), max(0.0, xk)
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        f1 = k * m1**2 + t**2 * (xk - m1) ** 2
        f2 = k * m2**2 + t**2 * (xk - m2) ** 2
        if f1 <= f2:
            hi = m2
        else:
            lo = m1
    return (lo + hi) / 2


def build_parser():
    ap = argparse.ArgumentParser(prog="chainlab", description=__doc__)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", required=True, help="instance JSON path")
        p.add_argument("--out", default=None, help="output report path")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--alpha", type=float, default=2.0)
        p.add_argument("--p", type=float, default=1.0)
        p.add_argument("--q", type=float, default=None)
        p.add_argument("--a", type=float, default=0.5)
        p.add_argument("--eta", type=float, default=0.25)
        p.add_argument("--m-const", dest="m_const", type=float, default=None)
        p.add_argument("--samples", type=int, default=2000)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n-max", dest="n_max", type=int, default=None)
        p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("metric-check", help="triangle-inequality audit of a point set")
    common(p)
    p.add_argument("--kappa", type=float, default=1.0)
    p.set_defaults(func=cmd_metric_check)

    p = sub.add_parser("entropy", help="entropy-number profile of a point set")
    common(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("gamma", help="sudakov/dudley/exact chaining functional")
    common(p)
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("interpolate", help="K-functional and telescoping report")
    common(p)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("lattice", help="lattice closed form vs constructive witness")
    common(p)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("gaussian-sandwich", help="width vs sudakov vs witness value")
    common(p)
    p.set_defaults(func=cmd_gaussian_sandwich)

    p = sub.add_parser("matrix-bounds", help="spectral norm bounds for an ensemble")
    common(p)
    p.set_defaults(func=cmd_matrix_bounds)

    p = sub.add_parser("ellipsoid-demo", help="closed-form shrink map table")
    common(p, needs_input=False)
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--t", type=float, default=1.0)
    p.set_defaults(func=cmd_ellipsoid_demo)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        code = args.func(args)
    except SystemExit2 as e:
        print(str(e), file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
