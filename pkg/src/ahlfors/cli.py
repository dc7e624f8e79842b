"""Command-line entry point.

Exit codes: 0 success, 1 a verdict or expectation failed, 2 usage,
configuration or resource error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .dimension import ahlfors_fit, dimension_scan
from .experiment import ConfigError, ExperimentConfig, ResourceLimitError, emit_report, load_config, run_experiment
from .fractals import generate, spec_from_dict
from .maximal import DiscreteMeasure, maximal_of_measure
from .space import distance_to_set, log_radii
from .weights import PowerDistance, ap_constant_estimate, classify_growth, gasket_with_boundary, range_sweep, weight_values

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="YAML config; flags override its keys")
    p.add_argument("--seed", type=int, help="sampler seed")
    p.add_argument("--out", type=Path, help="output file or directory")
    p.add_argument("--levels", type=_ints, help="comma-separated refinement levels")
    p.add_argument("--p", type=_floats, help="comma-separated A_p exponents")
    p.add_argument("--beta", type=_floats, help="comma-separated distance powers")
    p.add_argument("--gamma", type=_floats, help="comma-separated maximal-function powers")
    p.add_argument("--threads", type=int, help="parallel levels")
    return p


def _space_args(p: argparse.ArgumentParser):
    p.add_argument("--kind", default="gasket", help="gasket, cantor, triangle-boundary, square-grid, interval-grid")
    p.add_argument("--input", type=Path, help="point CSV (x1..xD,mass) instead of a generated set")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="ahlfors", description="Discrete Ahlfors spaces, maximal functions and A_p weights.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a point cloud CSV and metadata sidecar")
    g.add_argument("--kind", default="gasket")
    g.add_argument("--size", type=int, help="level, segments per side or grid size (default: first of --levels)")

    a = sub.add_parser("ahlfors-check", parents=[common], help="fit the Ahlfors exponent and constant")
    _space_args(a)
    a.add_argument("--rmin", type=float)
    a.add_argument("--rmax", type=float)
    a.add_argument("--expect", type=float, help="exit 1 unless the exponent is within --tol of this")
    a.add_argument("--tol", type=float, default=0.05)

    h = sub.add_parser("hausdorff-scan", parents=[common], help="greedy cover sums over an (s, rho) grid")
    _space_args(h)
    h.add_argument("--s-grid", type=_floats, default=[0.0, 0.5, 1.0, 1.5, 2.0])
    h.add_argument("--rmin", type=float)
    h.add_argument("--rmax", type=float)
    h.add_argument("--steps", type=int, default=6, help="geometric rho steps when --rmin/--rmax are given")

    m = sub.add_parser("maximal", parents=[common], help="maximal function of a measure at every atom")
    m.add_argument("--space", type=Path, required=True, help="space point CSV")
    m.add_argument("--measure", type=Path, required=True, help="measure point CSV")
    m.add_argument("--subset", type=Path, help="index, segment or point CSV for d(x, F)")
    m.add_argument("--refine", action="store_true")

    for name, helptext in (("ap-check", "sampled A_p supremum of d(x, F)^beta"),
                           ("range-sweep", "A_p verdicts across levels and exponents")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--balls", type=int, default=500)
        s.add_argument("--stable", type=float, default=1.5)
        s.add_argument("--divergent", type=float, default=2.0)
        if name == "ap-check":
            s.add_argument("--weights-out", type=Path, help="per-atom weight CSV")

    sub.add_parser("experiment", parents=[common], help="run a configured multi-level experiment")
    return parser


def _space_from(args, level_default=6):
    if args.input is not None:
        # a generator's JSON sidecar pins the cell size; otherwise it is inferred
        sidecar = Path(args.input).with_suffix(".json")
        cell = json.loads(sidecar.read_text()).get("cell") if sidecar.is_file() else None
        return io.read_space_csv(args.input, cell=cell), None
    level = args.levels[0] if args.levels else level_default
    gen = _generate(args.kind, level)
    return gen.space(), gen


def _generate(kind: str, size: int):
    key = {"gasket": "level", "cantor": "level", "triangle-boundary": "segments"}.get(kind, "n")
    try:
        return generate(spec_from_dict({"kind": kind, key: size}))
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def cmd_generate(args) -> int:
    size = args.size if args.size is not None else (args.levels[0] if args.levels else None)
    if size is None:
        raise UsageError("generate needs --size or --levels")
    gen = _generate(args.kind, size)
    out = args.out or Path(f"{gen.name}.csv")
    io.write_points_csv(out, gen.points, gen.masses)
    io.write_json(Path(out).with_suffix(".json"), gen.metadata())
    print(f"{gen.name}: {len(gen)} atoms -> {out}")
    return EXIT_OK


def cmd_ahlfors(args) -> int:
    space, _ = _space_from(args)
    lo = args.rmin if args.rmin is not None else 2 * space.cell
    hi = args.rmax if args.rmax is not None else space.diameter / 2
    est = ahlfors_fit(space, log_radii(lo, hi), seed=args.seed or 0)
    if args.out:
        io.write_table(args.out, ["center", "r", "muBall"], ([int(c), r, m] for c, r, m in est.table))
    print(f"exponent {est.exponent:.6f} constant {est.constant:.6f} radii [{lo:.6g}, {hi:.6g}] "
          f"samples {est.samples} residual {est.residual:.4g}")
    if args.expect is not None and abs(est.exponent - args.expect) > args.tol:
        return EXIT_FAIL
    return EXIT_OK


def cmd_scan(args) -> int:
    space, _ = _space_from(args)
    if args.rmin is None and args.rmax is None:
        grid = None
    else:
        lo = args.rmin if args.rmin is not None else 4 * space.cell
        hi = args.rmax if args.rmax is not None else space.diameter / 4
        grid = np.geomspace(hi, lo, args.steps)
    table = dimension_scan(space, None, args.s_grid, grid)
    if args.out:
        io.write_table(args.out, ["s", "rho", "value", "ballCount"], table.rows())
    for s, t in zip(table.s_grid, table.trend):
        print(f"s {s:g} trend {t:+.4f}")
    print(f"critical s {table.critical_s:.4f}")
    return EXIT_OK


def cmd_maximal(args) -> int:
    space = io.read_space_csv(args.space)
    pts, masses = io.read_points_csv(args.measure)
    nu = DiscreteMeasure(masses, points=pts)
    prof = maximal_of_measure(space, nu, refine=args.refine)
    n = len(space)
    if args.subset is not None:
        d = np.atleast_1d(distance_to_set(space, np.arange(n), io.read_subset(args.subset)))
    else:
        d = np.full(n, np.nan)
    rows = ([i, d[i], prof.values[i], prof.argmax_radius[i]] for i in range(n))
    header = ["atomIndex", "distToF", "M", "argmaxRadius"]
    if args.out:
        io.write_table(args.out, header, rows)
    else:
        import csv

        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows([io.fmt(v) for v in r] for r in rows)
    return EXIT_OK


def cmd_ap_check(args) -> int:
    levels = args.levels or [6]
    betas = args.beta or [0.0]
    ps = args.p or [2.0]
    seed = args.seed or 0
    rows = []
    for beta in betas:
        for p in ps:
            sups = []
            for lvl in levels:
                space, F, _ = gasket_with_boundary(lvl)
                w = weight_values(PowerDistance(F, beta), space)
                rep = ap_constant_estimate(space, w, p, args.balls, seed, weight_id=f"d^{beta:g}")
                sups.append(rep.supremum)
                rows.extend([lvl, beta, p, int(c), r, v] for c, r, v in zip(rep.centers, rep.radii, rep.products))
                if args.weights_out is not None and len(betas) == len(ps) == 1:
                    io.write_table(args.weights_out.with_name(f"{args.weights_out.stem}-{lvl}{args.weights_out.suffix}"),
                                   ["atomIndex", *[f"x{i + 1}" for i in range(space.points.shape[1])], "weight"],
                                   ([i, *space.points[i], w[i]] for i in range(len(space))))
            verdict, _ = classify_growth(sups, args.stable, args.divergent)
            print(f"p {p:g} beta {beta:g} supremumHat {sups[-1]:.6g} verdict {verdict}")
    if args.out:
        io.write_table(args.out, ["level", "beta", "p", "center", "radius", "product"], rows)
    return EXIT_OK


def cmd_range_sweep(args) -> int:
    levels = args.levels or [5, 6, 7]
    betas = args.beta or [-0.8, -0.4, 0.0, 0.4, 0.8]
    ps = args.p or [2.0]
    ok = True
    rows = []
    for p in ps:
        res = range_sweep(p, betas, levels, args.balls, args.seed or 0, args.stable, args.divergent)
        for i, beta in enumerate(res.betas):
            expected = "stable" if (beta == 0 or res.in_range[i]) else "divergent"
            good = res.verdicts[i] == expected
            ok &= good
            print(f"p {p:g} beta {beta:g} supremumHat {res.suprema[i, -1]:.6g} verdict {res.verdicts[i]}"
                  f" expected {expected}")
            rows.extend([p, beta, lvl, res.suprema[i, j], res.verdicts[i], expected]
                        for j, lvl in enumerate(res.levels))
    if args.out:
        io.write_table(args.out, ["p", "beta", "level", "supremum", "verdict", "expected"], rows)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_experiment(args) -> int:
    overrides = {"levels": args.levels, "p": args.p, "beta": args.beta, "gamma": args.gamma,
                 "threads": args.threads, "seed": args.seed, "out": str(args.out) if args.out else None}
    if args.beta is not None:
        overrides["gamma"] = []
    if args.gamma is not None:
        overrides["beta"] = []
    if args.config is not None:
        cfg = load_config(args.config, **overrides)
    else:
        if args.levels is None or args.seed is None:
            raise UsageError("experiment needs --config, or --levels and --seed")
        cfg = ExperimentConfig.from_dict({k: v for k, v in overrides.items() if v is not None})
    report = run_experiment(cfg)
    emit_report(report, cfg.out or ".")
    for v in report.verdicts:
        print(f"{cfg.mode} {v['value']:g} p {v['p']:g}: {v['verdict']} (expected {v['expected']})")
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "generate": cmd_generate,
    "ahlfors-check": cmd_ahlfors,
    "hausdorff-scan": cmd_scan,
    "maximal": cmd_maximal,
    "ap-check": cmd_ap_check,
    "range-sweep": cmd_range_sweep,
    "experiment": cmd_experiment,
}


_LIST_FLAGS = {"--levels", "--p", "--beta", "--gamma", "--s-grid"}


def _join_negative(argv: list[str]) -> list[str]:
    # "--beta -0.4,0.4" would otherwise read -0.4 as an option
    out = []
    for tok in argv:
        if out and out[-1] in _LIST_FLAGS and tok[:1] == "-" and (tok[1:2].isdigit() or tok[1:2] == "."):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, ResourceLimitError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
