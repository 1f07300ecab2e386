"""Command-line interface.

Subcommands: gen, solve, bench, marginal, concentration. Experiment commands
accept --out and write JSON + CSV plus SVG figures there; `bench --check`
exits with status 2 if any emitted row fails re-validation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import bench, plots
from .clp import fractional_solution_to_obj, solve_clp
from .model import (
    Vmk2Error,
    load_instance,
    save_instance,
    save_solution,
)
from .solvers import (
    HybridParams,
    solve_exact,
    solve_hybrid,
    solve_reduction,
    solve_sampling_baseline,
    solve_via_mck,
)

ALGOS = ("hybrid", "baseline", "reduction", "exact", "mck")


def _parse_params(pairs: list[str]) -> tuple[tuple[str, float], ...]:
    out = []
    for pair in pairs:
        key, _, value = pair.partition("=")
        out.append((key, float(value)))
    return tuple(out)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen(args) -> int:
    spec = bench.GeneratorSpec(
        family=args.family, n=args.n, m=args.m, seed=args.seed, params=_parse_params(args.param)
    )
    inst = bench.generate(spec)
    save_instance(inst, args.output)
    print(f"wrote {args.output}: n={inst.n} m={inst.m} total profit {inst.total_profit():.6g}")
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance, m=args.m)
    if args.algo == "hybrid":
        params = HybridParams(eps=args.eps, seed=args.seed, ell_override=args.ell, mk_mode=args.mk_mode)
        sol, report = solve_hybrid(inst, params)
    elif args.algo == "baseline":
        sol, report = solve_sampling_baseline(inst, args.eps, args.seed)
    elif args.algo == "reduction":
        sol, report = solve_reduction(inst, args.eps, mk_mode=args.mk_mode)
    elif args.algo == "exact":
        sol, profit, complete = solve_exact(inst)
        from .model import SolveReport

        report = SolveReport(
            algorithm="exact", seed=args.seed, profit=profit, converged=complete,
            bins_used=sol.bins_used(), n=inst.n, m=inst.m,
        )
    else:
        sol, report = solve_via_mck(inst)
    if args.dump_lp:
        fs = solve_clp(inst, args.eps)
        Path(args.dump_lp).write_text(json.dumps(fractional_solution_to_obj(fs), indent=1) + "\n")
    if args.out:
        out = _out_dir(args)
        save_solution(sol, out / "solution.json")
        bench.write_rows_csv([report], out / "rows.csv")
        (out / "report.json").write_text(json.dumps(asdict(report), indent=1) + "\n")
    print(
        f"{report.algorithm}: profit {report.profit:.6g}"
        + (f", LP bound {report.lp_bound:.6g}" if report.lp_bound is not None else "")
        + f", bins used {report.bins_used}, {report.wall_ms:.1f} ms"
    )
    return 0


def _suite(args) -> list[bench.GeneratorSpec]:
    return [
        bench.GeneratorSpec(
            family=args.family, n=args.n, m=args.m, seed=args.seed + k, params=_parse_params(args.param)
        )
        for k in range(args.instances)
    ]


def cmd_bench(args) -> int:
    suite = _suite(args)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for algo in algos:
        if algo not in ALGOS:
            raise Vmk2Error(f"unknown algorithm {algo!r}; expected one of {ALGOS}")
    result = bench.run_ratio_bench(
        suite, algos, args.trials, eps=args.eps, mk_mode=args.mk_mode,
        want_exact=not args.no_exact, out_dir=args.out,
    )
    print(json.dumps(result.aggregates, indent=1))
    if args.check:
        instances = [bench.generate(spec) for spec in suite]
        per_row = []
        for k, spec in enumerate(suite):
            per_row.extend([instances[k]] * (len(algos) * args.trials))
        failures = bench.verify_rows(result.rows, result.solutions, per_row)
        for failure in failures:
            print(f"CHECK FAILED: {failure}", file=sys.stderr)
        if failures:
            return 2
        print(f"check ok: {len(result.rows)} rows re-validated")
    return 0


def cmd_marginal(args) -> int:
    inst = load_instance(args.instance, m=args.m)
    curve = bench.run_marginal_curve(inst, args.trials, args.seed)
    out = _out_dir(args)
    (out / "marginal.json").write_text(json.dumps(curve, indent=1) + "\n")
    with (out / "marginal.csv").open("w") as fh:
        fh.write("j,q_hat,stderr,overlay\n")
        for row in curve:
            fh.write(f"{row['j']},{row['q_hat']!r},{row['stderr']!r},{row['overlay']!r}\n")
    plots.plot_marginal_curve(curve, out / "marginal.svg")
    print(f"wrote marginal curve ({len(curve)} points) to {out}")
    return 0


def cmd_concentration(args) -> int:
    inst = load_instance(args.instance, m=args.m)
    fs = solve_clp(inst, 1e-6)
    reports = [
        bench.run_concentration(inst, args.ell, args.trials, t, seed=args.seed, lp=fs)
        for t in args.t
    ]
    out = _out_dir(args)
    (out / "concentration.json").write_text(
        json.dumps([asdict(r) for r in reports], indent=1) + "\n"
    )
    with (out / "concentration.csv").open("w") as fh:
        fh.write("t,ell,trials,scale,mean_profit,threshold,bound,empirical\n")
        for r in reports:
            fh.write(
                f"{r.t!r},{r.ell},{r.trials},{r.scale!r},{r.mean_profit!r},"
                f"{r.threshold!r},{r.bound!r},{r.empirical!r}\n"
            )
    plots.plot_concentration(reports, out / "concentration.svg")
    for r in reports:
        print(f"t={r.t:.4g}: empirical {r.empirical:.4g} vs bound {r.bound:.4g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vmk2", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random instance file")
    gen.add_argument("--family", default="uniform", choices=bench.FAMILIES)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    gen.add_argument("--output", "-o", required=True)
    gen.set_defaults(func=cmd_gen)

    solve = sub.add_parser("solve", help="solve an instance file")
    solve.add_argument("instance")
    solve.add_argument("--algo", default="hybrid", choices=ALGOS)
    solve.add_argument("--eps", type=float, default=0.1)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--ell", type=int, default=None, help="override the sampled bin count")
    solve.add_argument("--mk-mode", default="auto", choices=("exact", "heuristic", "auto"))
    solve.add_argument("--m", type=int, default=None, help="bin count for CSV instances")
    solve.add_argument("--dump-lp", default=None, metavar="PATH")
    solve.add_argument("--out", default=None, metavar="DIR")
    solve.set_defaults(func=cmd_solve)

    bench_cmd = sub.add_parser("bench", help="ratio benchmark over a generated suite")
    bench_cmd.add_argument("--family", default="uniform", choices=bench.FAMILIES)
    bench_cmd.add_argument("--n", type=int, default=10)
    bench_cmd.add_argument("--m", type=int, default=2)
    bench_cmd.add_argument("--instances", type=int, default=5)
    bench_cmd.add_argument("--seed", type=int, default=0)
    bench_cmd.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    bench_cmd.add_argument("--trials", type=int, default=3)
    bench_cmd.add_argument("--algos", default="hybrid,baseline,reduction")
    bench_cmd.add_argument("--eps", type=float, default=0.1)
    bench_cmd.add_argument("--mk-mode", default="auto", choices=("exact", "heuristic", "auto"))
    bench_cmd.add_argument("--no-exact", action="store_true", help="skip the exact oracle")
    bench_cmd.add_argument("--check", action="store_true", help="re-validate emitted rows; exit 2 on failure")
    bench_cmd.add_argument("--out", default="bench-out", metavar="DIR")
    bench_cmd.set_defaults(func=cmd_bench)

    marginal = sub.add_parser("marginal", help="marginal-profit curve of successive draws")
    marginal.add_argument("instance")
    marginal.add_argument("--trials", type=int, default=200)
    marginal.add_argument("--seed", type=int, default=0)
    marginal.add_argument("--m", type=int, default=None)
    marginal.add_argument("--out", default="marginal-out", metavar="DIR")
    marginal.set_defaults(func=cmd_marginal)

    conc = sub.add_parser("concentration", help="lower-tail frequency vs analytic bound")
    conc.add_argument("instance")
    conc.add_argument("--ell", type=int, required=True)
    conc.add_argument("--trials", type=int, default=1000)
    conc.add_argument("--t", type=float, action="append", required=True)
    conc.add_argument("--seed", type=int, default=0)
    conc.add_argument("--m", type=int, default=None)
    conc.add_argument("--out", default="concentration-out", metavar="DIR")
    conc.set_defaults(func=cmd_concentration)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Vmk2Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
