"""Command-line interface.

Exit codes: 0 success, 1 tolerance failure, 2 usage or configuration
error, 3 resource budget error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, ResourceBudgetError
from .harness import ExperimentConfig, load_f_table_file, run, selftest


def _add_model_args(p, variants=("boundary", "shift", "pareto", "mma")):
    p.add_argument("--model", choices=variants, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--theta", type=float, default=None, help="Pareto exponent")
    p.add_argument("--f-table", default=None, help="JSON kernel file for mma")


def _model_spec(args) -> dict:
    spec = {"variant": args.model, "d": args.d, "alpha": args.alpha}
    if args.model == "pareto":
        if args.theta is None:
            raise ConfigError("--theta required for the pareto model", ["theta"])
        spec["theta"] = args.theta
    if args.model == "mma":
        if args.f_table:
            masses, table = load_f_table_file(args.f_table, args.d)
            spec["w_masses"] = masses
            spec["f_table"] = table
        else:
            spec["point_mass"] = True
    return spec


def _emit(result, args):
    if args.csv:
        result.write_csv(args.csv)
    if args.json:
        result.write_json(args.json)
    print(json.dumps(result.summary, indent=2, sort_keys=True, default=str))
    if result.passed is False:
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stabletree",
        description="Stable random fields on free-group Cayley trees: "
        "simulation and verification experiments.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="print ball or sphere words, one per line")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sphere", action="store_true", help="sphere C_n instead of ball E_n")

    p = sub.add_parser("verify-boundary", help="weakly wandering cover and cylinder actions")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--depth-cap", type=int, default=8)
    p.add_argument("--translate-n", type=int, default=4)

    p = sub.add_parser("verify-lemma", help="subgraph sphere-count table")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--ell-max", type=int, default=4)
    p.add_argument("--k-max", type=int, default=6)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("selftest", help="run a module oracle suite")
    p.add_argument("scope", choices=("combinatorics", "boundary", "stable", "subgraphs", "all"))

    p = sub.add_parser("simulate-maxima", help="replicated scaled partial maxima")
    _add_model_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--num-terms", type=int, default=None)
    p.add_argument("--s-grid", type=float, nargs="*", default=None)
    p.add_argument("--ks-tol", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--csv", default=None)
    p.add_argument("--json", default=None)

    p = sub.add_parser("simulate-pp", help="empirical scaled point-process atoms above delta")
    _add_model_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--num-terms", type=int, default=None)
    p.add_argument("--csv", default=None)
    p.add_argument("--json", default=None)

    p = sub.add_parser("limit", help="limit point process: constant, Laplace, or samples")
    p.add_argument("action", choices=("kx", "laplace", "sample"))
    _add_model_args(p, variants=("mma",))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, default=0, help="ball radius for the empirical side")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--mc", type=int, default=4000, help="subgraph Monte Carlo samples")
    p.add_argument("--theta-g", type=float, default=1.0, help="test function height")
    p.add_argument("--threshold", type=float, default=1.0, help="test function threshold")
    p.add_argument("--csv", default=None)
    p.add_argument("--json", default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ResourceBudgetError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3


def _dispatch(args) -> int:
    if args.command == "enumerate":
        from .free_group import enumerate_ball, enumerate_sphere, format_word

        words = enumerate_sphere(args.d, args.n) if args.sphere else enumerate_ball(args.d, args.n)
        for w in words:
            print(format_word(w))
        return 0

    if args.command == "verify-boundary":
        from .boundary import (
            CylinderSet,
            act_on_cylinder,
            disjoint_translates_report,
            verify_weakly_wandering,
        )
        from .free_group import enumerate_sphere, format_word

        rep = verify_weakly_wandering(args.d, args.depth_cap)
        trans = disjoint_translates_report(args.d, args.translate_n)
        action_table = []
        for t in enumerate_sphere(args.d, 1):
            for g in enumerate_sphere(args.d, 1):
                img = act_on_cylinder(t, CylinderSet.from_words(args.d, [g]))
                action_table.append(
                    {
                        "t": format_word(t),
                        "cylinder": format_word(g),
                        "image": [format_word(w) for w in img.words],
                        "image_measure": str(img.measure),
                    }
                )
        print(
            json.dumps(
                {
                    "weakly_wandering": rep.to_jsonable(),
                    "disjoint_translates": trans.to_jsonable(),
                    "action_table": action_table,
                },
                indent=2,
            )
        )
        return 0 if (rep.pairwise_disjoint and trans.pairwise_disjoint) else 1

    if args.command == "verify-lemma":
        from .rng import substream
        from .subgraphs import (
            count_sphere_members,
            required_steps,
            sample_ray_path,
            subgraph_sphere_count,
        )

        rows = []
        all_ok = True
        for level in range(1, args.ell_max + 1):
            for k in range(0, args.k_max + 1):
                expected = subgraph_sphere_count(level, k, args.d)
                ok = True
                for s in range(args.samples):
                    rng = substream(args.seed, "lemma", level, k, s)
                    path = sample_ray_path(
                        level, args.d, required_steps(level + k, level), rng
                    )
                    if count_sphere_members(path, level + k) != expected:
                        ok = False
                        break
                rows.append(
                    {"level": level, "k": k, "expected": expected, "all_match": ok}
                )
                all_ok &= ok
        print(json.dumps({"d": args.d, "rows": rows, "passed": all_ok}, indent=2))
        return 0 if all_ok else 1

    if args.command == "selftest":
        report = selftest(args.scope)
        print(json.dumps(report, indent=2))
        return 0 if report["passed"] else 1

    if args.command == "simulate-maxima":
        cfg = ExperimentConfig(
            kind="maxima",
            model=_model_spec(args),
            n=args.n,
            reps=args.reps,
            seed=args.seed,
            params={
                "num_terms": args.num_terms,
                "s_grid": args.s_grid,
                "workers": args.workers,
            },
            tolerances={} if args.ks_tol is None else {"ks": args.ks_tol},
        )
        return _emit(run(cfg), args)

    if args.command == "simulate-pp":
        cfg = ExperimentConfig(
            kind="pp",
            model=_model_spec(args),
            n=args.n,
            reps=args.reps,
            seed=args.seed,
            params={"delta": args.delta, "num_terms": args.num_terms},
        )
        return _emit(run(cfg), args)

    if args.command == "limit":
        kind = {"kx": "limit-kx", "laplace": "limit-laplace", "sample": "limit-sample"}[args.action]
        cfg = ExperimentConfig(
            kind=kind,
            model=_model_spec(args),
            n=args.n,
            reps=args.reps,
            seed=args.seed,
            params={
                "delta": args.delta,
                "mc_subgraphs": args.mc,
                "theta": args.theta_g,
                "threshold": args.threshold,
            },
        )
        return _emit(run(cfg), args)

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
