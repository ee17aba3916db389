"""Command-line interface: exact oracles, the gap-law recursion, the
analytic limit laws, and the experiment suite."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .experiments import (ExperimentConfig, _parse_init_spec, run_experiment,
                          write_csv)
from .hcp import EpochSchedule
from .limits import LimitLawParams, density_p, lt_x_inf, lt_y_inf
from .oracle import (hitting_cdf_exact, lambda_exact, reachable_sweep,
                     spectral_gap_exact, survival_probability_exact)
from .renewal import delta, iterate_epochs, make_initial


def _print_json(payload: dict):
    print(json.dumps(payload, sort_keys=True, default=float))


def _cmd_oracle(args) -> int:
    if args.kind == "gap":
        value = spectral_gap_exact(args.L, args.q)
        _print_json({"value": value, "method": "dense-spectral",
                     "error_bound": 1e-10})
    elif args.kind == "survival":
        value = survival_probability_exact(args.d, args.q, args.T)
        _print_json({"value": value, "method": "uniformized",
                     "error_bound": 1e-12})
    elif args.kind == "rate":
        N = max(args.N, args.n, 1)
        sched = (EpochSchedule(args.q, N) if args.epsilon is None
                 else EpochSchedule(args.q, N, args.epsilon))
        value = lambda_exact(args.n, args.d, args.q, sched)
        _print_json({"value": value, "method": "exact",
                     "error_bound": 1e-10,
                     "T_n": float(sched.T[args.n])})
    elif args.kind == "cdf":
        cdf, gamma = hitting_cdf_exact(args.d, args.q,
                                       np.array([args.t]))
        _print_json({"value": float(cdf[0]), "method": "uniformized",
                     "error_bound": 1e-12, "gamma": gamma})
    elif args.kind == "reach":
        res = reachable_sweep(args.L, args.n)
        _print_json({"value": res.ell, "method": "breadth-first-search",
                     "error_bound": 0, "reached": res.reached})
    return 0


def _cmd_recursion(args) -> int:
    kind, param = _parse_init_spec(args.init)
    x_max = args.x_max if args.x_max else max(256, 2 ** max(args.epochs, 2))
    if kind == "deterministic":
        mu0 = delta(int(param), x_max)
    else:
        mu0 = make_initial(kind, param, x_max)
    nu0 = delta(0, x_max)
    adapt = kind != "heavy_tail"
    res = iterate_epochs(mu0, nu0, args.epochs, x_max=x_max, adapt=adapt)
    n = args.epochs
    payload = {
        "epochs": n,
        "x_max": res.x_max,
        "mu": res.mu(n).to_sparse(args.tol),
        "nu": res.nu(n).to_sparse(args.tol),
        "nu_at_zero": res.nu_at_zero,
        "mass_defects": res.defects,
    }
    text = json.dumps(payload, sort_keys=True, default=float)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_limits(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = LimitLawParams(c0=args.c0, k_max=args.k_max, dx=args.dx,
                            x_hi=args.x_hi)
    res = density_p(params)
    density_path = out / "limits_density.csv"
    write_csv(density_path, ["x", "p"], zip(res.xs, res.p))
    s = np.geomspace(0.05, 5.0, 41)
    lt_path = out / "limits_lt.csv"
    write_csv(lt_path, ["s", "lt_x", "lt_y"],
              zip(s, lt_x_inf(s, args.c0), lt_y_inf(s, args.c0)))
    print(f"wrote {density_path}")
    print(f"wrote {lt_path}")
    if res.truncation_warning:
        print("warning: density series truncation above 1e-8")
    return 0


def _cmd_experiment(args) -> int:
    q_values = [float(q) for spec in args.q for q in spec.split(",")]
    for beta in args.beta:
        q_values.append(math.exp(-beta) / (1.0 + math.exp(-beta)))
    cfg = ExperimentConfig(
        experiment=args.name,
        q_values=tuple(q_values) if q_values else (0.1,),
        N=args.N,
        init=args.init,
        L=args.L,
        samples=args.samples,
        probe_points=args.probes,
        k=args.k,
        seed=args.seed,
        threads=args.threads,
        out=args.out,
        epsilon=args.epsilon,
        rate_provenance=args.rate_provenance,
    )
    report = run_experiment(cfg)
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} {check['name']}")
    print(f"passed: {report['passed']}")
    print(f"outputs in {cfg.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eastcoal",
        description="East-model simulation, hierarchical coalescence, "
                    "and exact numerics")
    sub = parser.add_subparsers(dest="command", required=True)

    oracle = sub.add_parser("oracle", help="exact reference quantities")
    oracle.add_argument("kind",
                        choices=["gap", "survival", "rate", "cdf", "reach"])
    oracle.add_argument("--L", type=int, default=4)
    oracle.add_argument("--q", type=float, default=0.1)
    oracle.add_argument("--n", type=int, default=1)
    oracle.add_argument("--d", type=int, default=2)
    oracle.add_argument("--t", type=float, default=1.0)
    oracle.add_argument("--T", type=float, default=1.0)
    oracle.add_argument("--N", type=int, default=1)
    oracle.add_argument("--epsilon", type=float, default=None)
    oracle.set_defaults(func=_cmd_oracle)

    recursion = sub.add_parser("recursion",
                               help="gap-law epoch recursion")
    recursion.add_argument("--init", default="geometric:0.5")
    recursion.add_argument("--epochs", type=int, default=14)
    recursion.add_argument("--x-max", dest="x_max", type=int, default=0)
    recursion.add_argument("--tol", type=float, default=0.0,
                           help="drop sparse entries at or below this")
    recursion.add_argument("--out", default="")
    recursion.set_defaults(func=_cmd_recursion)

    limits = sub.add_parser("limits", help="analytic scaling limits")
    limits.add_argument("--c0", type=float, default=1.0)
    limits.add_argument("--k-max", dest="k_max", type=int, default=12)
    limits.add_argument("--dx", type=float, default=1e-3)
    limits.add_argument("--x-hi", dest="x_hi", type=float, default=50.0)
    limits.add_argument("--out", default=".")
    limits.set_defaults(func=_cmd_limits)

    exp = sub.add_parser("experiment", help="simulation experiments")
    exp.add_argument("name", choices=["plateau", "aging", "scaling",
                                      "tv-compare", "exp-hitting",
                                      "validate-oracles"])
    exp.add_argument("--q", action="append", default=[],
                     help="q value, repeatable or comma separated")
    exp.add_argument("--beta", action="append", type=float, default=[],
                     help="inverse temperature; adds q = e^-b/(1+e^-b)")
    exp.add_argument("--N", type=int, default=2)
    exp.add_argument("--L", type=int, default=None)
    exp.add_argument("--samples", type=int, default=1000)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--threads", type=int, default=1)
    exp.add_argument("--out", default="runs")
    exp.add_argument("--init", default="geometric:0.5")
    exp.add_argument("--k", type=int, default=1)
    exp.add_argument("--probes", type=int, default=40)
    exp.add_argument("--epsilon", type=float, default=None)
    exp.add_argument("--rate-provenance", dest="rate_provenance",
                     default="exact")
    exp.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
