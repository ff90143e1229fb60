"""Command-line interface.

Exit codes: 0 success, 1 usage error (bad arguments, unreadable files,
malformed config), 2 numerical failure (solver or iteration breakdown).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .afriat import SolverError, afriat_feasible, check_garp
from .dataset import load_dataset
from .detector import (
    DetectorConfig,
    NoiseModel,
    build_cdf_L,
    detect,
    load_cdf,
    save_cdf,
    statistic_phi,
)
from .experiments import (
    ExperimentConfig,
    ResultTable,
    run_example1,
    run_example2,
    write_results,
)
from .masking import DetMaskConfig, mask_deterministic
from .radar import ConvergenceError, load_system_json, solve_are
from .rng import substream
from .spsa import SpsaConfig, mask_stochastic
from .utility import utility_by_name

USAGE_ERROR = 1
NUMERICAL_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(USAGE_ERROR)


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc


class UsageError(Exception):
    pass


def _probes_from_config(spec: dict, seed: int) -> np.ndarray:
    if "probes" in spec:
        return np.asarray(spec["probes"], dtype=float)
    try:
        k, m = int(spec["k"]), int(spec["m"])
        low, high = float(spec["probe_low"]), float(spec["probe_high"])
    except KeyError as exc:
        raise UsageError(f"config needs 'probes' or k/m/probe_low/probe_high: missing {exc}")
    return substream(seed, "cli:probes").uniform(low, high, (k, m))


def _cmd_garp(args) -> int:
    dataset = load_dataset(args.data)
    print("true" if check_garp(dataset) else "false")
    return 0


def _cmd_afriat(args) -> int:
    dataset = load_dataset(args.data)
    cert = afriat_feasible(dataset)
    if cert is None:
        print("infeasible")
        return 0
    print(f"feasible slack={cert.slack:.6g}")
    if args.verbose:
        for t in range(dataset.k):
            print(f"  t={t + 1} u={cert.u_vals[t]:.6g} lambda={cert.lambda_vals[t]:.6g}")
    if args.out:
        table = ResultTable(
            ("epoch", "u", "lambda"),
            tuple(
                (t + 1, float(cert.u_vals[t]), float(cert.lambda_vals[t]))
                for t in range(dataset.k)
            ),
        )
        write_results(table, args.out)
    return 0


def _cmd_phi(args) -> int:
    dataset = load_dataset(args.data)
    print(repr(statistic_phi(dataset)))
    return 0


def _cmd_cdf_l(args) -> int:
    dataset = load_dataset(args.data)
    noise = NoiseModel.gaussian(args.sigma2)
    cdf = build_cdf_L(dataset.probes, noise, args.n, substream(args.seed, "cli:cdf"))
    if args.out:
        save_cdf(cdf, args.out)
    if args.verbose or not args.out:
        for p in (0.8, 0.9, 0.95, 0.99):
            print(f"q{p:.2f} = {cdf.quantile(p):.6g}")
    return 0


def _cmd_detect(args) -> int:
    dataset = load_dataset(args.data)
    noise = NoiseModel.gaussian(args.sigma2)
    cdf = load_cdf(args.cdf, dataset.probes, noise)
    verdict = detect(dataset, cdf, DetectorConfig(alpha=args.alpha))
    print(verdict.value)
    return 0


def _cmd_are(args) -> int:
    system = load_system_json(args.config)
    sigma = solve_are(system)
    if args.out:
        np.savetxt(args.out, sigma, delimiter=",")
    else:
        for row in sigma:
            print(",".join(repr(float(x)) for x in row))
    return 0


def _cmd_mask_det(args) -> int:
    spec = _load_json(args.config)
    seed = args.seed if args.seed is not None else int(spec.get("seed", 0))
    probes = _probes_from_config(spec, seed)
    utility = utility_by_name(spec.get("utility", "sqrt_sum"))
    cfg = DetMaskConfig(
        epsilon=float(spec["epsilon"]),
        starts=int(spec.get("starts", 5)),
        iters=int(spec.get("iters", 4000)),
        tol=float(spec.get("tol", 1e-6)),
        seed=seed,
    )
    result = mask_deterministic(probes, utility, cfg)
    table = ResultTable(
        ("epsilon", "utility_family", "perturbation_l2", "utility_loss",
         "achieved_margin", "feasible"),
        (
            (
                cfg.epsilon,
                utility.name,
                result.perturbation,
                result.utility_loss,
                result.achieved_margin,
                result.feasible,
            ),
        ),
    )
    if args.out:
        write_results(table, args.out)
    else:
        print(",".join(table.columns))
        print(",".join(str(v) for v in table.rows[0]))
    return 0


def _cmd_mask_stoch(args) -> int:
    spec = _load_json(args.config)
    seed = args.seed if args.seed is not None else int(spec.get("seed", 0))
    probes = _probes_from_config(spec, seed)
    utility = utility_by_name(spec.get("utility", "sqrt_sum"))
    noise = NoiseModel.gaussian(float(spec.get("sigma2", 0.005)))
    cdf = build_cdf_L(
        probes, noise, int(spec.get("n_cdf", 100_000)), substream(seed, "cli:cdf")
    )
    cfg = SpsaConfig(
        lam=float(spec["lambda"]),
        alpha=float(spec.get("alpha", 0.1)),
        iters=int(spec.get("iters", 10_000)),
        replications=int(spec.get("replications", 100)),
        eta=float(spec.get("eta", 0.05)),
        eta_decay=bool(spec.get("eta_decay", True)),
        final_replications=int(spec.get("final_replications", 1000)),
        seed=seed,
    )
    result, trace = mask_stochastic(probes, utility, cfg, cdf)
    table = ResultTable(
        ("epsilon", "utility_family", "perturbation_l2", "utility_loss",
         "achieved_margin", "feasible", "lambda", "alpha", "seed"),
        (
            (
                float("nan"),
                utility.name,
                result.perturbation,
                result.utility_loss,
                result.achieved_margin,
                result.feasible,
                cfg.lam,
                cfg.alpha,
                seed,
            ),
        ),
    )
    if args.out:
        write_results(table, args.out)
    else:
        print(f"confusion={result.confusion:.4f} utility_loss={result.utility_loss:.6g}")
    trace_out = spec.get("trace_out")
    if trace_out:
        rows = tuple(
            (i, trace.cost[i], trace.confusion[i], trace.utility_loss[i],
             trace.feasibility_residual[i])
            for i in range(len(trace))
        )
        write_results(
            ResultTable(
                ("iter", "cost", "confusion", "utility_loss", "feasibility_residual"),
                rows,
            ),
            trace_out,
        )
    return 0


def _experiment_config(args, which: str) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_json(Path(args.config).read_text())
        if cfg.experiment != which:
            raise UsageError(f"config is for {cfg.experiment!r}, expected {which!r}")
        if args.seed is not None:
            cfg = ExperimentConfig.from_json(
                json.dumps({**json.loads(cfg.to_json()), "seed": args.seed})
            )
        return cfg
    seed = args.seed if args.seed is not None else 0
    maker = ExperimentConfig.example1 if which == "ex1" else ExperimentConfig.example2
    return maker(seed=seed)


def _cmd_ex1(args) -> int:
    cfg = _experiment_config(args, "ex1")
    table = run_example1(cfg)
    if args.out:
        write_results(table, args.out)
    if args.verbose or not args.out:
        print(",".join(table.columns))
        for row in table.rows:
            print(",".join(str(v) for v in row))
    return 0


def _cmd_ex2(args) -> int:
    cfg = _experiment_config(args, "ex2")
    table = run_example2(cfg)
    if args.out:
        write_results(table, args.out)
    if args.verbose or not args.out:
        print(",".join(table.columns))
        for row in table.rows:
            print(",".join(str(v) for v in row))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="metacog", description=__doc__)
    parser.add_argument("--version", action="version", version=f"metacog {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False, config=False, cdf=False):
        if data:
            p.add_argument("--data", required=True, help="probe/response CSV")
        if config:
            p.add_argument("--config", help="JSON config document")
        if cdf:
            p.add_argument("--cdf", required=True, help="sorted samples CSV")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output path")
        p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("garp", help="cycle-consistency check")
    common(p, data=True)
    p.set_defaults(func=_cmd_garp)

    p = sub.add_parser("afriat", help="rationalizability certificate")
    common(p, data=True)
    p.set_defaults(func=_cmd_afriat)

    p = sub.add_parser("phi", help="minimal relaxation statistic")
    common(p, data=True)
    p.set_defaults(func=_cmd_phi)

    p = sub.add_parser("cdf-l", help="Monte-Carlo statistic distribution")
    common(p, data=True)
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("-n", type=int, default=100_000)
    p.set_defaults(func=_cmd_cdf_l, seed=0)

    p = sub.add_parser("detect", help="hypothesis test on noisy data")
    common(p, data=True, cdf=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sigma2", type=float, required=True)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("are", help="steady-state predicted covariance")
    p.add_argument("--config", required=True, help="system JSON")
    p.add_argument("--out")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_are)

    p = sub.add_parser("mask-det", help="margin-bound masking")
    common(p, config=True)
    p.set_defaults(func=_cmd_mask_det)

    p = sub.add_parser("mask-stoch", help="stochastic confusion masking")
    common(p, config=True)
    p.set_defaults(func=_cmd_mask_stoch)

    p = sub.add_parser("ex1", help="deterministic masking experiment")
    common(p, config=True)
    p.set_defaults(func=_cmd_ex1)

    p = sub.add_parser("ex2", help="stochastic masking experiment")
    common(p, config=True)
    p.set_defaults(func=_cmd_ex2)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (SolverError, ConvergenceError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
