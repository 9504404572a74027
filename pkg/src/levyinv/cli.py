"""Command line entry point: ``levyinv run|validate|preset|asclt``."""

import argparse
import json
import os
import sys

from . import diagnostics as dg
from .config import ExperimentConfig
from .empirical import CauchyCDF, StableCDF
from .errors import ConfigError
from .experiment import OUTPUT_ROOT_ENV, fmt, run_experiment, validate
from .presets import PRESETS, preset


def _parse_params(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"preset parameters are key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def cmd_run(args):
    cfg = ExperimentConfig.load(args.config)
    if args.seeds:
        cfg = cfg.replace(seeds=args.seeds)
    if args.N:
        cfg = cfg.replace(N=args.N)
    rep = run_experiment(cfg, outdir=args.out, workers=args.workers)
    agg = rep.report["aggregate"]
    print(f"{cfg.name}: scheme {cfg.scheme}, N={cfg.N}, seeds={cfg.seeds}")
    for k, v in sorted(agg.items()):
        print(f"  {k:<24} mean {fmt(v['mean'])}  [{fmt(v['min'])}, {fmt(v['max'])}]")
    if "kde" in rep.report:
        print(f"  kde bandwidth {rep.report['kde']['bandwidth']:.4g}")
    diverged = [s["seed"] for s in rep.report["seeds"] if s["diverged"]]
    if diverged:
        print(f"  diverged seeds: {diverged}")
    return 0


def cmd_validate(args):
    cfg = ExperimentConfig.load(args.config)
    rep = validate(cfg)
    print(rep)
    return 1 if rep.failures else 0


def cmd_preset(args):
    cfg = preset(args.name, **_parse_params(args.param))
    if args.emit:
        cfg.save(args.emit)
        print(f"wrote {args.emit}")
    else:
        print(cfg.dumps())
    return 0


def cmd_asclt(args):
    if args.law == "cauchy":
        sampler = dg.CauchySampler()
        ref = CauchyCDF()
    else:
        sampler = dg.LogParetoSampler(args.alpha, args.correction)
        ref = (CauchyCDF(sampler.limit_scale) if args.alpha == 1.0
               else StableCDF(args.alpha, sampler.limit_scale))
    m = dg.asclt_run(sampler, args.N, seed=args.seed)
    ks = m.ks_distance(ref)
    print(f"a.s. CLT, law={args.law}, alpha={sampler.alpha:g}, N={args.N}: KS = {ks:.6f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "asclt.json"), "w") as fh:
            json.dump({"law": args.law, "alpha": sampler.alpha, "N": args.N, "seed": args.seed,
                       "limit_scale": sampler.limit_scale, "ks": ks}, fh, indent=2)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="levyinv", description=(
        "Approximate invariant measures of Lévy-driven SDEs with decreasing-step Euler schemes. "
        f"Run outputs go under ${OUTPUT_ROOT_ENV} (default ./runs)."))
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="run a config file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default $ROOT/<output_dir>)")
    r.add_argument("--workers", type=int)
    r.add_argument("--seeds", type=int, nargs="+")
    r.add_argument("--N", type=int)
    r.set_defaults(fn=cmd_run)

    v = sub.add_parser("validate", help="print admissibility verdicts without simulating")
    v.add_argument("config")
    v.set_defaults(fn=cmd_validate)

    s = sub.add_parser("preset", help="emit a preset config")
    s.add_argument("name", choices=PRESETS)
    s.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="preset parameter, e.g. alpha=1.5 (repeatable)")
    s.add_argument("--emit", metavar="PATH")
    s.set_defaults(fn=cmd_preset)

    a = sub.add_parser("asclt", help="almost-sure CLT harness")
    a.add_argument("--law", choices=("cauchy", "log_pareto"), default="cauchy")
    a.add_argument("--alpha", type=float, default=1.0)
    a.add_argument("--correction", type=float, default=2.0,
                   help="exponent of the logarithmic tail correction (log_pareto)")
    a.add_argument("--N", type=int, default=100000)
    a.add_argument("--seed", type=int, default=1)
    a.add_argument("--out")
    a.set_defaults(fn=cmd_asclt)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
