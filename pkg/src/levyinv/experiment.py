"""Run configured experiments across seeds and write plot-ready artifacts.

Outputs in the run directory:

* ``report.json``: config echo, admissibility, per-seed and aggregate
  statistics.  Deterministic given the config.
* ``timing.json``: wall-clock figures (kept apart so report.json is
  byte-reproducible).
* ``kde.csv``, ``functionals.csv``, ``probes.csv``; optionally
  ``trajectory_<seed>.csv``.
"""

import csv
import json
import math
import os
import pickle
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as dg
from .config import ExperimentConfig
from .empirical import EmpiricalMeasure
from .errors import ConfigError
from .euler import TrajectoryWriter, run_chain
from .presets import build_functionals, build_reference, build_schedule, build_sde
from .schedules import FAIL, admissibility

OUTPUT_ROOT_ENV = "LEVYINV_OUTPUT_ROOT"


def fmt(v):
    """17 significant digits for CSV output."""
    return "%.17g" % v


def output_root():
    return os.environ.get(OUTPUT_ROOT_ENV, "runs")


def _sde(config):
    return config.sde if config.sde is not None else build_sde(config.doc, config.doc["u_law"])


def validate(config):
    """All schedule checks for ``config`` without simulating."""
    doc = config.doc
    sde = _sde(config)
    levy = sde.levy if sde.kappa is not None else None
    return admissibility(build_schedule(doc), levy, doc["scheme"], doc["N"],
                         theory=doc.get("theory"), budget=doc["jump_budget"])


def _require_runnable(config, report):
    if report.blocking:
        raise ConfigError("schedule fails the basic conditions:\n" + str(report))
    if (config.scheme == "C" and report.scheme_c_vanishing == FAIL
            and not config.doc["allow_nonvanishing_c"]):
        raise ConfigError("Scheme C needs pi(|y| > u_n) gamma_n -> 0; "
                          "set allow_nonvanishing_c to run anyway")


def _probes(doc, sde):
    """Extra functionals requested by the probe toggles."""
    extra = {}
    pr = doc["probes"]
    if pr.get("generator_residual"):
        g = pr["generator_residual"]
        tf = dg.TestFunction.bump(g.get("center", 0.0), g.get("radius", 1.0))
        extra["Af"] = dg.GeneratorFunctional(sde, tf, eps0=g.get("eps0", dg.EPS0))
    if pr.get("lyapunov"):
        ly = pr["lyapunov"]
        spec = dg.LyapunovSpec(ly["a"], ly["p"], ly.get("q", 1.0))
        extra["lyapunov"] = spec.functional()
    return extra


@dataclass
class SeedResult:
    seed: int
    measure: EmpiricalMeasure
    summary: dict
    wall_time: float


def run_seed(config, seed, outdir=None, extra=None):
    """One chain for ``seed``; returns its measure and a JSON-ready summary."""
    doc = config.doc
    sde = _sde(config)
    fns = build_functionals(doc)
    fns.update(extra if extra is not None else _probes(doc, sde))
    m = EmpiricalMeasure(fns, dim=sde.d, store_cap=doc["store_cap"])
    traj = None
    if doc["trajectory_every"] and outdir:
        traj = TrajectoryWriter(os.path.join(outdir, f"trajectory_{seed}.csv"), sde.d,
                                doc["trajectory_every"])
    res = run_chain(sde, doc["scheme"], build_schedule(doc), doc["N"], doc["x0"], seed, m,
                    trajectory=traj, budget=doc["jump_budget"])
    summary = res.summary()
    summary.pop("Gamma")
    summary["seed"] = seed
    summary["final_x"] = (float(res.state.x) if sde.d == 1
                          else [float(v) for v in np.ravel(res.state.x)])
    summary["functionals"] = m.as_dict()
    summary["poisoned"] = dict(m.poisoned)
    summary["store_thinned"] = m.thinned
    ref = build_reference(doc)
    if ref is not None and sde.d == 1 and m.n:
        summary["ks"] = m.ks_distance(ref)
    if sde.d == 1 and m.n:
        pts, _ = m.points()
        summary["state_range"] = [float(pts.min()), float(pts.max())]
    return SeedResult(seed, m, summary, res.wall_time)


def _seed_job(args):
    doc, seed, outdir = args
    return run_seed(ExperimentConfig.from_dict(doc), seed, outdir)


def _aggregate(summaries):
    stats = {}
    keys = {}
    for s in summaries:
        for k, v in s["functionals"].items():
            keys.setdefault(f"functional:{k}", []).append(v)
        if "ks" in s:
            keys.setdefault("ks", []).append(s["ks"])
        keys.setdefault("total_jumps", []).append(s["total_jumps"])
    for k, vals in keys.items():
        arr = [float(v) for v in vals]
        stats[k] = {"mean": math.fsum(arr) / len(arr), "min": min(arr), "max": max(arr)}
    return stats


@dataclass
class RunReport:
    report: dict
    timing: dict
    measure: EmpiricalMeasure = None
    seeds: list = field(default_factory=list)

    def dumps(self):
        return json.dumps(self.report, indent=2, sort_keys=True, allow_nan=True)


def run_experiment(config, outdir=None, workers=None, write=True):
    """Run every seed, merge in seed order, write artifacts; returns a RunReport."""
    t0 = time.perf_counter()
    adm = validate(config)
    _require_runnable(config, adm)
    doc = config.doc
    if outdir is None and write:
        outdir = os.path.join(output_root(), doc["output_dir"] or doc["name"])
    if write:
        os.makedirs(outdir, exist_ok=True)
    seeds = config.seeds
    results = _run_seeds(config, seeds, outdir if write else None, workers)
    results.sort(key=lambda r: seeds.index(r.seed))

    merged = results[0].measure
    for r in results[1:]:
        merged = merged.merge(r.measure)

    sde = _sde(config)
    report = {"config": config.to_dict(), "admissibility": adm.to_dict(),
              "seeds": [r.summary for r in results],
              "aggregate": _aggregate([r.summary for r in results]),
              "merged": {"functionals": merged.as_dict(), "n": merged.n, "H": merged.H},
              "metadata": {"u_law": doc["u_law"], "compensation_threshold": 1.0,
                           "levy": sde.levy.describe() if sde.levy is not None else None}}
    density = None
    if sde.d == 1 and merged.n:
        lo, hi, count = doc["kde"]["grid"]
        density = merged.kde(doc["kde"]["bandwidth"], (lo, hi, int(count)))
        kd = {"bandwidth": density.bandwidth, "mass": density.mass()}
        ref = build_reference(doc)
        if ref is not None:
            kd["sup_deviation"] = density.sup_deviation(ref.pdf)
            report["merged"]["ks"] = merged.ks_distance(ref)
        pts, _ = merged.points()
        kd["support"] = [float(pts.min()), float(pts.max())]
        report["kde"] = kd
    probes = doc["probes"]
    if "Af" in merged.names:
        gf = results[0].measure.fns[merged.names.index("Af")]
        report["generator_residual"] = {
            "sup_abs_Af": gf.sup_abs,
            "final": [r.measure.value("Af") for r in results],
            "ratio": [abs(r.measure.value("Af")) / gf.sup_abs for r in results]}
    if "lyapunov" in merged.names:
        ly = probes["lyapunov"]
        spec = dg.LyapunovSpec(ly["a"], ly["p"], ly.get("q", 1.0))
        report["lyapunov"] = {"exponent": spec.exponent,
                              "stabilization": [dg.lyapunov_trace(r.measure, spec).stabilization
                                                for r in results]}
    if probes.get("mean_reversion") and sde.d == 1:
        mr = probes["mean_reversion"]
        spec = dg.LyapunovSpec(mr["a"], mr["p"], mr.get("q", 1.0))
        report["mean_reversion"] = _jsonable(dg.mean_reversion_probe(sde, spec).to_dict())
    report = _jsonable(report)
    timing = {"total_seconds": time.perf_counter() - t0,
              "per_seed_seconds": {str(r.seed): r.wall_time for r in results}}
    out = RunReport(report, timing, merged, results)
    if write:
        _write_artifacts(outdir, out, density, results)
    return out


def _run_seeds(config, seeds, outdir, workers):
    if workers is None:
        workers = min(len(seeds), os.cpu_count() or 1)
    if workers > 1 and len(seeds) > 1 and config.sde is None:
        try:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                return list(ex.map(_seed_job, [(config.doc, s, outdir) for s in seeds]))
        except (OSError, RuntimeError, ImportError, AttributeError, pickle.PicklingError):
            # no process support, or user callables that do not pickle: run serially
            pass
    return [run_seed(config, s, outdir) for s in seeds]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_artifacts(outdir, out, density, results):
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        fh.write(out.dumps() + "\n")
    with open(os.path.join(outdir, "timing.json"), "w") as fh:
        json.dump(out.timing, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if density is not None:
        with open(os.path.join(outdir, "kde.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "density"])
            for x, d in zip(density.grid, density.density):
                w.writerow([fmt(x), fmt(d)])
    with open(os.path.join(outdir, "functionals.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scope", "name", "value"])
        for r in results:
            for k, v in r.measure.as_dict().items():
                w.writerow([f"seed{r.seed}", k, fmt(v)])
        for k, v in out.measure.as_dict().items():
            w.writerow(["merged", k, fmt(v)])
    with open(os.path.join(outdir, "probes.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "name", "n", "H", "value"])
        for r in results:
            m = r.measure
            for n, H, vals in m.probes:
                for name, v in zip(m.probe_names, vals):
                    w.writerow([r.seed, name, n, fmt(H), fmt(v)])
