"""Command line entry point: ``drasym --config run.cfg --mode both``."""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import run_empirical, run_prediction, run_both, sweep_gamma, write_csv, write_meta

log = logging.getLogger("drasym")


def build_parser():
    p = argparse.ArgumentParser(
        prog="drasym",
        description="Empirical Douglas-Rachford MSE and its asymptotic prediction, as CSV.",
    )
    p.add_argument("--config", type=Path, help="key = value config file (defaults used if omitted)")
    p.add_argument("--mode", choices=["empirical", "predict", "both", "sweep"])
    p.add_argument("--seed", type=int, help="master seed (u64)")
    p.add_argument("--out", type=Path, help="output CSV path; metadata goes to <stem>.meta")
    p.add_argument("--particles", type=int, help="Monte Carlo ensemble size")
    p.add_argument("--trials", type=int, help="empirical replications")
    p.add_argument("--workers", type=int, help="threads for empirical trials")
    p.add_argument("--empirical-overlay", action="store_true", help="sweep mode: also run trials per gamma")
    p.add_argument("--quiet", action="store_true")
    return p


def _apply_flags(cfg, args):
    kw = {}
    if args.mode is not None:
        kw["mode"] = args.mode
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.out is not None:
        kw["output_path"] = str(args.out)
    if args.particles is not None:
        kw["mc_particles"] = args.particles
    if args.trials is not None:
        kw["trials"] = args.trials
    if args.workers is not None:
        kw["workers"] = args.workers
    try:
        return cfg.with_overrides(**kw) if kw else cfg
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _run(cfg, overlay):
    t0 = time.perf_counter()
    extra = {}
    if cfg.mode == "empirical":
        rows = run_empirical(cfg)
    elif cfg.mode == "predict":
        rows = run_prediction(cfg)
    elif cfg.mode == "both":
        rows = run_both(cfg)
    else:
        res = sweep_gamma(cfg, empirical=overlay)
        rows = res.rows
        extra["argmin_gamma"] = {str(k): g for k, g in res.argmin_gamma.items()}
        for k, g in sorted(res.argmin_gamma.items()):
            log.info("k=%d: predicted MSE minimized at gamma=%g", k, g)
    return rows, {"total": time.perf_counter() - t0}, extra


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = _apply_flags(cfg, args)
        if cfg.system.overdetermined:
            log.warning("m > n: overdetermined system (delta = %.3f)", cfg.system.delta)
        rows, times, extra = _run(cfg, args.empirical_overlay)
        out = Path(cfg.output_path)
        write_csv(rows, out)
        write_meta(cfg, out.with_suffix(".meta"), times, extra)
        log.info("wrote %d rows to %s", len(rows), out)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one machine-readable line
        err = {"error": type(exc).__name__, "message": str(exc)}
        trial = getattr(exc, "trial", None)
        if trial is not None:
            err["trial"] = trial
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
