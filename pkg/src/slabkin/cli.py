"""
Command line entry point: ``slabkin {run,sweep,limit,verify,fit}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure.  JSON outputs are written with sorted keys and no
timing information so identical inputs give byte-identical files; wall-clock
durations go to a separate ``timing.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .config import config_text, load_config
from .diagnostics import fit_decay_rate, read_csv, write_csv
from .errors import ConfigError, ContractError, FitError, NumericalError
from .fields import DistributionField, dump_snapshot
from .studies import limit_study, summarize, sweep
from .transport import SimConfig, run_simulation
from .verify import FAULTS, format_report, run_all

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFY = 0, 2, 3, 4
DEFAULT_SWEEP = "1,0.5,0.25,0.1"
DEFAULT_LIMIT = "0.4,0.2,0.1,0.05"

logger = logging.getLogger("slabkin")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _manifest(cfg: SimConfig, outputs: dict) -> dict:
    return {"config": cfg.to_dict(), "config_text": config_text(cfg), "version": __version__,
            "outputs": outputs}


def _eps_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse epsilon list {text!r}", "eps") from None
    if not vals:
        raise ConfigError("empty epsilon list", "eps")
    for e in vals:
        if not 0.0 < e <= 1.0:
            raise ConfigError(f"epsilon {e} outside (0, 1]", "eps")
    return vals


def _base_config(args) -> SimConfig:
    return load_config(args.config) if args.config else SimConfig()


def cmd_run(args) -> int:
    cfg = _base_config(args)
    out = Path(args.out)
    t0 = time.perf_counter()
    traj = run_simulation(cfg)
    out.mkdir(parents=True, exist_ok=True)
    outputs = {"csv": "diagnostics.csv", "summary": "summary.json"}
    if traj.snapshots:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for k, (t, f) in enumerate(traj.snapshots):
            dump_snapshot(snap_dir / f"snap_{k:05d}.txt", DistributionField(f, t), cfg.vmax)
        outputs["snapshots"] = f"snapshots/ ({len(traj.snapshots)} files)"
    tmp = out / "diagnostics.csv.tmp"
    write_csv(tmp, traj.records)
    tmp.replace(out / "diagnostics.csv")
    summary = summarize(traj)
    summary["manifest"] = _manifest(cfg, outputs)
    _write_json(out / "summary.json", summary)
    _write_json(out / "timing.json", {"wall_clock_s": time.perf_counter() - t0})
    fit = summary["rate_fit"]
    print(f"run: eps={cfg.epsilon:g} kind={cfg.kind} steps={traj.n_steps} "
          f"||f-M_c||(T)={traj.records[-1].norm_f_minus_Mc:.6e} lambda={fit.get('lam', float('nan')):.6g}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _base_config(args)
    eps = _eps_list(args.eps)
    out = Path(args.out)
    t0 = time.perf_counter()
    res = sweep(base, eps, workers=args.workers)
    out.mkdir(parents=True, exist_ok=True)
    report = res.to_dict()
    report["manifest"] = _manifest(base, {"summary": "sweep.json"})
    report["epsilons"] = eps
    _write_json(out / "sweep.json", report)
    _write_json(out / "timing.json", {"wall_clock_s": time.perf_counter() - t0})
    for m in res.members:
        if m["ok"]:
            f = m["rate_fit"]
            print(f"eps={m['epsilon']:g} lambda={f.get('lam', float('nan')):.6g} R2={f.get('r2', float('nan')):.6f}")
        else:
            print(f"eps={m['epsilon']:g} FAILED: {m['error']}")
    print(f"max/min lambda = {res.ratio}" + (" (partial)" if res.partial else ""))
    return EXIT_NUMERICAL if res.partial else EXIT_OK


def cmd_limit(args) -> int:
    base = _base_config(args)
    eps = _eps_list(args.eps)
    out = Path(args.out)
    t0 = time.perf_counter()
    rep = limit_study(base, eps, control=not args.no_control, workers=args.workers)
    out.mkdir(parents=True, exist_ok=True)
    rep["manifest"] = _manifest(base, {"summary": "limit.json"})
    rep["epsilons"] = eps
    _write_json(out / "limit.json", rep)
    _write_json(out / "timing.json", {"wall_clock_s": time.perf_counter() - t0})
    for e, g in zip(eps, rep["sup_gap"]):
        print(f"eps={e:g} sup_t ||f - rho|| = {g:.6e}")
    print(f"order = {rep['order']:.4f} monotone = {rep['monotone']}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_all(seed=args.seed, fault=args.fault)
    print(format_report(results))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "verify.json", {"seed": args.seed, "fault": args.fault,
                                          "results": [r.to_dict() for r in results]})
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def cmd_fit(args) -> int:
    recs = read_csv(args.csv)
    try:
        t0, t1 = (float(x) for x in args.window.split(","))
    except ValueError:
        raise ConfigError(f"window must be 't0,t1', got {args.window!r}", "window") from None
    t = [r.t for r in recs]
    y = [getattr(r, args.column) for r in recs]
    fit = fit_decay_rate(t, y, (t0, t1))
    print(json.dumps(fit.to_dict(), sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slabkin", description=__doc__.splitlines()[1])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, eps_default=None):
        sp.add_argument("--config", help="INI configuration file (defaults apply when omitted)")
        sp.add_argument("--out", default="out", help="output directory")
        if eps_default is not None:
            sp.add_argument("--eps", default=eps_default, help="comma-separated epsilon list")
            sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    common(sub.add_parser("run", help="single run: CSV time series and JSON summary"))
    common(sub.add_parser("sweep", help="decay-rate sweep over epsilon"), DEFAULT_SWEEP)
    lim = sub.add_parser("limit", help="diffusion-limit study")
    common(lim, DEFAULT_LIMIT)
    lim.add_argument("--no-control", action="store_true", help="skip the grid-refinement control run")
    ver = sub.add_parser("verify", help="invariant suites")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--fault", choices=FAULTS, default="none")
    ver.add_argument("--out", default=None)
    fit = sub.add_parser("fit", help="re-fit a decay rate from a diagnostics CSV")
    fit.add_argument("csv")
    fit.add_argument("--window", required=True, help="t0,t1")
    fit.add_argument("--column", default="norm_f_minus_Mc")
    return p


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "limit": cmd_limit, "verify": cmd_verify, "fit": cmd_fit}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ContractError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
