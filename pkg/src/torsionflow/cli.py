"""Command-line entry point: ``torsionflow --config run.ini --subcommand flow``."""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Optional

from .config import RunConfig, config_fields, parse_config
from .errors import TorsionFlowError
from .flow import run
from .functionals import functional_report
from .interior import interior_solve
from .lab import battery_passed, hadamard_sweep, verification_battery
from .storage import (
    SNAPSHOT_PATTERN,
    atomic_write_text,
    emit_plotdata,
    read_timeseries,
    timeseries_csv,
    write_json,
    write_snapshot,
)

logger = logging.getLogger("torsionflow")

OUT_ENV = "TORSIONFLOW_OUT"
SUBCOMMANDS = ("solve-interior", "flow", "check-hadamard", "verify", "functionals")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_NOT_CONVERGED = 7
EXIT_IO = 8
EXIT_INTERNAL = 10

EXIT_CODES = {
    0: "success",
    1: "a gating identity check failed (verify, check-hadamard)",
    2: "invalid configuration or command line",
    3: "convexity lost (initial body or during a solve)",
    4: "interior solver failure",
    5: "unsupported (k, geometry) combination",
    6: "flow time step fell below dt_min",
    7: "flow stopped at max_steps before reaching residual_tol",
    8: "file system error",
    10: "unexpected internal error",
}


def _plain(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _report_dict(rep, k: int) -> dict:
    d = {"T_volume": rep.T_volume, "T_boundary": rep.T_boundary, "T_k": rep.T_boundary**k}
    d.update({c: getattr(rep, c) for c in ("phi", "eta", "pohozaev_relerr", "min_h", "max_h", "min_lambda", "max_lambda", "residual")})
    d["tau"] = rep.tau
    return {key: _plain(float(v)) for key, v in d.items()}


def _solve_interior(cfg: RunConfig, out: Path) -> int:
    body = cfg.initial_body()
    sol = interior_solve(body, cfg.k, cfg.mfs)
    rep, _, _ = functional_report(body, cfg.density_field().values, cfg.k, sol=sol)
    atomic_write_text(out / "report.csv", timeseries_csv([rep]))
    d = sol.to_dict()
    d.update(
        boundary_residual=sol.boundary_residual,
        hessian_residual=sol.residual_report,
        condition=sol.condition,
    )
    write_json(out / "interior.json", d)
    logger.info("T_tilde = %.12g (volume route %.12g)", rep.T_boundary, rep.T_volume ** (1.0 / cfg.k))
    return EXIT_OK


def _functionals(cfg: RunConfig, out: Path) -> int:
    body = cfg.initial_body()
    rep, _, _ = functional_report(body, cfg.density_field().values, cfg.k, cfg.mfs)
    atomic_write_text(out / "functionals.csv", timeseries_csv([rep]))
    write_json(out / "functionals.json", {"dim": cfg.dim, "k": cfg.k, "n_nodes": cfg.n_nodes, **_report_dict(rep, cfg.k)})
    logger.info("T_tilde = %.12g, Phi = %.12g, eta = %.12g", rep.T_boundary, rep.phi, rep.eta)
    return EXIT_OK


def _flow(cfg: RunConfig, out: Path) -> int:
    h0 = cfg.initial_body()
    f = cfg.density_field()
    every = cfg.snapshot_every

    def progress(state):
        if state.steps % 1000 == 0:
            logger.info("step %d  t = %.4f  residual = %.3e", state.steps, state.t, state.residual)

    res = run(h0, f, cfg.k, cfg.flow, snapshot_every=every, callback=progress)
    emit_plotdata(res.reports, res.snapshots, out)
    for step_no, t, h in res.snapshots:
        write_snapshot(out / SNAPSHOT_PATTERN.format(step=step_no), h, step=step_no, t=t)
    last = res.final.last_report
    write_snapshot(
        out / "final.json",
        res.h,
        t=res.final.t,
        steps=res.steps,
        tau=res.tau,
        eta=res.eta,
        residual=res.final.residual,
        converged=res.converged,
        T_tilde=last.T_boundary,
        phi=last.phi,
        alerts=res.alerts,
    )
    logger.info(
        "flow %s after %d steps: residual %.3e, tau %.12g",
        "converged" if res.converged else "stopped",
        res.steps,
        res.final.residual,
        res.tau,
    )
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def _check_hadamard(cfg: RunConfig, out: Path) -> int:
    body = cfg.initial_body()
    reps, order = hadamard_sweep(body, cfg.hadamard_direction(), cfg.k, cfg.hadamard.eps, cfg.mfs)
    ok = reps[-1].passed
    write_json(
        out / "hadamard.json",
        {"reports": [r.to_dict() for r in reps], "observed_order": _plain(order), "pass": ok},
    )
    logger.info("Hadamard relerr %.3e at eps=%g, observed order %.2f", reps[-1].relerr, cfg.hadamard.eps[-1], order)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _verify(cfg: RunConfig, out: Path) -> int:
    trajectory = read_timeseries(cfg._resolve(cfg.verify_timeseries)) if cfg.verify_timeseries else None
    reps = verification_battery(trajectory)
    ok = battery_passed(reps)
    write_json(out / "verify.json", {"pass": ok, "reports": [r.to_dict() for r in reps]})
    for r in reps:
        if not r.passed:
            level = logging.WARNING if r.gating else logging.INFO
            logger.log(level, "%s %s: relerr %.3e > tol %.1e%s", r.name, r.params, r.relerr, r.tol, "" if r.gating else " (non-gating)")
    logger.info("verify: %d checks, %s", len(reps), "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


_HANDLERS = {
    "solve-interior": _solve_interior,
    "functionals": _functionals,
    "flow": _flow,
    "check-hadamard": _check_hadamard,
    "verify": _verify,
}


def resolve_out_dir(cfg: RunConfig, cli_out: Optional[str] = None) -> Path:
    """``--out`` beats ``$TORSIONFLOW_OUT`` beats ``[output] dir``."""
    if cli_out:
        return Path(cli_out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    return cfg._resolve(cfg.out_dir)


def orchestrate(cfg: RunConfig, subcommand: str, out_dir: Optional[str] = None) -> int:
    """Run one subcommand and return its exit status; artifacts land in the output directory."""
    if subcommand not in _HANDLERS:
        logger.error("unknown subcommand %r", subcommand)
        return 2
    out = resolve_out_dir(cfg, out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return _HANDLERS[subcommand](cfg, out)
    except TorsionFlowError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO
    except Exception:  # noqa: BLE001 - map anything else to a documented code
        logger.exception("internal error")
        return EXIT_INTERNAL


def _epilog() -> str:
    lines = ["exit codes:"]
    lines += [f"  {code:>2}  {text}" for code, text in EXIT_CODES.items()]
    lines += ["", f"environment:\n  {OUT_ENV}  output directory (overridden by --out)", "", "config sections and keys:"]
    lines += [f"  [{sec}] " + ", ".join(keys) for sec, keys in config_fields().items()]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="torsionflow",
        description="Curvature flow for the k-torsional Minkowski problem.",
        epilog=_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--config", required=True, metavar="PATH", help="INI run configuration")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--subcommand", required=True, choices=SUBCOMMANDS)
    p.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    path = Path(args.config)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        logger.error("cannot read config: %s", exc)
        return 2
    try:
        cfg = parse_config(text, base_dir=str(path.parent))
    except TorsionFlowError as exc:
        logger.error("%s: %s: %s", path, type(exc).__name__, exc)
        return exc.exit_code
    return orchestrate(cfg, args.subcommand, args.out)


if __name__ == "__main__":
    sys.exit(main())
