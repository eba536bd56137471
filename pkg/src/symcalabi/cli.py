"""Command-line front end.

Exit codes: 0 success, 1 invariant failure, 2 oracle mismatch,
3 non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import conventions
from .config import ConfigError, ExperimentConfig, load_config, parse_active, raw_F
from .equation import diagnose, expansion_oracle, normalize_F, standard_omega
from .exterior import SymplecticFrame
from .fields import HXFError, read_hxf, write_hxf
from .solver import SolveOptions, solve
from .verify import faulty_frame, run_suite

EXIT_OK, EXIT_INVARIANT, EXIT_ORACLE, EXIT_NONCONV, EXIT_IO = 0, 1, 2, 3, 4

log = logging.getLogger("symcalabi")


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _flatten(d: dict, prefix: str = ""):
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list):
            yield key, ";".join(str(x) for x in v)
        else:
            yield key, v


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    over = {}
    if getattr(args, "grid", None):
        over["grid"] = tuple(args.grid)
    if getattr(args, "active", None):
        over["active"] = parse_active(args.active)
    for key in ("seed", "workers", "out", "F"):
        val = getattr(args, key, None)
        if val is not None:
            over[key] = val
    return cfg.with_overrides(**over)


def cmd_verify(args) -> int:
    frame = faulty_frame(args.inject_fault) if args.inject_fault else SymplecticFrame.standard()
    checks = run_suite(frame, seed=args.seed or 0)
    for c in checks:
        print(c.line())
    failures = [c.name for c in checks if c.gating and not c.passed]
    report = {
        "checks": [c.to_dict() for c in checks],
        "failures": failures,
        "conventions": conventions.ledger(expansion_oracle(20, 0).kappa),
    }
    for k, v in report["conventions"].items():
        print(f"  convention {k} = {v}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for c in report["checks"]:
            c.pop("seconds")
        _dump_json(out / "verify_report.json", report)
    print(json.dumps({"failures": failures}))
    return EXIT_INVARIANT if failures else EXIT_OK


def cmd_expand(args) -> int:
    rep = expansion_oracle(args.samples, args.seed or 0)
    d = rep.to_dict()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump_json(out / "expansion_report.json", d)
    print(f"samples={rep.samples} seed={rep.seed} taylor_defect={rep.taylor_defect:.3e}")
    print(f"linear part = {rep.trace_coefficient:.12g} * trace(H)  (fit residual {rep.trace_fit_residual:.2e})")
    print(f"quadratic part = {rep.kappa:.12g} * local_poly(H)  (fit residual {rep.kappa_fit_residual:.2e})")
    print(f"candidate kappa {rep.kappa_candidate:g}: {'confirmed' if rep.kappa_candidate_confirmed else 'refuted'}")
    print(f"full ratio = {rep.kappa:.12g} * local_poly(H + {rep.shift:.12g} Id)  (fit residual {rep.shifted_fit_residual:.2e})")
    print(f"at H = 2 Id: ratio {rep.pinned['ratio_2I']:g}, L {rep.pinned['L_2I']:g}, Q {rep.pinned['Q_2I']:g}")
    return EXIT_OK if rep.matched else EXIT_ORACLE


def _problem(cfg: ExperimentConfig):
    grid = cfg.make_grid()
    frame = SymplecticFrame.standard()
    Om = standard_omega(grid)
    F_raw, phi_star = raw_F(cfg.F, grid, frame, Om)
    return grid, frame, Om, normalize_F(F_raw), phi_star


def cmd_solve(args) -> int:
    try:
        cfg = _config_from_args(args)
        grid, frame, Om, rhs, phi_star = _problem(cfg)
    except (ConfigError, OSError, HXFError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    opts = SolveOptions(
        max_newton=cfg.max_newton,
        newton_tol=cfg.newton_tol,
        krylov_tol=cfg.krylov_tol,
        damping=cfg.damping,
        continuation_steps=cfg.continuation_steps,
        dealias=cfg.dealias,
        with_ricci=cfg.with_ricci,
    )
    with sfft.set_workers(cfg.workers):
        rep = solve(rhs, frame, Om, opts)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    d = rep.to_dict()
    d["config"] = cfg.to_dict()
    d["config_hash"] = cfg.hash()
    d["normalization_shift"] = rhs.normalization_shift
    if phi_star is not None:
        d["manufactured_error_maxnorm"] = float(np.max(np.abs(rep.phi.values - (phi_star.values - phi_star.values.mean()))))
    _dump_json(out / "solve_report.json", d)
    write_hxf(out / "phi.hxf", rep.phi)
    steps = [""] + [repr(s) for s in rep.step_sizes]
    _write_csv(out / "residual_history.csv", ["iteration", "residual_maxnorm", "step_size"],
               [(i, repr(r), steps[i] if i < len(steps) else "") for i, r in enumerate(rep.residual_history)])
    if rep.diagnostics is not None:
        _write_csv(out / "diagnostics.csv", ["quantity", "value"], _flatten(rep.diagnostics.to_dict()))
    print(f"converged={rep.converged} iterations={rep.iterations} residual={rep.residual_history[-1]:.3e} {rep.reason}")
    return EXIT_OK if rep.converged else EXIT_NONCONV


def cmd_diagnose(args) -> int:
    try:
        cfg = _config_from_args(args)
        phi = read_hxf(args.phi_file)
        if phi.degree != 0:
            raise HXFError("phi file must hold a degree-0 field")
        if phi.grid.sizes != cfg.make_grid().sizes:
            cfg = cfg.with_overrides(grid=phi.grid.sizes, active="".join("1" if n > 1 else "0" for n in phi.grid.sizes))
        grid, frame, Om, rhs, _ = _problem(cfg)
    except (ConfigError, OSError, HXFError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    with sfft.set_workers(cfg.workers):
        diag = diagnose(phi, rhs, frame, Om, with_ricci=True, dealias=cfg.dealias)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    d = diag.to_dict()
    d["conventions"] = conventions.ledger()
    d["config_hash"] = cfg.hash()
    d["config"] = cfg.to_dict()
    _dump_json(out / "diagnostics.json", d)
    rows = []
    for name, loc in sorted(diag.locations.items()):
        rows.append([name] + (list(loc) if loc is not None else [""] * 6))
    _write_csv(out / "worst_points.csv", ["quantity", "i1", "i2", "i3", "i4", "i5", "i6"], rows)
    print(f"residual_norm={diag.residual_norm:.3e} volume_defect={diag.volume_conservation_defect:.3e} "
          f"duality_worst={diag.duality_worst} ricci_norm={diag.ricci_norm}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symcalabi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default=None):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--grid", type=int, nargs=6, metavar="N", help="six grid sizes n1..n6")
        sp.add_argument("--active", help="active-axis mask, e.g. 111100 or 1,2,3,4")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", default=out_default)

    v = sub.add_parser("verify", help="run the invariant suite")
    common(v)
    v.add_argument("--inject-fault", choices=["star-sign"], help="test mode: corrupt the star table")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("expand", help="run the expansion oracle")
    common(e)
    e.add_argument("--samples", type=int, default=100)
    e.set_defaults(func=cmd_expand)

    s = sub.add_parser("solve", help="normalize F and solve for phi")
    common(s)
    s.add_argument("--F", help="zero | mode:<axis>:<eps> | manufactured | file:<path>")
    s.set_defaults(func=cmd_solve)

    d = sub.add_parser("diagnose", help="diagnose a phi checkpoint")
    common(d)
    d.add_argument("phi_file")
    d.add_argument("--F", help="zero | mode:<axis>:<eps> | manufactured | file:<path>")
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
