"""Command-line entry point: ``qeo {solve,convergence,condition,pam-compare,trace}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .eigensolver import build_preconditioner, normalize, solve
from .operator import assemble_dense, export_matrix_market, matrix_free

log = logging.getLogger("qeo")


def _common(p: argparse.ArgumentParser, n_list: bool = False):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--example", type=int, choices=(1, 2, 3))
    src.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    if n_list:
        p.add_argument("--N", type=int, nargs="+", help="grid sizes per dimension")
    else:
        p.add_argument("--N", type=int, help="grid size per dimension")
    p.add_argument("--pairs", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--mode", choices=("dense", "iterative"))
    p.add_argument("--norm", choices=("l2", "h1p"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qeo", description="Projection-method eigensolver for quasiperiodic elliptic operators")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="eigenpairs at one grid size")
    _common(p)
    p.add_argument("--export-mm", type=Path, help="also write the dense matrix in Matrix Market format")

    p = sub.add_parser("convergence", help="tracked eigenpair errors against a reference grid")
    _common(p, n_list=True)
    p.add_argument("--ref-N", type=int)

    p = sub.add_parser("condition", help="cond(Q) and cond(MQ) per grid size")
    _common(p, n_list=True)

    p = sub.add_parser("pam-compare", help="periodic approximation against the projection method")
    _common(p)
    p.add_argument("--ref-N", type=int)
    p.add_argument("--L", type=int, nargs="+", default=[17, 72, 144, 233, 305, 377])
    p.add_argument("--rule", choices=("nearest", "floor"), default="nearest")
    p.add_argument("--variant", choices=("half-scaled", "as-printed"), default="half-scaled")

    p = sub.add_parser("trace", help="sample an eigenfunction along a line")
    _common(p)
    p.add_argument("--state", type=int, default=1, help="1-based state, not counting the constant mode")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--x1", type=float, default=60.0)
    p.add_argument("--samples", type=int, default=4096)
    return ap


def load_config(args) -> harness.ExperimentConfig:
    cfg = harness.builtin_example(args.example) if args.example else harness.ExperimentConfig.load(args.config)
    changes: dict = {}
    solver = dict(cfg.solver)
    for flag, key in (("tol", "tol"), ("mode", "mode"), ("seed", "seed")):
        v = getattr(args, flag, None)
        if v is not None:
            solver[key] = v
    changes["solver"] = solver
    if args.pairs is not None:
        changes["pairs"] = args.pairs
    if args.norm is not None:
        changes["normalization"] = args.norm
    if args.out is not None:
        changes["output_dir"] = str(args.out)
    N = getattr(args, "N", None)
    if isinstance(N, list) and N:
        changes["N_list"] = sorted(N)
    ref_N = getattr(args, "ref_N", None)
    if ref_N is not None:
        changes["reference_N"] = ref_N
    if "N_list" in changes and "reference_N" not in changes:
        changes["reference_N"] = max(cfg.reference_N, max(changes["N_list"]))
    return dataclasses.replace(cfg, **changes)


def _single_N(args, cfg) -> int:
    return args.N if args.N is not None else max(cfg.N_list)


def _solve_one(cfg: harness.ExperimentConfig, N: int, export: Path | None = None):
    opts = cfg.options(cfg.pairs + (1 if cfg.skip_trivial else 0), cfg.solver.get("mode", "iterative"))
    A, P = cfg.field(), cfg.projection()
    dense = opts.mode == "dense" or export is not None
    op = assemble_dense(A, P, N) if dense else matrix_free(A, P, N)
    if export is not None:
        export_matrix_market(op, export)
        log.info("matrix written to %s", export)
    opts = dataclasses.replace(opts, mode="dense" if dense else "iterative")
    return solve(op, opts, None if dense else build_preconditioner(op))


def cmd_solve(args) -> int:
    cfg = load_config(args)
    N = _single_N(args, cfg)
    res = _solve_one(cfg, N, args.export_mm)
    out = Path(cfg.output_dir)
    harness.write_eigenresult_csv(res, out / f"{cfg.name}_N{N}_eigenvalues.csv")
    for j, u in enumerate(res.eigenvectors):
        u = normalize(u, cfg.projection(), cfg.normalization)
        harness.write_coefficients_csv(u, out / f"{cfg.name}_N{N}_state{j + 1}.csv")
    for j in range(res.m):
        print(f"{j + 1:3d}  {res.eigenvalues[j]:.12e}  residual {res.residual_norms[j]:.2e}")
    return 0 if res.converged.all() else 2


def cmd_convergence(args) -> int:
    cfg = load_config(args)
    study = harness.run_convergence_study(cfg)
    out = Path(cfg.output_dir)
    harness.emit_outputs(study.records, out, stem=f"{cfg.name}_convergence", metadata={"config": dataclasses.asdict(cfg)})
    cfg.save(out / f"{cfg.name}_config.json")
    for r in study.records:
        flag = " ambiguous" if r.ambiguous else ""
        print(f"N={r.N:4d} state {r.state}  gamma={r.eigenvalue:.12f}  err={r.eigenvalue_error:.4e}  "
              f"eigfun={r.eigenfunction_error:.4e}  overlap={r.overlap:.4f}{flag}")
    return 0


def cmd_condition(args) -> int:
    cfg = load_config(args)
    Ns = args.N or cfg.N_list
    rows = harness.run_condition_report(cfg, Ns)
    out = Path(cfg.output_dir)
    harness.write_csv(out / f"{cfg.name}_condition.csv", ["N", "cond_Q", "cond_MQ"],
                      ((r.N, r.cond_Q, r.cond_MQ) for r in rows))
    for r in rows:
        print(f"N={r.N:4d}  cond(Q)={r.cond_Q:.4e}  cond(MQ)={r.cond_MQ:.4f}")
    return 0


def cmd_pam_compare(args) -> int:
    cfg = load_config(args)
    if cfg.n != 2 or cfg.d != 1:
        print("pam-compare needs a one-dimensional problem with n = 2", file=sys.stderr)
        return 1
    N = args.N if args.N is not None else 16
    rows = harness.run_pam_comparison(cfg, args.L, N=N, rule=args.rule, variant=args.variant)
    out = Path(cfg.output_dir)
    harness.write_csv(out / f"{cfg.name}_pam_{args.variant}.csv", harness.PAM_FIELDS,
                      ([getattr(r, f) for f in harness.PAM_FIELDS] for r in rows))
    meta = {"gamma_err": harness.PAM_METRIC, "variant": args.variant, "rule": args.rule, "N": N,
            "reference_N": cfg.reference_N}
    (out / f"{cfg.name}_pam_{args.variant}_meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    for r in rows:
        print(f"L={r.L:4d}  e_def={r.e_def:.4e}  e_scaled={r.e_scaled:.4e}  "
              f"err1={r.gamma_err_1:.4e}  err2={r.gamma_err_2:.4e}")
    return 0


def cmd_trace(args) -> int:
    if args.state < 1:
        print("state must be at least 1", file=sys.stderr)
        return 1
    cfg = load_config(args)
    N = _single_N(args, cfg)
    cfg = dataclasses.replace(cfg, pairs=max(cfg.pairs, args.state))
    res = _solve_one(cfg, N)
    # states are counted like in the convergence study, i.e. without the constant mode
    j = harness.nontrivial_states(res, args.state, cfg.skip_trivial)[args.state - 1]
    P = cfg.projection()
    u = normalize(res.eigenvectors[j], P, cfg.normalization)
    t, vals = harness.eigenfunction_trace(u, P, args.x0, args.x1, args.samples)
    path = harness.write_trace(Path(cfg.output_dir) / f"{cfg.name}_N{N}_trace_state{args.state}.csv", t, vals)
    print(f"gamma={res.eigenvalues[j]:.12f}  max|u|={np.max(np.abs(vals)):.4e}  -> {path}")
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "convergence": cmd_convergence,
    "condition": cmd_condition,
    "pam-compare": cmd_pam_compare,
    "trace": cmd_trace,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
