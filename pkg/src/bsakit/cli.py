"""Command-line front end.

Exit codes: 0 on success, 1 on invalid input, 2 when the solver did not
converge (the result is still written, with ``"converged": false``).
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .bsa import BsaDecomposition, SolverOptions, bsa_solve, verify_optimality
from .errors import BsaError, InvalidInput
from .linalg import range_kernel
from .measures import povm_monotonicity_check, random_local_povm
from .ppt_bsa import PptBsaDecomposition, ppt_bsa_solve, verify_ppt_optimality
from .states import bell_state, is_ppt, partial_transpose, random_density, werner

log = logging.getLogger("bsakit")

CSV_COLUMNS = ["state_id", "m", "n", "rank", "ppt", "lambda", "E", "converged", "wall_ms"]
EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2
# classification tolerances for solver-produced (rho_s, psi_e)
SOLVER_SCHMIDT_TOL = 1e-4
SOLVER_RANK_TOL = 1e-7


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    output_path: str | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    format: str = "json"
    args: argparse.Namespace | None = None

    def __post_init__(self):
        if self.command in FILE_COMMANDS and not self.input_path:
            raise InvalidInput(f"{self.command} needs --in")
        if self.format not in ("json", "csv-summary"):
            raise InvalidInput(f"unknown format {self.format!r}")


FILE_COMMANDS = {"decompose", "ppt-decompose", "measure", "check", "verify", "analyze-remainder",
                 "check-monotonicity"}


# -- output helpers -----------------------------------------------------------------------


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj, path) -> None:
    _emit(io.dumps(obj) + "\n", path)


def numerical_rank(h, tol) -> int:
    return range_kernel(h, tol)[0].rank


def _csv_text(rows) -> str:
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r[k] for k in CSV_COLUMNS})
    return buf.getvalue()


def _summary_row(state_id, rho, dec, wall_ms) -> dict:
    return {
        "state_id": state_id, "m": rho.m, "n": rho.n,
        "rank": numerical_rank(rho.mat, rho.tol), "ppt": is_ppt(rho),
        "lambda": repr(float(dec.lam)), "E": repr(float(1.0 - dec.lam)),
        "converged": bool(dec.converged), "wall_ms": wall_ms,
    }


# -- subcommands ----------------------------------------------------------------------------


def cmd_gen(cfg: RunConfig) -> int:
    a = cfg.args
    if a.family == "werner":
        rho = werner(a.p)
    elif a.family == "bell":
        rho = bell_state()
    elif a.family == "random":
        rank = a.rank or a.m * a.n
        rho = random_density((a.m, a.n), rank, a.seed)
    else:
        rho = io.load_upb_fixture()
    _emit_json(io.density_to_dict(rho), cfg.output_path)
    return EXIT_OK


def _decompose(cfg: RunConfig, ppt: bool) -> int:
    rho = io.load_density(cfg.input_path, cfg.solver.rank_tol)
    t0 = time.perf_counter()
    if ppt:
        dec = ppt_bsa_solve(rho, cfg.solver)
    else:
        dec = bsa_solve(rho, cfg.solver)
    wall = int(round(1000 * (time.perf_counter() - t0))) if not cfg.args.no_timing else 0
    if cfg.format == "csv-summary":
        _emit(_csv_text([_summary_row(Path(cfg.input_path).stem, rho, dec, wall)]), cfg.output_path)
    else:
        _emit_json(dec.to_dict(), cfg.output_path)
    if not dec.converged:
        log.warning("solver did not converge")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_decompose(cfg):
    return _decompose(cfg, ppt=False)


def cmd_ppt_decompose(cfg):
    return _decompose(cfg, ppt=True)


def cmd_measure(cfg: RunConfig) -> int:
    rho = io.load_density(cfg.input_path, cfg.solver.rank_tol)
    dec = bsa_solve(rho, cfg.solver)
    _emit_json({"E": float(1.0 - dec.lam), "lambda": float(dec.lam), "converged": dec.converged},
               cfg.output_path)
    return EXIT_OK if dec.converged else EXIT_NOT_CONVERGED


def cmd_check(cfg: RunConfig) -> int:
    rho = io.load_density(cfg.input_path, cfg.solver.rank_tol)
    pt = partial_transpose(rho)
    out = {
        "m": rho.m, "n": rho.n,
        "ppt": is_ppt(rho, cfg.solver.positivity_tol),
        "pt_min_eigenvalue": float(np.linalg.eigvalsh(pt)[0]),
        "rank": numerical_rank(rho.mat, cfg.solver.rank_tol),
        "pt_rank": numerical_rank(pt, cfg.solver.rank_tol),
        "purity": float(rho.purity()),
    }
    _emit_json(out, cfg.output_path)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    a = cfg.args
    rho = io.load_density(cfg.input_path, cfg.solver.rank_tol)
    ppt = bool(a.ppt)
    cls = PptBsaDecomposition if ppt else BsaDecomposition
    if a.decomposition:
        dec = cls.from_dict(io.read_json(a.decomposition))
    else:
        dec = ppt_bsa_solve(rho, cfg.solver) if ppt else bsa_solve(rho, cfg.solver)
    check = verify_ppt_optimality if ppt else verify_optimality
    rep = check(rho, dec, trials=a.trials, seed=cfg.solver.seed, opts=cfg.solver)
    _emit_json({"lambda": float(dec.lam), "converged": dec.converged, **rep.to_dict()}, cfg.output_path)
    return EXIT_OK if dec.converged else EXIT_NOT_CONVERGED


def cmd_analyze_remainder(cfg: RunConfig) -> int:
    from .twoqubit import concurrence, theorem3_check

    rho = io.load_density(cfg.input_path, cfg.solver.rank_tol)
    if rho.dims.m != 2 or rho.dims.n != 2:
        raise InvalidInput("analyze-remainder needs a 2x2 state")
    dec = bsa_solve(rho, cfg.solver)
    out = {"lambda": float(dec.lam), "concurrence": concurrence(rho), "converged": dec.converged}
    if dec.remainder is None or dec.separable_part is None:
        out["remainder"] = None
    else:
        w, v = np.linalg.eigh(dec.remainder.mat)
        out["remainder_purity"] = float(dec.remainder.purity())
        rank_tol = max(cfg.solver.rank_tol, SOLVER_RANK_TOL)
        rep = theorem3_check(dec.separable_part, v[:, -1], cfg.args.delta_grid, rank_tol, SOLVER_SCHMIDT_TOL)
        out["schmidt_coefficients"] = [float(x) for x in np.linalg.svd(v[:, -1].reshape(2, 2), compute_uv=False)]
        out["remainder"] = rep.to_dict()
    _emit_json(out, cfg.output_path)
    return EXIT_OK if dec.converged else EXIT_NOT_CONVERGED


def cmd_check_monotonicity(cfg: RunConfig) -> int:
    rho = io.load_density(cfg.input_path, cfg.solver.rank_tol)
    povm = random_local_povm(rho.dims, cfg.args.outcomes, cfg.args.povm_seed)
    rep = povm_monotonicity_check(rho, povm, cfg.solver)
    _emit_json(rep.to_dict(), cfg.output_path)
    return EXIT_OK


def _batch_states(a):
    if a.family == "werner":
        grid = [float(x) for x in a.grid.split(",")] if a.grid else list(np.linspace(0.0, 1.0, 11))
        return [(f"werner-p{p:.4f}", p, werner(p)) for p in grid], "p"
    rank = a.rank or a.m * a.n
    return [(f"random-{a.m}x{a.n}-r{rank}-s{a.seed + i}", float(i),
             random_density((a.m, a.n), rank, a.seed + i)) for i in range(a.count)], "state index"


def cmd_batch(cfg: RunConfig) -> int:
    from .plotting import plot_batch

    a = cfg.args
    states, xlabel = _batch_states(a)
    rows, xs = [], []
    worst = EXIT_OK
    for sid, x, rho in states:
        t0 = time.perf_counter()
        dec = ppt_bsa_solve(rho, cfg.solver, edge_restarts=0) if a.ppt and is_ppt(rho) else bsa_solve(rho, cfg.solver)
        wall = 0 if a.no_timing else int(round(1000 * (time.perf_counter() - t0)))
        rows.append(_summary_row(sid, rho, dec, wall))
        xs.append(x)
        log.info("%s lambda=%.6f converged=%s", sid, dec.lam, dec.converged)
        if not dec.converged:
            worst = EXIT_NOT_CONVERGED
    _emit(_csv_text(rows), cfg.output_path)
    if cfg.output_path and not a.no_plot:
        png = Path(cfg.output_path).with_suffix(".png")
        plot_rows = [dict(r, **{"lambda": float(r["lambda"]), "E": float(r["E"])}) for r in rows]
        ref = None
        if a.family == "werner":
            ps = np.linspace(0.0, 1.0, 101)
            ref = (ps, np.minimum(1.0, 1.5 * (1.0 - ps)), "3(1-p)/2")
        plot_batch(plot_rows, png, xlabel=xlabel, xs=xs, reference=ref)
    return worst


COMMANDS = {
    "gen": cmd_gen, "decompose": cmd_decompose, "ppt-decompose": cmd_ppt_decompose,
    "measure": cmd_measure, "check": cmd_check, "verify": cmd_verify,
    "analyze-remainder": cmd_analyze_remainder, "check-monotonicity": cmd_check_monotonicity,
    "batch": cmd_batch,
}


# -- argument parsing -----------------------------------------------------------------------


def _solver_flags(p):
    p.add_argument("--tol", type=float, default=1e-9, help="rank and positivity tolerance")
    p.add_argument("--multistart", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-sweeps", type=int, default=30)
    p.add_argument("--candidates", type=int, default=50)
    p.add_argument("--format", choices=["json", "csv-summary"], default="json")
    p.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 for reproducible output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bsakit", description="Best separable approximation toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a state file")
    g.add_argument("family", choices=["werner", "random", "bell", "upb-fixture"])
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--n", type=int, default=2)
    g.add_argument("--rank", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")

    for name, text in (("decompose", "best separable approximation"),
                       ("ppt-decompose", "PPT-preserving best separable approximation"),
                       ("measure", "entanglement measure E = 1 - lambda"),
                       ("check", "PPT and rank report"),
                       ("verify", "optimality report"),
                       ("analyze-remainder", "two-qubit remainder analysis"),
                       ("check-monotonicity", "monotonicity under a random local measurement")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--out")
        _solver_flags(p)
        if name == "verify":
            p.add_argument("--decomposition", help="decomposition JSON; solved afresh when omitted")
            p.add_argument("--ppt", action="store_true")
            p.add_argument("--trials", type=int, default=64)
        if name == "analyze-remainder":
            p.add_argument("--delta-grid", type=int, default=64)
        if name == "check-monotonicity":
            p.add_argument("--outcomes", type=int, default=4)
            p.add_argument("--povm-seed", type=int, default=0)

    b = sub.add_parser("batch", help="sweep a state family, write a CSV summary and a PNG")
    b.add_argument("family", choices=["werner", "random"])
    b.add_argument("--grid", help="comma-separated p values for werner")
    b.add_argument("--count", type=int, default=10)
    b.add_argument("--m", type=int, default=2)
    b.add_argument("--n", type=int, default=2)
    b.add_argument("--rank", type=int, default=None)
    b.add_argument("--ppt", action="store_true", help="use the PPT solver on PPT states")
    b.add_argument("--no-plot", action="store_true")
    b.add_argument("--out")
    _solver_flags(b)
    return parser


def config_from_args(args) -> RunConfig:
    solver = SolverOptions()
    if args.command != "gen":
        solver = SolverOptions(rank_tol=args.tol, positivity_tol=args.tol, max_sweeps=args.max_sweeps,
                               candidate_count=args.candidates, multistart=args.multistart, seed=args.seed)
    return RunConfig(command=args.command, input_path=getattr(args, "input", None),
                     output_path=args.out, solver=solver, format=getattr(args, "format", "json"), args=args)


def run(config: RunConfig) -> int:
    """Execute one subcommand and return its exit code."""
    try:
        return COMMANDS[config.command](config)
    except BsaError as exc:
        if not isinstance(exc, InvalidInput):
            raise
        print(f"bsakit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except InvalidInput as exc:
        print(f"bsakit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
