"""Command-line entry point ``fgl``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure
(iteration non-convergence), 3 acceptance-window violation.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import config_to_dict, initial_functions, parse_config
from .errors import DomainError, InputError, NonConvergenceError
from .output import write_csv, write_json, write_manifest

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_ACCEPT = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fgl", description="Fractional Ginzburg-Landau solver and experiment harness.")
    p.add_argument("--version", action="version", version=f"fgl {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("coeffs", help="write a generating-function coefficient table")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--family", choices=("g2", "g4"), default="g4")
    c.add_argument("--length", type=int, required=True, help="last index L")
    c.add_argument("--out", required=True)

    lap = sub.add_parser("laplacian", help="compact fractional Laplacian of a test polynomial at a node")
    lap.add_argument("--alpha", type=float, required=True)
    lap.add_argument("--nx", type=int, required=True)
    lap.add_argument("--poly", choices=("example1",), default="example1")
    lap.add_argument("--x", type=float, default=0.5)
    lap.add_argument("--out", required=True)

    s = sub.add_parser("simulate", help="run the time integrator from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--snapshots", type=_float_list, default=None)
    s.add_argument("--out", default=None)

    t1 = sub.add_parser("table1", help="formula accuracy table for x^4 (1-x)^4")
    t1.add_argument("--out", default="table1_out")

    cv = sub.add_parser("converge", help="convergence-order table")
    cv.add_argument("--table", type=int, choices=(2, 3), required=True)
    cv.add_argument("--alphas", type=_float_list, default=None)
    cv.add_argument("--out", default=None)

    e3 = sub.add_parser("example3", help="soliton-collision evolution data")
    e3.add_argument("--variant", choices=("fig7.1", "fig7.2", "fig7.3", "fig7.4"), required=True)
    e3.add_argument("--nx", type=int, default=512)
    e3.add_argument("--nt", type=int, default=1000)
    e3.add_argument("--T", type=float, default=10.0)
    e3.add_argument("--out", default=None)

    v = sub.add_parser("verify", help="run the invariant suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    handler = {
        "coeffs": _cmd_coeffs,
        "laplacian": _cmd_laplacian,
        "simulate": _cmd_simulate,
        "table1": _cmd_table1,
        "converge": _cmd_converge,
        "example3": _cmd_example3,
        "verify": _cmd_verify,
    }[args.command]
    try:
        return handler(args, ["fgl", *argv])
    except NonConvergenceError as e:
        print(f"fgl: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, DomainError) as e:
        print(f"fgl: error: {e}", file=sys.stderr)
        return EXIT_USAGE


def dispatch(argv) -> int:
    return main(argv)


# ------------------------------------------------------------------ subcommands


def _cmd_coeffs(args, command) -> int:
    from .coeffs import g2_coeffs, g4_coeffs

    tab = g2_coeffs(args.alpha, args.length) if args.family == "g2" else g4_coeffs(args.alpha, args.length)
    write_csv(args.out, ("m", "kappa"), ((m, k) for m, k in enumerate(tab.values)))
    return EXIT_OK


def _cmd_laplacian(args, command) -> int:
    from .operators import Grid1D, PolyOracle, assemble, frac_laplacian, poly_exact_frac_laplacian

    oracle = PolyOracle.example1()
    g = Grid1D(oracle.a, oracle.b, args.nx)
    j = g.node_index(args.x)
    if not 1 <= j <= g.nx - 1:
        raise InputError(f"x={args.x} must be an interior node")
    op = assemble(args.alpha, g)
    y = float(frac_laplacian(op, oracle(g.interior))[j - 1])
    ex = poly_exact_frac_laplacian(oracle, g.nodes[j], args.alpha)
    write_json(args.out, {"alpha": args.alpha, "nx": args.nx, "x": float(g.nodes[j]),
                          "discrete": y, "exact": ex, "abs_error": abs(y - ex)})
    return EXIT_OK


def _snapshot_rows(x_full, U, V):
    Uf = np.concatenate(([0], U, [0]))
    Vf = np.concatenate(([0], V, [0]))
    return zip(x_full, Uf.real, Uf.imag, np.abs(Uf), Vf.real, Vf.imag, np.abs(Vf))


SNAP_HEADER = ("x", "re_U", "im_U", "abs_U", "re_V", "im_V", "abs_V")


def _cmd_simulate(args, command) -> int:
    from .operators import Grid1D
    from .solver import run

    cfg = parse_config(args.config)
    out = Path(args.out or cfg.directory)
    snaps = args.snapshots if args.snapshots is not None else list(cfg.snapshots)
    m = cfg.model
    grid = Grid1D(m.a, m.b, cfg.nx)
    tau = m.T / cfg.nt
    want = {}
    for ts in snaps:
        if ts < 0 or ts > m.T * (1 + 1e-12):
            raise InputError(f"snapshot time {ts} outside [0, {m.T}]")
        want.setdefault(int(round(ts / tau)), ts)
    saved = {}

    def cb(k, st):
        if k in want:
            saved[k] = (st.U.copy(), st.V.copy(), st.t)

    u0, v0 = initial_functions(cfg)
    t0 = time.perf_counter()
    res = run(m, grid, cfg.nt, u0, v0, tol=cfg.tol, max_iter=cfg.max_iter,
              method=cfg.linear_solver, callbacks=(cb,), raise_on_failure=False)
    elapsed = time.perf_counter() - t0
    t_w = time.perf_counter()
    for k in sorted(saved):
        U, V, t = saved[k]
        write_csv(out / f"snapshot_t{t:.6g}.csv", SNAP_HEADER, _snapshot_rows(grid.nodes, U, V))
    t, W = res.trace.as_arrays()
    write_csv(out / "energy.csv", ("t", "W"), zip(t, W))
    its = res.iterations
    cfg_dict = config_to_dict(cfg)
    cfg_dict["output"]["snapshots"] = list(snaps)
    cfg_dict["output"]["directory"] = str(out)
    write_manifest(
        out,
        command=command,
        config=cfg_dict,
        timings={**res.timings, "total": elapsed, "write": time.perf_counter() - t_w},
        iterations=_iter_stats(its),
        acceptance={"energy_bound": res.bound_ok, "step_condition": res.step_condition_ok,
                    "completed": res.error is None},
        extra={"steps_completed": len(t) - 1},
    )
    if res.error is not None:
        print(f"fgl: numerical failure: {res.error}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _iter_stats(its) -> dict:
    if len(its) == 0:
        return {}
    return {"steps": int(len(its)), "max": int(its.max()), "median": float(np.median(its)),
            "mean": float(its.mean()), "total": int(its.sum())}


def _cmd_table1(args, command) -> int:
    from .harness import PUBLISHED_TABLE1, table1_experiment

    t0 = time.perf_counter()
    rows = table1_experiment()
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    ok = True
    csv_rows = []
    for r in rows:
        ref = {round(1 / n, 15): (e, o) for n, e, o in PUBLISHED_TABLE1[r.alpha]}[round(r.h, 15)]
        rel = abs(r.abs_error - ref[0]) / ref[0]
        dord = None if r.order is None else abs(r.order - ref[1])
        cell_ok = rel <= 0.02 and (dord is None or dord <= 0.05)
        ok &= cell_ok
        csv_rows.append((r.alpha, r.h, r.abs_error, r.order, ref[0], ref[1], rel, cell_ok))
    write_csv(out / "table1.csv",
              ("alpha", "h", "abs_error", "order", "published_abs_error", "published_order", "rel_dev", "ok"), csv_rows)
    write_manifest(out, command=command, config={"alphas": sorted(PUBLISHED_TABLE1), "inverse_h": [200, 220, 240, 260, 280],
                                                 "x_eval": 0.5},
                   timings={"total": elapsed}, acceptance={"table1_agreement": ok})
    return EXIT_OK if ok else EXIT_ACCEPT


def _cmd_converge(args, command) -> int:
    from .harness import (
        DEFAULT_REFERENCE,
        TABLE_ALPHAS,
        TABLE_PAIRS,
        convergence_table,
        convergence_windows,
    )

    alphas = tuple(args.alphas) if args.alphas else TABLE_ALPHAS
    t0 = time.perf_counter()
    rows = convergence_table(args.table, alphas)
    elapsed = time.perf_counter() - t0
    out = Path(args.out or f"table{args.table}_out")
    header = ("alpha", "tau", "h", "error_U", "error_V", "error_l2h", "temporal_order", "spatial_order",
              "error_ratio", "max_iterations", "median_iterations", "bound_ok", "step_condition_ok")
    write_csv(out / f"table{args.table}.csv", header, ([getattr(r, k) for k in header] for r in rows))
    flags = convergence_windows(rows)
    flags["iterations_le_50"] = all(r.max_iterations <= 50 for r in rows)
    write_manifest(out, command=command,
                   config={"table": args.table, "alphas": list(alphas), "pairs": [list(p) for p in TABLE_PAIRS],
                           "reference": list(DEFAULT_REFERENCE), "tol": 1e-14, "max_iter": 200},
                   timings={"total": elapsed},
                   iterations={"max": max(r.max_iterations for r in rows)},
                   acceptance=flags)
    return EXIT_OK if all(flags.values()) else EXIT_ACCEPT


def _cmd_example3(args, command) -> int:
    from .harness import example3_run

    t0 = time.perf_counter()
    runs = example3_run(args.variant, nx=args.nx, nt=args.nt, T=args.T)
    elapsed = time.perf_counter() - t0
    out = Path(args.out or f"example3_{args.variant}")
    index = []
    for i, r in enumerate(runs):
        tag = f"run{i}"
        write_csv(out / f"{tag}_absU.csv", ("t", *[f"x{j}" for j in range(len(r.x))]),
                  ([t, *row] for t, row in zip(r.times, r.absU)))
        write_csv(out / f"{tag}_absV.csv", ("t", *[f"x{j}" for j in range(len(r.x))]),
                  ([t, *row] for t, row in zip(r.times, r.absV)))
        write_csv(out / f"{tag}_x.csv", ("j", "x"), enumerate(r.x, start=1))
        write_csv(out / f"{tag}_energy.csv", ("t", "W"), zip(r.energy_t, r.energy_W))
        for ts, (U, V) in sorted(r.snapshots.items()):
            x_full = np.concatenate(([-10.0], r.x, [10.0]))
            write_csv(out / f"{tag}_snapshot_t{ts:g}.csv", SNAP_HEADER, _snapshot_rows(x_full, U, V))
        index.append({"tag": tag, "label": r.label, "params": r.params.as_dict(),
                      "final_W": float(r.energy_W[-1]), "max_iterations": int(r.iterations.max()),
                      "bound_ok": r.bound_ok, "step_condition_ok": r.step_condition_ok})
    acceptance = {"energy_bound": all(d["bound_ok"] for d in index if d["step_condition_ok"])}
    if args.variant == "fig7.4":
        W = [d["final_W"] for d in index]
        acceptance["decay_ordering"] = all(W[i] > W[i + 1] for i in range(len(W) - 1))
    write_manifest(out, command=command,
                   config={"variant": args.variant, "nx": args.nx, "nt": args.nt, "T": args.T},
                   timings={"total": elapsed},
                   iterations={"max": max(d["max_iterations"] for d in index)},
                   acceptance=acceptance, extra={"runs": index})
    return EXIT_OK if all(acceptance.values()) else EXIT_ACCEPT


def _cmd_verify(args, command) -> int:
    from .harness import invariant_suite, report_json

    t0 = time.perf_counter()
    rep = invariant_suite(args.seed)
    elapsed = time.perf_counter() - t0
    text = report_json(rep)
    print(text)
    if args.out:
        out = Path(args.out)
        from .output import _atomic_write

        _atomic_write(out / "report.json", text + "\n")
        write_manifest(out, command=command, config={"seed": args.seed}, timings={"total": elapsed},
                       acceptance={"all_checks": rep["passed"]})
    return EXIT_OK if rep["passed"] else EXIT_ACCEPT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
