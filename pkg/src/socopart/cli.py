"""Command-line front end: ``socopart <command> INSTANCE [options]``.

``INSTANCE`` is a path to an instance file or the name of a bundled one
(``problem5``, ``problem6``, ...). Exit status: 0 success, 2 usage or bad
input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import shlex
import sys
import time

import numpy as np

from . import instance_io
from .errors import DimensionMismatch, ParseError, SocoPartError
from .intervals import grid_scan, run_algorithm1
from .partition import (classify, delta_radius, dual_nondegenerate,
                        is_strictly_complementary, primal_nondegenerate)
from .reporting import RunReport, Table, concavity_violations
from .solver import solve
from .transition import TransitionVerdict, classify_point, growth

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("socopart")


def _threads() -> int:
    raw = os.environ.get("SOCO_PART_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise UsageError(f"SOCO_PART_THREADS must be an integer, got {raw!r}")
        if n < 1:
            raise UsageError("SOCO_PART_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


class UsageError(Exception):
    pass


def _load(ref: str):
    if os.path.exists(ref):
        return instance_io.read_instance(ref)
    if ref in instance_io.BUNDLED:
        return instance_io.load_bundled(ref)
    raise UsageError(f"no instance file or bundled instance named {ref!r} "
                     f"(bundled: {', '.join(instance_io.BUNDLED)})")


def _vec(v) -> str:
    return "[" + ", ".join(f"{x:.6g}" for x in v) + "]"


def cmd_solve(inst, args, rep: RunReport):
    out = solve(inst, args.at)
    t = out.triple
    part = classify(t, args.class_tol)
    tab = Table(["quantity", "value"], title=f"solution at eps = {args.at:g}")
    tab.add("psi", t.objective)
    tab.add("duality_gap", t.gap)
    tab.add("primal_residual", t.primal_residual)
    tab.add("dual_residual", t.dual_residual)
    tab.add("sigma_min_gradF", out.sigma_min_F)
    tab.add("iterations", out.iterations)
    for name, vec in (("x", t.x), ("y", t.y), ("s", t.s)):
        for j, val in enumerate(vec, start=1):
            tab.add(f"{name}[{j}]", float(val))
    rep.tables.append(tab)
    rep.lines.append(f"partition: {part}")
    rep.lines.append("psi is the optimal value function (c + eps*cbar)'x*(eps); "
                     "it is concave in eps")


def cmd_partition(inst, args, rep: RunReport):
    out = solve(inst, args.at)
    part = classify(out.triple, args.class_tol)
    tab = Table(["block", "set", "x", "s"], title=f"optimal partition at eps = {args.at:g}")
    for i, (xb, sb) in enumerate(zip(out.triple.x_blocks(), out.triple.s_blocks())):
        tab.add(i + 1, part.label(i), _vec(xb), _vec(sb))
    rep.tables.append(tab)
    rep.lines.append(f"partition (B, N, R, (T1, T2, T3)): {part}")
    rep.lines.append("primal nondegenerate: "
                     f"{primal_nondegenerate(out.triple, inst.A, part)}")
    rep.lines.append("dual nondegenerate: "
                     f"{dual_nondegenerate(out.triple, inst.A, part)}")
    rep.lines.append(f"sigma_min(gradF): {out.sigma_min_F:.3e}")
    if is_strictly_complementary(part):
        d = delta_radius(out.triple, part)
        rep.lines.append(f"delta: {d.delta:.6g} (B {d.delta_B:.6g}, "
                         f"N {d.delta_N:.6g}, R {d.delta_R:.6g})")
    else:
        rep.lines.append("not strictly complementary (T sets nonempty)")
    if part.low_confidence:
        rep.lines.append("LOW CONFIDENCE blocks (near a tolerance threshold): "
                         + ", ".join(str(i + 1) for i in sorted(part.low_confidence)))


def cmd_nonlinearity(inst, args, rep: RunReport):
    out = run_algorithm1(inst, args.start, stop_tol=args.stop_tol,
                         max_iter=args.max_iter)
    for tr, sym in ((out.lower, "alpha"), (out.upper, "beta")):
        tab = Table(["k", f"{sym}_k", "Optim.", "Viol.", f"delta({sym}_k)",
                     "sigma_min(gradF)", f"|{sym}_k - {sym}_hat|"],
                    title=f"{'backward' if sym == 'alpha' else 'forward'} sweep "
                          f"({tr.stopped})")
        for r in tr.rows:
            tab.add(r.k, r.value, r.optimality, r.violation, r.delta,
                    r.sigma_min_F, r.gap_to_limit)
        rep.tables.append(tab)
    rep.lines.append(f"partition at start: {out.partition}")
    rep.lines.append(f"alpha_hat = {out.alpha_hat:.9g}, beta_hat = {out.beta_hat:.9g}")
    rep.lines.append(f"verdict: {out.verdict.value}")
    for note in out.notes:
        rep.lines.append(f"note: {note}")
    if any(tr.stopped == "error" for tr in (out.lower, out.upper)):
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_transition(inst, args, rep: RunReport):
    out = classify_point(inst, args.at, K=args.order, deriv_tol=args.deriv_tol)
    rep.lines.append(f"partition at eps = {args.at:g}: {out.partition}")
    rep.lines.append(f"primal nondegenerate: {out.primal_nondegenerate}, "
                     f"dual nondegenerate: {out.dual_nondegenerate}")
    if out.series is not None:
        keys = sorted(out.series.quantities[0], key=lambda q: (q[1], q[0]))
        cols = ["k"] + [f"{kind}{i + 1}^(k)" for kind, i in keys] \
            + ["threshold", "solve_residual"]
        tab = Table(cols, title="derivatives of the tested multipliers")
        for k in range(1, out.K + 1):
            sg = out.series.signed[k - 1]
            tab.add(k, *[sg[q] for q in keys], out.deriv_tol * growth(k),
                    out.series.residuals[k - 1])
        rep.tables.append(tab)
        rep.lines.append(f"sigma_min(gradG): {out.series.sigma_min_G:.3e}")
    rep.lines.append(_verdict_line(out))
    for note in out.notes:
        rep.lines.append(f"note: {note}")


def _verdict_line(out) -> str:
    if out.verdict is TransitionVerdict.TRANSITION_POINT:
        name = f"{out.kind}_{out.block + 1}"
        d = "'" if out.order == 1 else f"^({out.order})"
        return f"TRANSITION POINT (order {out.order}, {name}{d} = {out.value:.6g})"
    if out.verdict is TransitionVerdict.NONLINEARITY_MEMBER:
        return (f"NONLINEARITY MEMBER (no nonzero derivative up to order "
                f"{out.K}; higher orders unchecked)")
    return "INAPPLICABLE (" + "; ".join(out.notes) + ")"


def cmd_scan(inst, args, rep: RunReport):
    if args.points < 2 or not args.lo < args.hi:
        raise UsageError("scan needs --from < --to and --points >= 2")
    scan = grid_scan(inst, args.lo, args.hi, args.points, tol=args.class_tol,
                     workers=_threads())
    tab = Table(["eps", "partition", "psi", "status"], title="grid scan")
    psi = []
    for p in scan.points:
        val = p.report.triple.objective if p.report is not None else float("nan")
        psi.append(val)
        tab.add(p.eps, p.label, val, p.error or "ok")
    rep.tables.append(tab)
    for a, b in scan.changes:
        rep.lines.append(f"partition changes in [{a:.6g}, {b:.6g}]")
    bad = concavity_violations(scan.grid, np.array(psi))
    rep.lines.append("psi concave on the samples" if not bad else
                     "psi NOT concave at eps = "
                     + ", ".join(f"{scan.grid[i]:.6g}" for i in bad))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("instance", help="instance file or bundled name")
    common.add_argument("--format", choices=("table", "csv"), default="table")
    common.add_argument("--class-tol", type=float, default=1e-6,
                        help="classification tolerance (default 1e-6)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(
        prog="socopart",
        description="Parametric analysis of second-order cone programs with a "
                    "linearly perturbed objective.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="solve at one eps")
    s.add_argument("--at", type=float, required=True)
    s.set_defaults(func=cmd_solve)
    s = sub.add_parser("partition", parents=[common], help="optimal partition at eps")
    s.add_argument("--at", type=float, required=True)
    s.set_defaults(func=cmd_partition)
    s = sub.add_parser("nonlinearity", parents=[common],
                       help="auxiliary-problem iteration for a nonlinearity subinterval")
    s.add_argument("--start", type=float, required=True)
    s.add_argument("--stop-tol", type=float, default=1e-7)
    s.add_argument("--max-iter", type=int, default=200)
    s.set_defaults(func=cmd_nonlinearity)
    s = sub.add_parser("transition", parents=[common],
                       help="derivative test for a transition point")
    s.add_argument("--at", type=float, required=True)
    s.add_argument("--order", type=int, default=10)
    s.add_argument("--deriv-tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_transition)
    s = sub.add_parser("scan", parents=[common], help="partition on a grid")
    s.add_argument("--from", dest="lo", type=float, required=True)
    s.add_argument("--to", dest="hi", type=float, required=True)
    s.add_argument("--points", type=int, required=True)
    s.set_defaults(func=cmd_scan)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "max_iter", 1) < 1 or getattr(args, "order", 1) < 1:
        print("socopart: error: --max-iter and --order must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        inst = _load(args.instance)
        rep = RunReport("socopart " + shlex.join(argv),
                        instance_io.instance_digest(inst))
        code = args.func(inst, args, rep) or EXIT_OK
    except (UsageError, ParseError, DimensionMismatch) as exc:
        print(f"socopart: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SocoPartError as exc:
        print(f"socopart: numerical failure [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    rep.wall_time = time.perf_counter() - t0
    sys.stdout.write(rep.render(args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
