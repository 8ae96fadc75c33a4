"""Nonlinearity-interval iteration and grid scans of the optimal partition."""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .auxnlp import (AuxiliaryProblem, AuxStatus, SQPOptions, Sense,
                     solve_auxiliary)
from .errors import (NotStrictlyComplementary, PartitionNotConstant,
                     SocoPartError)
from .partition import (DEFAULT_CLASS_TOL, OptimalPartition, classify,
                        delta_radius, is_strictly_complementary)
from .solver import ParametricInstance, SolveReport, solve

__all__ = [
    "ALG_CLASS_TOL",
    "GridPoint",
    "GridScan",
    "IntervalKind",
    "IntervalReport",
    "TraceRow",
    "Verdict",
    "classify_interval_kind",
    "grid_scan",
    "run_algorithm1",
    "run_direction",
]

log = logging.getLogger(__name__)

# Radii shrink to ~1e-7 near the interval ends, so the iteration classifies
# its (polished) anchors with a much tighter tolerance than the default.
ALG_CLASS_TOL = 1e-9
DELTA_MARGIN = 1e-12


class Verdict(enum.Enum):
    NONLINEARITY_SUBINTERVAL = "nonlinearity_subinterval"
    SINGLETON_CONDITIONS_FAIL = "singleton_conditions_fail"


class IntervalKind(enum.Enum):
    INVARIANCY = "invariancy"
    NONLINEARITY = "nonlinearity"


@dataclass(frozen=True)
class TraceRow:
    k: int
    value: float
    optimality: float | None
    violation: float | None
    delta: float
    sigma_min_F: float
    gap_to_limit: float | None = None


@dataclass
class DirectionTrace:
    sense: Sense
    rows: list[TraceRow] = field(default_factory=list)
    stopped: str = "converged"
    error: SocoPartError | None = None

    @property
    def limit(self) -> float:
        return self.rows[-1].value


@dataclass(frozen=True)
class IntervalReport:
    anchor: float
    alpha_hat: float
    beta_hat: float
    lower: DirectionTrace
    upper: DirectionTrace
    verdict: Verdict
    partition: OptimalPartition
    notes: tuple[str, ...] = ()


def _anchor(instance, eps, class_tol):
    rep = solve(instance, eps)
    part = classify(rep.triple, class_tol)
    if not is_strictly_complementary(part):
        raise NotStrictlyComplementary(
            f"no strictly complementary solution at eps={eps:.12g}: {part}",
            eps=eps)
    return rep, part, delta_radius(rep.triple, part).delta


def run_direction(instance: ParametricInstance, eps_bar: float, sense: Sense,
                  stop_tol: float = 1e-7, max_iter: int = 200,
                  class_tol: float = ALG_CLASS_TOL,
                  sqp: SQPOptions | None = None,
                  start: tuple[SolveReport, OptimalPartition] | None = None
                  ) -> DirectionTrace:
    """One sweep (backward for MIN, forward for MAX).

    ``max_iter`` bounds the number of auxiliary solves, so the trace holds at
    most ``max_iter + 1`` rows (row 0 is the anchor).
    """
    trace = DirectionTrace(sense)
    if start is None:
        rep, part, delta = _anchor(instance, eps_bar, class_tol)
    else:
        rep, part = start
        delta = delta_radius(rep.triple, part).delta
    trace.rows.append(TraceRow(0, float(eps_bar), None, None, delta,
                               rep.sigma_min_F))
    base = part
    value = float(eps_bar)
    for k in range(1, max_iter + 1):
        prob = AuxiliaryProblem(instance, rep.triple,
                                max(delta - DELTA_MARGIN, 0.0), sense)
        try:
            res = solve_auxiliary(prob, sqp, check=False)
        except SocoPartError as exc:
            trace.stopped, trace.error = "error", exc
            return trace
        new = res.eps_star
        if res.status is AuxStatus.NO_PROGRESS or abs(new - value) <= stop_tol:
            # converged: record the last step only if it moved at all
            if res.status is not AuxStatus.NO_PROGRESS:
                rep2 = _try_anchor(instance, new, class_tol, base)
                if rep2 is not None:
                    r2, _, d2 = rep2
                    trace.rows.append(TraceRow(k, new, res.kkt_residual,
                                               res.constraint_violation, d2,
                                               r2.sigma_min_F))
            trace.stopped = "converged"
            break
        got = _try_anchor(instance, new, class_tol, base)
        if got is None:
            trace.stopped = "numerically_degraded"
            trace.rows.append(TraceRow(k, new, res.kkt_residual,
                                       res.constraint_violation, math.nan,
                                       math.nan))
            return trace
        rep, part, delta = got
        value = new
        trace.rows.append(TraceRow(k, new, res.kkt_residual,
                                   res.constraint_violation, delta,
                                   rep.sigma_min_F))
    else:
        trace.stopped = "max_iter"
    return trace


def _try_anchor(instance, eps, class_tol, base):
    """Anchor at ``eps``, or ``None`` when strict complementarity or the
    base partition is lost numerically."""
    try:
        rep, part, delta = _anchor(instance, eps, class_tol)
    except (NotStrictlyComplementary, SocoPartError) as exc:
        log.info("anchor at %.12g rejected: %s", eps, exc)
        return None
    if not part.same_sets(base):
        log.info("partition changed at %.12g: %s -> %s", eps, base, part)
        return None
    return rep, part, delta


def run_algorithm1(instance: ParametricInstance, eps_bar: float,
                   stop_tol: float = 1e-7, max_iter: int = 200,
                   class_tol: float = ALG_CLASS_TOL,
                   sqp: SQPOptions | None = None) -> IntervalReport:
    """Backward and forward sweeps from ``eps_bar``.

    The reported distance-to-limit column is ``|value_k - value_final|``.

    Raises
    ------
    NotStrictlyComplementary
        The anchor has a nonempty T set.
    """
    rep, part, _ = _anchor(instance, eps_bar, class_tol)
    lower = run_direction(instance, eps_bar, Sense.MIN, stop_tol, max_iter,
                          class_tol, sqp, start=(rep, part))
    upper = run_direction(instance, eps_bar, Sense.MAX, stop_tol, max_iter,
                          class_tol, sqp, start=(rep, part))
    for tr in (lower, upper):
        lim = tr.limit
        tr.rows = [row if row.k == 0 else TraceRow(
            row.k, row.value, row.optimality, row.violation, row.delta,
            row.sigma_min_F, abs(row.value - lim)) for row in tr.rows]
    a, b = lower.limit, upper.limit
    verdict = (Verdict.NONLINEARITY_SUBINTERVAL if a < eps_bar < b
               else Verdict.SINGLETON_CONDITIONS_FAIL)
    notes = tuple(f"{tr.sense.value}: {tr.stopped}" for tr in (lower, upper)
                  if tr.stopped != "converged")
    return IntervalReport(float(eps_bar), a, b, lower, upper, verdict, part,
                          notes)


# --- grid oracle ---------------------------------------------------------------

@dataclass(frozen=True)
class GridPoint:
    eps: float
    partition: OptimalPartition | None
    report: SolveReport | None = field(default=None, repr=False)
    error: str | None = None

    @property
    def label(self) -> str:
        return str(self.partition) if self.partition is not None else "UNKNOWN"


@dataclass(frozen=True)
class GridScan:
    grid: np.ndarray
    points: tuple[GridPoint, ...]
    changes: tuple[tuple[float, float], ...]


def grid_scan(instance: ParametricInstance, lo: float | None = None,
              hi: float | None = None, n_points: int | None = None, *,
              grid=None, tol: float = DEFAULT_CLASS_TOL,
              workers: int | None = None) -> GridScan:
    """Partition at each grid point and the cells where it changes.

    Either pass ``lo, hi, n_points`` (equispaced, endpoints included) or an
    explicit strictly increasing ``grid``. Points are independent, so
    ``workers > 1`` solves them on a thread pool; results keep grid order.
    """
    if grid is None:
        if lo is None or hi is None or n_points is None:
            raise ValueError("give lo, hi, n_points or an explicit grid")
        if not lo < hi or n_points < 2:
            raise ValueError("need lo < hi and n_points >= 2")
        grid = np.linspace(lo, hi, n_points)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    def one(eps):
        try:
            rep = solve(instance, eps)
            return GridPoint(eps, classify(rep.triple, tol), rep)
        except SocoPartError as exc:
            return GridPoint(eps, None, None, exc.code)

    eps_list = [float(e) for e in grid]
    if workers is not None and workers > 1 and len(eps_list) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(one, eps_list))
    else:
        points = [one(e) for e in eps_list]
    changes = []
    for a, b in zip(points, points[1:]):
        if a.partition is None or b.partition is None \
                or not a.partition.same_sets(b.partition):
            changes.append((a.eps, b.eps))
    return GridScan(grid, tuple(points), tuple(changes))


def classify_interval_kind(instance: ParametricInstance, interval,
                           samples: int = 5, *, tol: float = DEFAULT_CLASS_TOL,
                           direction_tol: float = 1e-6) -> IntervalKind:
    """Invariancy vs nonlinearity on an open interval by sampling.

    Boundary-block directions ``x^i/||x^i||`` (i in R, T2) and
    ``s^i/||s^i||`` (i in R, T3) are compared across interior samples.

    Raises
    ------
    PartitionNotConstant
        The samples disagree on the partition.
    """
    lo, hi = (float(v) for v in interval)
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    eps = lo + (hi - lo) * np.arange(1, samples + 1) / (samples + 1)
    scan = grid_scan(instance, grid=eps, tol=tol)
    parts = [p.partition for p in scan.points]
    if any(p is None for p in parts) or any(not p.same_sets(parts[0])
                                            for p in parts):
        raise PartitionNotConstant(
            "partition varies across samples: "
            + ", ".join(p.label for p in scan.points))
    part = parts[0]
    dirs = []
    for p in scan.points:
        t = p.report.triple
        xb, sb = t.x_blocks(), t.s_blocks()
        vec = [xb[i] / np.linalg.norm(xb[i]) for i in sorted(part.R | part.T2)]
        vec += [sb[i] / np.linalg.norm(sb[i]) for i in sorted(part.R | part.T3)]
        dirs.append(np.concatenate(vec) if vec else np.zeros(0))
    spread = max((np.abs(d - dirs[0]).max(initial=0.0) for d in dirs), default=0.0)
    return (IntervalKind.NONLINEARITY if spread > direction_tol
            else IntervalKind.INVARIANCY)
