"""Tables, CSV and value-function samples for reports."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SocoPartError
from .solver import ParametricInstance, solve

__all__ = [
    "RunReport",
    "Table",
    "ValueFunctionSamples",
    "concavity_violations",
    "emit_value_function",
]


def _cell(v, digits: int) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return f"{v:.{digits}g}"
    return str(v)


@dataclass
class Table:
    """Rows of mixed cells rendered at 6 digits (text) or 17 (CSV)."""

    columns: list[str]
    rows: list[list] = field(default_factory=list)
    title: str = ""

    def add(self, *cells) -> None:
        if len(cells) != len(self.columns):
            raise ValueError(f"row has {len(cells)} cells, table has "
                             f"{len(self.columns)} columns")
        self.rows.append(list(cells))

    def render(self, fmt: str = "table") -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "table":
            return self.to_text()
        raise ValueError(f"unknown format {fmt!r}")

    def to_text(self) -> str:
        body = [[_cell(v, 6) for v in row] for row in self.rows]
        widths = [max([len(c)] + [len(r[j]) for r in body])
                  for j, c in enumerate(self.columns)]
        lines = [self.title] if self.title else []
        lines.append("  ".join(c.rjust(w) for c, w in zip(self.columns, widths)))
        lines.append("  ".join("-" * w for w in widths))
        lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in body]
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.title:
            writer.writerow([f"# {self.title}"])
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(v, 17) for v in row])
        return buf.getvalue().rstrip("\n")


@dataclass(frozen=True)
class ValueFunctionSamples:
    eps: np.ndarray
    psi: np.ndarray
    errors: tuple[str | None, ...]
    violations: tuple[int, ...]

    @property
    def concave(self) -> bool:
        return not self.violations

    def table(self) -> Table:
        t = Table(["eps", "psi", "status"], title="optimal value function")
        for e, p, err in zip(self.eps, self.psi, self.errors):
            t.add(float(e), float(p), err or "ok")
        return t


def concavity_violations(eps, psi, tol: float = 1e-7) -> tuple[int, ...]:
    """Interior indices where ``psi`` falls below the chord of its neighbours.

    NaN samples (failed solves) are skipped.
    """
    eps, psi = np.asarray(eps, float), np.asarray(psi, float)
    ok = np.flatnonzero(np.isfinite(psi))
    bad = []
    for a, b, c in zip(ok, ok[1:], ok[2:]):
        lam = (eps[c] - eps[b]) / (eps[c] - eps[a])
        chord = lam * psi[a] + (1 - lam) * psi[c]
        if psi[b] < chord - tol * (1 + abs(chord)):
            bad.append(int(b))
    return tuple(bad)


def emit_value_function(instance: ParametricInstance, grid,
                        tol: float = 1e-7) -> ValueFunctionSamples:
    """Sample ``psi(eps) = (c + eps*cbar)'x*(eps)`` on a grid.

    Failed solves give NaN with the error code in ``errors``.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    psi, errors = [], []
    for eps in grid:
        try:
            psi.append(solve(instance, float(eps)).triple.objective)
            errors.append(None)
        except SocoPartError as exc:
            psi.append(math.nan)
            errors.append(exc.code)
    psi = np.array(psi)
    return ValueFunctionSamples(grid, psi, tuple(errors),
                                concavity_violations(grid, psi, tol))


@dataclass
class RunReport:
    """One CLI invocation: command echo, instance digest, payload tables."""

    command: str
    digest: str
    tables: list[Table] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def render(self, fmt: str = "table") -> str:
        head = [f"# command: {self.command}", f"# instance: {self.digest}"]
        body = [t.render(fmt) for t in self.tables]
        tail = list(self.lines) + [f"# wall time: {self.wall_time:.3f} s"]
        if fmt == "csv":
            tail = [ln if ln.startswith("#") else f"# {ln}" for ln in tail]
        return "\n\n".join(["\n".join(head)] + body + ["\n".join(tail)]) + "\n"
