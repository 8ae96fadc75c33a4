"""Auxiliary problems: extreme parameter values near an anchor solution.

For an anchor ``(x_bar, y_bar, s_bar)`` at ``eps_bar`` and a radius ``delta``
the problem is::

    min / max  eps
    s.t.       A x = b,   A'y + s = c + eps*cbar,   x o s = 0,
               ||x - x_bar||^2 <= delta^2,   ||s - s_bar||^2 <= delta^2,
               eps inside the instance domain (when one is given).

The linear equalities are eliminated: ``x = x_p + N xi`` with ``N`` a null
space basis of ``A`` and ``s = c + eps*cbar - A'y``. What remains is a
bilinear equality system in ``v = (xi, y, eps)`` plus at most four
inequalities, handled by a trust-region SQP with an l1 merit function.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .cones import block_arrow_matrix, jordan_product_flat
from .errors import NoProgress, PartitionMismatch, SQPDiverged, SocoPartError
from .partition import (DEFAULT_CLASS_TOL, OptimalPartition, classify,
                        delta_radius)
from .solver import (ParametricInstance, PrimalDualTriple, SolveReport,
                     make_triple, solve)

__all__ = [
    "AuxStatus",
    "AuxiliaryProblem",
    "AuxiliaryResult",
    "SQPOptions",
    "Sense",
    "post_check",
    "residuals",
    "solve_auxiliary",
]

log = logging.getLogger(__name__)


class Sense(enum.Enum):
    MIN = "min"
    MAX = "max"


class AuxStatus(enum.Enum):
    OPTIMAL = "optimal"
    NO_PROGRESS = "no_progress"


@dataclass(frozen=True)
class AuxiliaryProblem:
    instance: ParametricInstance
    anchor: PrimalDualTriple
    delta: float
    sense: Sense

    def __post_init__(self):
        if not np.isfinite(self.delta) or self.delta < 0:
            raise ValueError(f"delta must be finite and >= 0, got {self.delta}")
        if self.anchor.x.shape != (self.instance.n,):
            raise ValueError("anchor does not match the instance")


@dataclass(frozen=True)
class SQPOptions:
    max_iter: int = 300
    kkt_tol: float = 1e-10
    feas_tol: float = 1e-12
    progress_tol: float = 1e-12
    restarts: int = 3
    restart_scale: float = 1e-4
    seed: int = 0


@dataclass(frozen=True)
class AuxiliaryResult:
    eps_star: float
    witness: PrimalDualTriple
    kkt_residual: float
    constraint_violation: float
    iterations: int
    status: AuxStatus
    active: tuple[str, ...] = ()
    check: SolveReport | None = field(default=None, repr=False)


# --- problem in reduced coordinates ----------------------------------------

class _Reduced:
    """Bookkeeping for the elimination of the linear equalities."""

    def __init__(self, prob: AuxiliaryProblem):
        inst = prob.instance
        A = inst.A
        self.inst = inst
        self.st = inst.structure
        n, m = inst.n, inst.m
        self.n, self.m = n, m
        self.x_p = np.linalg.lstsq(A, inst.b, rcond=None)[0]
        _, sv, vt = np.linalg.svd(A)
        rank = int(np.sum(sv > 1e-12 * sv[0])) if sv.size else 0
        self.N = vt[rank:].T
        self.k = self.N.shape[1]
        self.dim = self.k + m + 1
        self.Dx = np.zeros((n, self.dim))
        self.Dx[:, :self.k] = self.N
        self.Ds = np.zeros((n, self.dim))
        self.Ds[:, self.k:self.k + m] = -A.T
        self.Ds[:, -1] = inst.cbar
        self.sign = 1.0 if prob.sense is Sense.MIN else -1.0
        self.delta = float(prob.delta)
        self.x_bar = prob.anchor.x
        self.s_bar = prob.anchor.s
        lo, hi = inst.domain if inst.domain is not None else (-np.inf, np.inf)
        self.lo, self.hi = lo, hi
        self.names = ["ball_x", "ball_s"]
        if np.isfinite(lo):
            self.names.append("eps_lo")
        if np.isfinite(hi):
            self.names.append("eps_hi")

    def start(self, anchor: PrimalDualTriple) -> np.ndarray:
        xi = self.N.T @ (anchor.x - self.x_p)
        return np.concatenate([xi, anchor.y, [anchor.eps]])

    def xs(self, v):
        x = self.x_p + self.N @ v[:self.k]
        y = v[self.k:self.k + self.m]
        s = self.inst.cost(v[-1]) - self.inst.A.T @ y
        return x, y, s

    def eval(self, v):
        """Equalities ``h``, Jacobian ``J``, scaled inequalities ``g``, ``G``."""
        x, _, s = self.xs(v)
        h = jordan_product_flat(self.st, x, s)
        J = (block_arrow_matrix(self.st, x) @ self.Ds
             + block_arrow_matrix(self.st, s) @ self.Dx)
        g, G = self._ineq(v, x, s)
        return h, J, g, G

    def _ineq(self, v, x, s):
        # balls scaled by 1/(2 delta) so that g ~ ||x - x_bar|| - delta
        d = max(self.delta, 1e-300)
        dx, ds = x - self.x_bar, s - self.s_bar
        g = [(dx @ dx - d * d) / (2 * d), (ds @ ds - d * d) / (2 * d)]
        G = [self.Dx.T @ dx / d, self.Ds.T @ ds / d]
        e = np.zeros(self.dim)
        e[-1] = 1.0
        if np.isfinite(self.lo):
            g.append(self.lo - v[-1])
            G.append(-e)
        if np.isfinite(self.hi):
            g.append(v[-1] - self.hi)
            G.append(e)
        return np.array(g), np.array(G)

    def hessian(self, lam, mu) -> np.ndarray:
        Ll = block_arrow_matrix(self.st, lam)
        H = self.Dx.T @ Ll @ self.Ds
        H = H + H.T
        d = max(self.delta, 1e-300)
        H += (mu[0] / d) * (self.Dx.T @ self.Dx)
        H += (mu[1] / d) * (self.Ds.T @ self.Ds)
        return H

    def grad_f(self) -> np.ndarray:
        gf = np.zeros(self.dim)
        gf[-1] = self.sign
        return gf


# --- quadratic subproblem ---------------------------------------------------

def _null_split(C, r, rank_tol=1e-10):
    """Minimum-norm solution of ``C d = r`` and a null-space basis of ``C``."""
    dim = C.shape[1]
    if C.shape[0] == 0:
        return np.zeros(dim), np.eye(dim), 0.0
    U, S, Vt = np.linalg.svd(C)
    k = int(np.sum(S > rank_tol * S[0])) if S.size and S[0] > 0 else 0
    d0 = Vt[:k].T @ ((U[:, :k].T @ r) / S[:k])
    resid = float(np.linalg.norm(C @ d0 - r, np.inf))
    return d0, Vt[k:].T, resid


def _eqp(H, gq, C, r, nu):
    """``min gq'd + d'(H + nu I)d/2`` s.t. ``C d = r`` with a convexified
    reduced Hessian. Returns ``(d, multipliers, consistency residual)``."""
    d0, Z, resid = _null_split(C, r)
    if Z.shape[1]:
        Hr = Z.T @ H @ Z
        Hr = 0.5 * (Hr + Hr.T)
        w, V = np.linalg.eigh(Hr)
        floor = 1e-10 * max(1.0, np.abs(w).max(initial=0.0))
        w = np.maximum(np.abs(w), floor) + nu
        rhs = -Z.T @ (gq + H @ d0 + nu * d0)
        d = d0 + Z @ (V @ ((V.T @ rhs) / w))
    else:
        d = d0
    if C.shape[0]:
        mult = np.linalg.lstsq(C.T, -(gq + H @ d + nu * d), rcond=None)[0]
    else:
        mult = np.zeros(0)
    return d, mult, resid


def _qp(H, gf, h, J, g, G, nu, feas_tol):
    """Enumerate active sets of the inequality linearizations."""
    best = None
    q = len(g)
    for size in range(q + 1):
        for S in itertools.combinations(range(q), size):
            S = list(S)
            C = np.vstack([J, G[S]]) if S else J
            r = np.concatenate([-h, -g[S]])
            d, mult, resid = _eqp(H, gf, C, r, nu)
            lin = g + G @ d
            others = [i for i in range(q) if i not in S]
            mu = np.zeros(q)
            mu[S] = mult[J.shape[0]:]
            infeas = max(0.0, lin[others].max(initial=0.0)) + resid
            ok = infeas <= 1e-9 * (1 + np.abs(g).max(initial=0)) and \
                (mu >= -1e-12).all()
            model = gf @ d + 0.5 * d @ H @ d
            key = (not ok, infeas if not ok else 0.0, model)
            if best is None or key < best[0]:
                best = (key, d, mult[:J.shape[0]], np.maximum(mu, 0.0), S)
    _, d, lam, mu, S = best
    return d, lam, mu, S


# --- SQP driver ---------------------------------------------------------------

def _viol(h, g):
    return max(np.abs(h).max(initial=0.0), max(0.0, g.max(initial=0.0)))


def _merit(red, v, rho):
    x, _, s = red.xs(v)
    h = jordan_product_flat(red.st, x, s)
    g, _ = red._ineq(v, x, s)
    return red.sign * v[-1] + rho * (np.abs(h).sum() + np.maximum(g, 0).sum())


def _active(g, delta, feas_tol) -> list[int]:
    """Inequalities within a sliver of the boundary (``g`` is scaled)."""
    return [i for i in range(len(g)) if g[i] >= -(feas_tol + 1e-8 * delta)]


def _kkt_check(gf, J, G, g, S, feas_tol, scaled=False):
    C = np.vstack([J, G[S]]) if S else J
    mult = np.linalg.lstsq(C.T, -gf, rcond=None)[0]
    mu = mult[J.shape[0]:]
    res = float(np.abs(gf + C.T @ mult).max())
    res = max(res, float(np.maximum(-mu, 0).max(initial=0.0)))
    if scaled:
        # large multipliers make the absolute residual unreachable in floats
        res /= max(100.0, (float(np.abs(mult).mean()) if mult.size else 0.0)) / 100.0
    return res


def _sqp(red: _Reduced, v0: np.ndarray, opts: SQPOptions):
    v = v0.copy()
    gf = red.grad_f()
    lam = np.zeros(red.n)
    mu = np.zeros(len(red.names))
    rho = 1.0
    nu = None
    stalls = 0
    for it in range(1, opts.max_iter + 1):
        h, J, g, G = red.eval(v)
        H = red.hessian(lam, mu)
        if nu is None:
            # first step: move about half the radius along the tangent
            _, Z, _ = _null_split(J, -h)
            pg = np.linalg.norm(Z @ (Z.T @ gf)) if Z.shape[1] else 0.0
            nu = 2.0 * pg / max(red.delta, 1e-300) if pg > 0 else 1.0
        d, lam_new, mu_new, S_new = _qp(H, gf, h, J, g, G, nu, opts.feas_tol)
        viol = _viol(h, g)
        act = _active(g, red.delta, opts.feas_tol)
        kkt = _kkt_check(gf, J, G, g, act, opts.feas_tol)
        kkt_s = _kkt_check(gf, J, G, g, act, opts.feas_tol, scaled=True)
        if viol <= opts.feas_tol and kkt_s <= opts.kkt_tol:
            return v, it, kkt, act
        if np.linalg.norm(d, np.inf) <= 1e-14 * (1 + np.abs(v).max()):
            stalls += 1
            if stalls >= 3:
                raise SQPDiverged(f"stalled with KKT residual {kkt:.2e}",
                                  iteration=it)
        else:
            stalls = 0
        rho = max(rho, 1.5 * max(np.abs(lam_new).max(initial=0.0),
                                 mu_new.max(initial=0.0)) + 1e-3)
        phi = _merit(red, v, rho)
        lin_viol = (np.abs(h + J @ d).sum()
                    + np.maximum(g + G @ d, 0).sum())
        pred = (-(gf @ d) - 0.5 * d @ H @ d
                + rho * (np.abs(h).sum() + np.maximum(g, 0).sum() - lin_viol))
        # merit values are only known to about rho * eps_mach * |x||s|
        x0, _, s0 = red.xs(v)
        noise = 10 * np.finfo(float).eps * (
            1 + abs(v[-1]) + rho * (1 + np.linalg.norm(x0) * np.linalg.norm(s0)))
        accepted = False
        for trial in (d, None):
            if trial is None:
                # second-order correction against the Maratos effect
                x, _, s = red.xs(v + d)
                h_t = jordan_product_flat(red.st, x, s)
                g_t, _ = red._ineq(v + d, x, s)
                C = np.vstack([J, G[S_new]]) if S_new else J
                corr, _, _ = _null_split(C, -np.concatenate([h_t, g_t[S_new]]))
                trial = d + corr
            ared = phi - _merit(red, v + trial, rho)
            if pred > 0 and ared >= 1e-4 * pred or (pred <= 0 and ared > 0):
                accepted = True
                break
            if pred <= noise and ared >= -noise:
                accepted = True
                break
        log.debug("it=%d nu=%.2e pred=%.3e ared=%.3e rho=%.2e S=%s viol=%.1e",
                  it, nu, pred, ared, rho, S_new, viol)
        if accepted:
            v = v + trial
            lam, mu = lam_new, mu_new
            if pred > 0 and ared >= 0.75 * pred:
                nu = nu / 4.0 if nu > 1e-12 else 0.0
        else:
            nu = max(4.0 * nu, 1e-6)
            if nu > 1e16:
                raise SQPDiverged("trust region collapsed", iteration=it)
    raise SQPDiverged(f"no KKT point within {opts.max_iter} iterations",
                      iteration=opts.max_iter)


def _full_violation(prob: AuxiliaryProblem, triple: PrimalDualTriple) -> float:
    inst = prob.instance
    r = [np.abs(inst.A @ triple.x - inst.b).max(initial=0.0),
         np.abs(inst.A.T @ triple.y + triple.s - inst.cost(triple.eps)).max(),
         np.abs(jordan_product_flat(inst.structure, triple.x, triple.s)).max(),
         max(0.0, float(np.sum((triple.x - prob.anchor.x) ** 2)) - prob.delta ** 2),
         max(0.0, float(np.sum((triple.s - prob.anchor.s) ** 2)) - prob.delta ** 2)]
    if inst.domain is not None:
        lo, hi = inst.domain
        r += [max(0.0, lo - triple.eps), max(0.0, triple.eps - hi)]
    return float(max(r))


def residuals(candidate: PrimalDualTriple, prob: AuxiliaryProblem
              ) -> tuple[float, float]:
    """``(optimality, violation)`` of a candidate point.

    Violation is the largest residual among all constraints, with the balls
    in squared form. Optimality is the least-squares KKT stationarity
    residual with the balls (and domain bounds) within ``1e-8`` of active
    treated as active.
    """
    red = _Reduced(prob)
    v = red.start(candidate)
    h, J, g, G = red.eval(v)
    opt = _kkt_check(red.grad_f(), J, G, g, _active(g, red.delta, 1e-12), 0.0)
    return opt, _full_violation(prob, candidate)


def post_check(instance: ParametricInstance, eps: float,
               partition: OptimalPartition, tol: float | None = None
               ) -> SolveReport:
    """Re-solve at ``eps`` and insist on the same partition.

    Raises
    ------
    PartitionMismatch
        The partition at ``eps`` differs from ``partition``.
    """
    tol = partition.tol if tol is None else tol
    rep = solve(instance, eps)
    got = classify(rep.triple, tol)
    if not got.same_sets(partition):
        raise PartitionMismatch(
            f"partition at eps={eps:.12g} is {got}, anchor has {partition}",
            eps=eps, got=str(got), expected=str(partition))
    return rep


def solve_auxiliary(prob: AuxiliaryProblem, opts: SQPOptions | None = None, *,
                    check: bool = True, class_tol: float = DEFAULT_CLASS_TOL,
                    raise_no_progress: bool = False) -> AuxiliaryResult:
    """Solve the auxiliary problem from the anchor.

    With ``check`` and a radius below the anchor's certified radius, the
    result is re-solved and its partition compared with the anchor's.

    Raises
    ------
    SQPDiverged
        All starts failed.
    PartitionMismatch
        The post-check failed.
    NoProgress
        Only with ``raise_no_progress``; otherwise reported in ``status``.
    """
    opts = opts or SQPOptions()
    anchor = prob.anchor
    # a radius below the feasibility tolerance cannot move the anchor
    if prob.delta <= opts.feas_tol:
        if raise_no_progress:
            raise NoProgress(f"radius {prob.delta:g} leaves only the anchor")
        return AuxiliaryResult(anchor.eps, anchor, 0.0,
                               _full_violation(prob, anchor), 0,
                               AuxStatus.NO_PROGRESS)
    red = _Reduced(prob)
    v0 = red.start(anchor)
    rng = np.random.default_rng(opts.seed)
    last_err: SocoPartError | None = None
    for attempt in range(opts.restarts + 1):
        start = v0
        if attempt:
            p = rng.normal(size=v0.size)
            start = v0 + opts.restart_scale * prob.delta * p / np.linalg.norm(p)
        try:
            v, iters, kkt, S = _sqp(red, start, opts)
            break
        except (SQPDiverged, np.linalg.LinAlgError, sla.LinAlgError) as exc:
            last_err = exc if isinstance(exc, SQPDiverged) else SQPDiverged(str(exc))
            log.debug("SQP attempt %d failed: %s", attempt, exc)
    else:
        raise last_err
    x, y, s = red.xs(v)
    witness = make_triple(prob.instance, v[-1], x, y, s)
    viol = _full_violation(prob, witness)
    eps_star = float(v[-1])
    status = AuxStatus.OPTIMAL
    if abs(eps_star - anchor.eps) <= opts.progress_tol * (1 + abs(anchor.eps)):
        status = AuxStatus.NO_PROGRESS
        if raise_no_progress:
            raise NoProgress(f"auxiliary optimum equals the anchor {anchor.eps}")
    rep = None
    if check and status is AuxStatus.OPTIMAL:
        part = classify(anchor, class_tol)
        if not part.T:
            radius = delta_radius(anchor, part).delta
            if prob.delta < radius:
                rep = post_check(prob.instance, eps_star, part)
    return AuxiliaryResult(eps_star, witness, kkt, viol, iters, status,
                           tuple(red.names[i] for i in S), rep)
