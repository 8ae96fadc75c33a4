"""Primal-dual interior-point solver for SOCO problems at a fixed parameter.

Solves the pair

    min  (c + eps*cbar)' x   s.t.  A x = b,  x in K
    max  b' y                s.t.  A' y + s = c + eps*cbar,  s in K

with Nesterov-Todd scaling and Mehrotra's predictor-corrector. The central
path is followed down to a very small barrier parameter so that the limit
point approximates a maximally complementary solution. When the limit is
strictly complementary and the KKT Jacobian is well conditioned, a few Newton
steps on the KKT map polish the answer to machine precision.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .cones import (BlockStatus, ConeStructure, block_arrow_matrix,
                    classify_block, jordan_product_flat)
from .errors import (InfeasibleOrUnbounded, MaxIterations, NumericalBreakdown)

__all__ = [
    "ParametricInstance",
    "PrimalDualTriple",
    "SolveReport",
    "check_interior_point",
    "jacobian_F",
    "kkt_residual_F",
    "make_triple",
    "max_step",
    "nt_scaling",
    "solve",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParametricInstance:
    """Problem data for the parametric pair, perturbed along ``cbar``.

    ``domain`` optionally bounds the parameter (either side may be infinite).
    Row rank of ``A`` is checked unless ``check_rank`` is false.
    """

    structure: ConeStructure
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    cbar: np.ndarray
    domain: tuple[float, float] | None = None
    name: str = ""
    check_rank: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.A, dtype=float))
        b = np.atleast_1d(np.array(self.b, dtype=float))
        c = np.atleast_1d(np.array(self.c, dtype=float))
        cbar = np.atleast_1d(np.array(self.cbar, dtype=float))
        n = self.structure.n
        if A.shape[1] != n:
            raise ValueError(f"A has {A.shape[1]} columns, cones need {n}")
        if b.shape != (A.shape[0],):
            raise ValueError(f"b has length {b.size}, A has {A.shape[0]} rows")
        if c.shape != (n,) or cbar.shape != (n,):
            raise ValueError("c and cbar must match the cone dimension")
        for name, arr in (("A", A), ("b", b), ("c", c), ("cbar", cbar)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains NaN or Inf")
            arr.setflags(write=False)
        if self.check_rank and A.shape[0] > 0:
            sv = np.linalg.svd(A, compute_uv=False)
            if sv.size < A.shape[0] or sv[-1] <= 1e-10 * sv[0]:
                raise ValueError("A must have full row rank")
        if self.domain is not None:
            lo, hi = (float(v) for v in self.domain)
            if not lo < hi:
                raise ValueError("domain must satisfy lo < hi")
            object.__setattr__(self, "domain", (lo, hi))
        for name, arr in (("A", A), ("b", b), ("c", c), ("cbar", cbar)):
            object.__setattr__(self, name, arr)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.structure.n

    def cost(self, eps: float) -> np.ndarray:
        return self.c + eps * self.cbar

    def with_cbar(self, cbar, name: str | None = None) -> ParametricInstance:
        return ParametricInstance(self.structure, self.A, self.b, self.c, cbar,
                                  self.domain, name or self.name)


@dataclass(frozen=True)
class PrimalDualTriple:
    eps: float
    structure: ConeStructure
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    gap: float
    primal_residual: float
    dual_residual: float
    objective: float

    def x_blocks(self) -> list[np.ndarray]:
        return self.structure.split(self.x)

    def s_blocks(self) -> list[np.ndarray]:
        return self.structure.split(self.s)


def make_triple(instance: ParametricInstance, eps: float, x, y, s
                ) -> PrimalDualTriple:
    x = np.array(x, dtype=float)
    y = np.array(y, dtype=float)
    s = np.array(s, dtype=float)
    cost = instance.cost(eps)
    return PrimalDualTriple(
        eps=float(eps), structure=instance.structure, x=x, y=y, s=s,
        gap=abs(float(x @ s)),
        primal_residual=float(np.linalg.norm(instance.A @ x - instance.b)),
        dual_residual=float(np.linalg.norm(instance.A.T @ y + s - cost)),
        objective=float(cost @ x),
    )


@dataclass(frozen=True)
class SolveReport:
    triple: PrimalDualTriple
    iterations: int
    mu: float
    sigma_min_F: float
    polished: bool = False
    trace: tuple = field(default=(), repr=False)


def kkt_residual_F(instance: ParametricInstance, eps: float, x, y, s
                   ) -> np.ndarray:
    """The KKT map ``(Ax - b; A'y + s - c - eps*cbar; x o s)``."""
    return np.concatenate([
        instance.A @ x - instance.b,
        instance.A.T @ y + s - instance.cost(eps),
        jordan_product_flat(instance.structure, x, s),
    ])


def jacobian_F(triple: PrimalDualTriple, A: np.ndarray) -> np.ndarray:
    """Jacobian of the KKT map, ``[[A,0,0],[0,A',I],[L(s),0,L(x)]]``."""
    st = triple.structure
    n, m = st.n, A.shape[0]
    if A.shape != (m, n) or triple.y.shape != (m,):
        raise ValueError("triple and A have inconsistent dimensions")
    J = np.zeros((2 * n + m, 2 * n + m))
    J[:m, :n] = A
    J[m:m + n, n:n + m] = A.T
    J[m:m + n, n + m:] = np.eye(n)
    J[m + n:, :n] = block_arrow_matrix(st, triple.s)
    J[m + n:, n + m:] = block_arrow_matrix(st, triple.x)
    return J


def _sigma_min(J: np.ndarray) -> float:
    return float(np.linalg.svd(J, compute_uv=False)[-1])


# --- Nesterov-Todd scaling -------------------------------------------------

def nt_scaling(structure: ConeStructure, x, s):
    """Blockwise NT scaling matrices ``W`` with ``W x = W^{-1} s``.

    Returns ``(W, W_inv, lam)`` where ``W`` and ``W_inv`` are block-diagonal
    matrices and ``lam = W x`` is the scaled point.
    """
    n = structure.n
    W = np.zeros((n, n))
    Wi = np.zeros((n, n))
    for sl in structure.slices:
        xb, sb = x[sl], s[sl]
        k = xb.size
        if k == 1:
            w = np.sqrt(sb[0] / xb[0])
            W[sl, sl] = w
            Wi[sl, sl] = 1.0 / w
            continue
        J = -np.eye(k)
        J[0, 0] = 1.0
        xjx = xb[0] ** 2 - xb[1:] @ xb[1:]
        sjs = sb[0] ** 2 - sb[1:] @ sb[1:]
        if xjx <= 0 or sjs <= 0:
            raise NumericalBreakdown("iterate left the cone interior")
        xn = xb / np.sqrt(xjx)
        sn = sb / np.sqrt(sjs)
        gamma = np.sqrt((1.0 + xn @ sn) / 2.0)
        wbar = (sn + J @ xn) / (2.0 * gamma)
        beta = (sjs / xjx) ** 0.25
        # W = beta * (2 v v' - J) with v the normalized midpoint of e and wbar
        v = wbar.copy()
        v[0] += 1.0
        v /= np.sqrt(2.0 * (wbar[0] + 1.0))
        Jv = J @ v
        W[sl, sl] = beta * (2.0 * np.outer(v, v) - J)
        Wi[sl, sl] = (2.0 * np.outer(Jv, Jv) - J) / beta
    return W, Wi, W @ x


def _jordan_solve(structure: ConeStructure, lam, r) -> np.ndarray:
    """Solve ``lam o t = r`` blockwise (``lam`` interior)."""
    t = np.empty(structure.n)
    for sl in structure.slices:
        lb, rb = lam[sl], r[sl]
        if lb.size == 1:
            if not lb[0] > 0:
                raise NumericalBreakdown("scaled point left the cone interior")
            t[sl] = rb / lb
            continue
        # closed-form inverse of the arrow matrix
        l0, l1 = lb[0], lb[1:]
        det = l0 ** 2 - l1 @ l1
        if not (l0 > 0 and det > 0):
            raise NumericalBreakdown("scaled point left the cone interior")
        t0 = (l0 * rb[0] - l1 @ rb[1:]) / det
        t[sl.start] = t0
        t[sl.start + 1:sl.stop] = (rb[1:] - t0 * l1) / l0
    return t


def max_step(structure: ConeStructure, u, du) -> float:
    """Largest ``a >= 0`` with ``u + a du`` in the cone (``u`` interior)."""
    amax = np.inf
    for sl in structure.slices:
        ub, db = u[sl], du[sl]
        if ub.size == 1:
            if db[0] < 0:
                amax = min(amax, -ub[0] / db[0])
            continue
        a = db[0] ** 2 - db[1:] @ db[1:]
        bq = ub[0] * db[0] - ub[1:] @ db[1:]
        cq = ub[0] ** 2 - ub[1:] @ ub[1:]
        # f(t) = a t^2 + 2 bq t + cq, f(0) = cq > 0; find the first positive root
        roots = []
        if abs(a) <= 1e-300:
            if bq < 0:
                roots.append(-cq / (2.0 * bq))
        else:
            disc = bq * bq - a * cq
            if disc >= 0:
                sq = np.sqrt(disc)
                q = -(bq + np.copysign(sq, bq))
                cands = [q / a] if q != 0 else []
                if q != 0:
                    cands.append(cq / q)
                roots.extend(r for r in cands if r > 0)
        if db[0] < 0:
            roots.append(-ub[0] / db[0])
        if roots:
            amax = min(amax, min(roots))
    return float(amax)


def _newton_direction(A, W, Wi, lam, structure, rp, rd, rc):
    """Search direction from the NT-scaled linearized KKT system."""
    n, m = structure.n, A.shape[0]
    t = _jordan_solve(structure, lam, rc)
    Abar = A @ Wi
    K = np.zeros((n + m, n + m))
    K[:n, :n] = -np.eye(n)
    K[:n, n:] = Abar.T
    K[n:, :n] = Abar
    rhs = np.concatenate([Wi @ rd - t, rp])
    with warnings.catch_warnings():
        # near the optimum the scaled system is ill conditioned by design
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        sol = sla.solve(K, rhs, assume_a="sym")
        sol += sla.solve(K, rhs - K @ sol, assume_a="sym")
    dxt, dy = sol[:n], sol[n:]
    dst = t - dxt
    return Wi @ dxt, dy, W @ dst, dxt, dst


def _ipm(instance: ParametricInstance, eps: float, tol: float, max_iter: int,
         deep_mu: float = 1e-18):
    st = instance.structure
    A, b = instance.A, instance.b
    cost = instance.cost(eps)
    e = st.identity()
    p = st.p
    scale = 1.0 + max(np.abs(b).max(initial=0.0), np.abs(cost).max())
    x = e.copy() * scale
    s = e.copy() * scale
    y = np.zeros(instance.m)
    trace = []
    best = None
    bnorm = 1.0 + np.linalg.norm(b)
    cnorm = 1.0 + np.linalg.norm(cost)
    stall = 0
    done = None
    mu_floor = deep_mu * scale * scale
    for it in range(max_iter + 1):
        rp = b - A @ x
        rd = cost - A.T @ y - s
        gap = float(x @ s)
        mu = gap / p
        pres = np.linalg.norm(rp) / bnorm
        dres = np.linalg.norm(rd) / cnorm
        err = max(pres, dres, gap)
        trace.append((it, pres, dres, gap, mu))
        if best is None or err < best[0]:
            best = (err, x.copy(), y.copy(), s.copy(), it, mu)
            stall = 0
        else:
            stall += 1
        converged = pres <= tol and dres <= tol and gap <= tol
        if converged and (mu <= mu_floor or it == max_iter):
            return x, y, s, it, mu, trace
        if converged:
            # keep descending the central path: blocks that vanish only at
            # the sqrt(mu) rate need a tiny mu to be told apart from zero
            done = (x.copy(), y.copy(), s.copy(), it, mu)
        if max(np.abs(x).max(), np.abs(s).max(), np.abs(y).max(initial=0)) > 1e12:
            raise InfeasibleOrUnbounded(
                f"iterates diverge at eps={eps}", iteration=it)
        if stall > 8:
            break
        if it == max_iter:
            break
        try:
            W, Wi, lam = nt_scaling(st, x, s)
            rc = -jordan_product_flat(st, lam, lam)
            dx, dy, ds, dxt, dst = _newton_direction(A, W, Wi, lam, st, rp, rd, rc)
            a_aff = min(1.0, max_step(st, x, dx), max_step(st, s, ds))
            sigma = ((x + a_aff * dx) @ (s + a_aff * ds) / gap) ** 3
            sigma = min(max(sigma, 0.0), 1.0)
            rc = (sigma * mu * e - jordan_product_flat(st, lam, lam)
                  - jordan_product_flat(st, dxt, dst))
            dx, dy, ds, _, _ = _newton_direction(A, W, Wi, lam, st, rp, rd, rc)
        except (np.linalg.LinAlgError, ValueError, NumericalBreakdown):
            break
        a = min(max_step(st, x, dx), max_step(st, s, ds))
        eta = 0.99 if mu > 1e-8 else 0.999
        a = min(1.0, eta * a)
        if not np.isfinite(a) or a < 1e-14:
            break
        x = x + a * dx
        y = y + a * dy
        s = s + a * ds
    if done is not None:
        return (*done, trace)
    x_last, s_last = x, s
    err, x, y, s, it, mu = best
    if err <= np.sqrt(tol):
        log.debug("IPM stalled at err=%.2e (eps=%g), keeping best iterate",
                  err, eps)
        return x, y, s, it, mu, trace
    if max(np.abs(x_last).max(), np.abs(s_last).max()) > 1e4 * scale:
        # iterates grew by orders of magnitude before stalling
        raise InfeasibleOrUnbounded(
            f"iterates grow without bound at eps={eps}", error=err)
    if len(trace) > max_iter:
        raise MaxIterations(f"no convergence in {max_iter} iterations",
                            error=err)
    raise NumericalBreakdown(f"IPM stalled with error {err:.2e}", error=err)


def _strictly_complementary_pattern(structure, x, s, tol) -> bool:
    for xb, sb in zip(structure.split(x), structure.split(s)):
        cx, cs = classify_block(xb, tol), classify_block(sb, tol)
        ok = ((cx is BlockStatus.INTERIOR and cs is BlockStatus.ZERO)
              or (cx is BlockStatus.ZERO and cs is BlockStatus.INTERIOR)
              or (cx is BlockStatus.BOUNDARY_NONZERO
                  and cs is BlockStatus.BOUNDARY_NONZERO))
        if not ok:
            return False
    return True


def _statuses(structure, x, s, tol):
    return [(classify_block(xb, tol), classify_block(sb, tol))
            for xb, sb in zip(structure.split(x), structure.split(s))]


def _polish(instance, eps, x, y, s, class_tol=1e-6, max_steps=8):
    """Newton on the KKT map from a strictly complementary IPM point."""
    st = instance.structure
    if not _strictly_complementary_pattern(st, x, s, class_tol):
        return None
    pattern = _statuses(st, x, s, class_tol)
    n, m = st.n, instance.m
    z = np.concatenate([x, y, s])
    F = kkt_residual_F(instance, eps, x, y, s)
    f0 = np.linalg.norm(F)
    for _ in range(max_steps):
        tri = make_triple(instance, eps, z[:n], z[n:n + m], z[n + m:])
        J = jacobian_F(tri, instance.A)
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] <= 1e-13 * sv[0]:
            return None
        dz = np.linalg.solve(J, -F)
        z_new = z + dz
        F_new = kkt_residual_F(instance, eps, z_new[:n], z_new[n:n + m],
                               z_new[n + m:])
        if np.linalg.norm(F_new) >= np.linalg.norm(F):
            break
        z, F = z_new, F_new
        if np.linalg.norm(F) <= 1e-15 * (1.0 + np.linalg.norm(z)):
            break
    x, y, s = z[:n], z[n:n + m], z[n + m:]
    if np.linalg.norm(F) >= f0:
        return None
    if _statuses(st, x, s, class_tol) != pattern:
        return None
    return x, y, s


def solve(instance: ParametricInstance, eps: float, tol: float = 1e-10,
          max_iter: int = 200, polish: bool = True) -> SolveReport:
    """Solve the primal-dual pair at ``eps``.

    Raises
    ------
    InfeasibleOrUnbounded
        Iterates diverge, which signals that no interior solution exists.
    MaxIterations
        The iteration budget ran out before the tolerance was met.
    NumericalBreakdown
        The scaled Newton system could not be solved reliably.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x, y, s, iters, mu, trace = _ipm(instance, float(eps), tol, max_iter)
    polished = False
    if polish:
        out = _polish(instance, eps, x, y, s)
        if out is not None:
            x, y, s = out
            polished = True
            mu = abs(float(x @ s)) / instance.structure.p
    triple = make_triple(instance, eps, x, y, s)
    sig = _sigma_min(jacobian_F(triple, instance.A))
    return SolveReport(triple, iters, mu, sig, polished, tuple(trace))


def check_interior_point(instance: ParametricInstance, eps: float,
                         margin: float = 1e-8):
    """Test for strictly feasible primal and dual points at ``eps``.

    Two phase-I problems maximize the distance ``t`` (capped at one) of a
    feasible point from the cone boundary, measured along the identity::

        max t  s.t.  A(u + t e) = b,           u in K, 0 <= t <= 1
        max t  s.t.  A'y + u + t e = c(eps),   u in K, 0 <= t <= 1

    Returns ``(ok, witness)``; ``witness`` is ``(x, y, s)`` when ``ok``.
    """
    st = instance.structure
    A, b = instance.A, instance.b
    e = st.identity()
    m, n = A.shape
    # reject inconsistent equality systems before any conic work
    x0, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.linalg.norm(A @ x0 - b) > 1e-8 * (1.0 + np.linalg.norm(b)):
        return False, None
    aux = ConeStructure(st.dims + (1, 1))
    # primal phase-I: variables (u, t, r) with t + r = 1
    Ap = np.zeros((m + 1, n + 2))
    Ap[:m, :n] = A
    Ap[:m, n] = A @ e
    Ap[m, n] = Ap[m, n + 1] = 1.0
    bp = np.concatenate([b, [1.0]])
    cp = np.zeros(n + 2)
    cp[n] = -1.0
    prim = ParametricInstance(aux, Ap, bp, cp, np.zeros(n + 2), check_rank=False)
    # dual phase-I written as the dual side of a standard-form problem:
    # y' = (y, t), slacks (u, t, 1 - t)
    Ad = np.zeros((m + 1, n + 2))
    Ad[:m, :n] = A
    Ad[m, :n] = e
    Ad[m, n] = -1.0
    Ad[m, n + 1] = 1.0
    bd = np.zeros(m + 1)
    bd[m] = 1.0
    cd = np.concatenate([instance.cost(eps), [0.0, 1.0]])
    dual = ParametricInstance(aux, Ad, bd, cd, np.zeros(n + 2), check_rank=False)
    try:
        rp = solve(prim, 0.0, tol=1e-9, polish=False)
        rd = solve(dual, 0.0, tol=1e-9, polish=False)
    except (InfeasibleOrUnbounded, MaxIterations, NumericalBreakdown):
        return False, None
    t_p = rp.triple.x[n]
    t_d = rd.triple.y[m]
    if t_p <= margin or t_d <= margin:
        return False, None
    xw = rp.triple.x[:n] + t_p * e
    yw = rd.triple.y[:m]
    sw = rd.triple.s[:n] + t_d * e
    return True, (xw, yw, sw)
