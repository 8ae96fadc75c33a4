"""Transition-point test through the nonlinear dual reformulation.

With the partition ``pi`` fixed at ``eps_bar`` the dual problem is rewritten
as a smooth nonlinear program in ``(w, z)``::

    min  -b'w
    s.t. A_i'w       = c^i + eps*cbar^i     (i in B, T1, T2)
         A_i'w + z^i = c^i + eps*cbar^i     (i in R, N, T3)
         z^i' R z^i  = 0                    (i in R, T3)

with multipliers ``u`` (one block per cone) and ``v`` (one scalar per block
in ``R`` and ``T3``). Its first-order conditions ``G(chi, eps) = 0`` define
an analytic curve ``chi(eps) = (w, z, u, v)`` when both nondegeneracy
conditions hold. The point ``eps_bar`` lies inside a nonlinearity interval
exactly when the derivatives of ``u^i`` (T1), of ``(u_1^i)^2 - ||u_2:^i||^2``
(T2) and of ``v_i`` (T3) all vanish.

Point layout: ``w`` (m), then ``z`` over R, N, T3 (in that group order,
ascending within a group), then ``u`` over all blocks in natural order, then
``v`` over R then T3.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import Diverged, LayoutMismatch, SingularJacobian
from .partition import (DEFAULT_CLASS_TOL, DEFAULT_RANK_TOL, OptimalPartition,
                        classify, dual_nondegenerate, primal_nondegenerate,
                        round_to_partition)
from .solver import ParametricInstance, PrimalDualTriple, solve

__all__ = [
    "DEFAULT_DERIV_TOL",
    "DerivativeSeries",
    "ReformulationDN",
    "TransitionReport",
    "TransitionVerdict",
    "build_reformulation",
    "classify_point",
    "derivative_series",
    "eval_G",
    "growth",
    "initial_point",
    "jacobian_G",
    "newton_correct",
]

DEFAULT_DERIV_TOL = 1e-8
DEFAULT_NEWTON_TOL = 1e-12
# reciprocal condition number below which the Jacobian counts as singular
_SINGULAR_RCOND = 1e-12


def growth(k: int) -> float:
    """Tolerance multiplier for order ``k``; roundoff in the recursion grows
    by roughly ``sqrt(10)`` per order."""
    return 10.0 ** ((k - 1) / 2.0)


def _reflect(z):
    r = -np.asarray(z, dtype=float)
    r[0] = -r[0]
    return r


@dataclass(frozen=True)
class ReformulationDN:
    instance: ParametricInstance
    partition: OptimalPartition
    z_blocks: tuple[int, ...]
    v_blocks: tuple[int, ...]
    fixed_blocks: tuple[int, ...]
    z_slices: tuple[slice, ...] = field(repr=False)

    @property
    def m(self) -> int:
        return self.instance.m

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def nz(self) -> int:
        return sum(self.instance.structure.dims[i] for i in self.z_blocks)

    @property
    def nv(self) -> int:
        return len(self.v_blocks)

    @property
    def n_c(self) -> int:
        return self.m + self.nz + self.n + self.nv

    def split(self, point):
        """``(w, z, u, v)`` views of a flat point."""
        point = np.asarray(point, dtype=float)
        if point.shape != (self.n_c,):
            raise LayoutMismatch(
                f"point has shape {point.shape}, layout needs ({self.n_c},)",
                expected=self.n_c, got=point.shape)
        m, nz, n = self.m, self.nz, self.n
        return (point[:m], point[m:m + nz], point[m + nz:m + nz + n],
                point[m + nz + n:])

    def z_block(self, z, i: int) -> np.ndarray:
        return z[self.z_slices[self.z_blocks.index(i)]]

    def in_W(self, point) -> bool:
        """``z`` inside the open cone: ``z_1 > 0`` on R and T3, interior on N."""
        _, z, _, _ = self.split(point)
        part = self.partition
        for i in self.z_blocks:
            zi = self.z_block(z, i)
            if zi[0] <= 0:
                return False
            if i in part.N and zi[0] <= np.linalg.norm(zi[1:]):
                return False
        return True


def build_reformulation(instance: ParametricInstance,
                        partition: OptimalPartition) -> ReformulationDN:
    if partition.p != instance.structure.p:
        raise LayoutMismatch("partition and instance disagree on block count",
                             partition=partition.p, instance=instance.structure.p)
    part = partition
    z_blocks = tuple(sorted(part.R)) + tuple(sorted(part.N)) + tuple(sorted(part.T3))
    v_blocks = tuple(sorted(part.R)) + tuple(sorted(part.T3))
    fixed = tuple(sorted(part.B)) + tuple(sorted(part.T1)) + tuple(sorted(part.T2))
    dims = instance.structure.dims
    slices, off = [], 0
    for i in z_blocks:
        slices.append(slice(off, off + dims[i]))
        off += dims[i]
    return ReformulationDN(instance, partition, z_blocks, v_blocks, fixed,
                           tuple(slices))


def initial_point(triple: PrimalDualTriple, reform: ReformulationDN,
                  round_first: bool = True) -> np.ndarray:
    """``(y, s over R/N/T3, -x, x_1/(2 s_1) over R/T3)`` from a primal-dual
    solution, optionally snapped onto the partition first."""
    if round_first:
        x, s = round_to_partition(triple, reform.partition)
    else:
        x, s = triple.x, triple.s
    st = reform.instance.structure
    xb, sb = st.split(x), st.split(s)
    z = np.concatenate([sb[i] for i in reform.z_blocks]) if reform.z_blocks \
        else np.zeros(0)
    v = np.array([0.5 * xb[i][0] / sb[i][0] for i in reform.v_blocks])
    return np.concatenate([triple.y, z, -x, v])


def eval_G(point, eps: float, reform: ReformulationDN) -> np.ndarray:
    w, z, u, v = reform.split(point)
    inst = reform.instance
    st = inst.structure
    ub = st.split(u)
    cost = st.split(inst.cost(eps))
    Aw = st.split(inst.A.T @ w)
    rows = [-inst.A @ u - inst.b]
    for i in reform.z_blocks:
        if i in reform.partition.N:
            rows.append(-ub[i])
        else:
            vi = v[reform.v_blocks.index(i)]
            rows.append(-ub[i] - 2.0 * vi * _reflect(reform.z_block(z, i)))
    for i in reform.fixed_blocks:
        rows.append(Aw[i] - cost[i])
    for i in reform.z_blocks:
        rows.append(Aw[i] + reform.z_block(z, i) - cost[i])
    for i in reform.v_blocks:
        zi = reform.z_block(z, i)
        rows.append(np.array([zi @ _reflect(zi)]))
    return np.concatenate(rows)


def _row_offsets(reform: ReformulationDN):
    """Start rows of the stationarity, fixed-feasibility, z-feasibility and
    quadratic groups."""
    dims = reform.instance.structure.dims
    r0 = reform.m
    r1 = r0 + reform.nz
    r2 = r1 + sum(dims[i] for i in reform.fixed_blocks)
    r3 = r2 + reform.nz
    return r0, r1, r2, r3


def jacobian_G(point, reform: ReformulationDN) -> np.ndarray:
    """Jacobian of :func:`eval_G` in the point (independent of ``eps``)."""
    w, z, u, v = reform.split(point)
    inst = reform.instance
    st = inst.structure
    m, nz, n = reform.m, reform.nz, reform.n
    cw, cz, cu, cv = 0, m, m + nz, m + nz + n
    J = np.zeros((reform.n_c, reform.n_c))
    J[:m, cu:cu + n] = -inst.A
    r0, r1, r2, r3 = _row_offsets(reform)
    for zi_idx, i in enumerate(reform.z_blocks):
        zs = reform.z_slices[zi_idx]
        rows = slice(r0 + zs.start, r0 + zs.stop)
        J[rows, cu + st.slices[i].start:cu + st.slices[i].stop] = -np.eye(st.dims[i])
        if i not in reform.partition.N:
            k = reform.v_blocks.index(i)
            Rm = np.diag(_reflect(np.ones(st.dims[i])))
            J[rows, cz + zs.start:cz + zs.stop] = -2.0 * v[k] * Rm
            J[rows, cv + k] = -2.0 * _reflect(z[zs])
    r = r1
    for i in reform.fixed_blocks:
        d = st.dims[i]
        J[r:r + d, cw:cw + m] = inst.A[:, st.slices[i]].T
        r += d
    for zi_idx, i in enumerate(reform.z_blocks):
        zs = reform.z_slices[zi_idx]
        rows = slice(r2 + zs.start, r2 + zs.stop)
        J[rows, cw:cw + m] = inst.A[:, st.slices[i]].T
        J[rows, cz + zs.start:cz + zs.stop] = np.eye(st.dims[i])
    for k, i in enumerate(reform.v_blocks):
        zs = reform.z_slices[reform.z_blocks.index(i)]
        J[r3 + k, cz + zs.start:cz + zs.stop] = 2.0 * _reflect(z[zs])
    return J


def _eps_direction(reform: ReformulationDN) -> np.ndarray:
    """``-dG/d eps``: ``cbar`` on both feasibility groups, zero elsewhere."""
    st = reform.instance.structure
    cb = st.split(reform.instance.cbar)
    _, r1, _, _ = _row_offsets(reform)
    parts = [np.zeros(r1)]
    parts += [cb[i] for i in reform.fixed_blocks]
    parts += [cb[i] for i in reform.z_blocks]
    parts.append(np.zeros(reform.nv))
    return np.concatenate(parts)


def _factor(J):
    sv = np.linalg.svd(J, compute_uv=False)
    if sv.size == 0:
        return None, math.inf
    rcond = sv[-1] / sv[0] if sv[0] > 0 else 0.0
    if rcond < _SINGULAR_RCOND:
        raise SingularJacobian(
            f"Jacobian of G is numerically singular (sigma_min {sv[-1]:.2e}, "
            f"rcond {rcond:.2e}); nondegeneracy fails",
            sigma_min=float(sv[-1]))
    return sla.lu_factor(J), float(sv[-1])


def newton_correct(raw: PrimalDualTriple, reform: ReformulationDN,
                   eps_bar: float, newton_tol: float = DEFAULT_NEWTON_TOL,
                   max_iter: int = 50) -> np.ndarray:
    """Round ``raw`` onto the partition and run Newton on ``G = 0``.

    Raises
    ------
    SingularJacobian
        The Jacobian is numerically singular at some iterate.
    Diverged
        No convergence, or the limit leaves the open cone.
    """
    point = initial_point(raw, reform)
    res = np.abs(eval_G(point, eps_bar, reform)).max(initial=0.0)
    for it in range(max_iter):
        if res <= newton_tol:
            break
        lu, _ = _factor(jacobian_G(point, reform))
        step = sla.lu_solve(lu, -eval_G(point, eps_bar, reform))
        point = point + step
        new = np.abs(eval_G(point, eps_bar, reform)).max(initial=0.0)
        if not np.isfinite(new) or (it > 5 and new > 10 * res):
            raise Diverged(f"Newton on G diverged (residual {new:.2e})",
                           iteration=it)
        res = new
    else:
        if res > newton_tol:
            raise Diverged(f"Newton on G stopped at residual {res:.2e}",
                           residual=float(res))
    if not reform.in_W(point):
        raise Diverged("corrected z left the open cone")
    return point


@dataclass(frozen=True)
class DerivativeSeries:
    """Derivatives ``chi^(k)(eps_bar)`` for ``k = 1..K`` (``derivatives[k-1]``).

    ``quantities[k-1]`` maps ``(kind, block)`` to the magnitude tested at
    order ``k``: ``kind`` is ``"u"`` (T1), ``"q"`` (T2) or ``"v"`` (T3).
    ``signed`` holds the raw value (for ``"u"`` the entry of largest
    magnitude). ``residuals[k-1]`` is the relative linear-solve residual.
    """

    eps_bar: float
    base: np.ndarray
    derivatives: tuple[np.ndarray, ...]
    quantities: tuple[dict, ...]
    signed: tuple[dict, ...]
    residuals: tuple[float, ...]
    sigma_min_G: float
    reform: ReformulationDN = field(repr=False)

    @property
    def K(self) -> int:
        return len(self.derivatives)

    def v(self, k: int) -> np.ndarray:
        """``v^(k)`` (``k = 0`` gives the base value)."""
        vec = self.base if k == 0 else self.derivatives[k - 1]
        return self.reform.split(vec)[3]

    def u(self, k: int) -> np.ndarray:
        vec = self.base if k == 0 else self.derivatives[k - 1]
        return self.reform.split(vec)[2]


def derivative_series(point, reform: ReformulationDN, eps_bar: float, K: int
                      ) -> DerivativeSeries:
    """Derivatives of the analytic curve through ``point`` up to order ``K``.

    The recursion is run on Taylor coefficients ``t_k = chi^(k)/k!``, for
    which the convolution sums carry no binomial weights; derivatives are
    ``k! t_k``. One LU factorization serves every order.

    Raises
    ------
    SingularJacobian
        The Jacobian at ``point`` is numerically singular.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    point = np.asarray(point, dtype=float)
    J = jacobian_G(point, reform)
    lu, smin = _factor(J)
    r0, _, _, r3 = _row_offsets(reform)
    taylor = [point]
    resid = []
    rhs = _eps_direction(reform)
    for k in range(1, K + 1):
        if k > 1:
            rhs = np.zeros(reform.n_c)
            split = [reform.split(t) for t in taylor]
            for vk, i in enumerate(reform.v_blocks):
                zs = reform.z_slices[reform.z_blocks.index(i)]
                acc_s = np.zeros(zs.stop - zs.start)
                acc_q = 0.0
                for j in range(1, k):
                    zj = split[k - j][1][zs]
                    acc_s += split[j][3][vk] * _reflect(zj)
                    acc_q += split[j][1][zs] @ _reflect(zj)
                rhs[r0 + zs.start:r0 + zs.stop] = 2.0 * acc_s
                rhs[r3 + vk] = -acc_q
        t = sla.lu_solve(lu, rhs)
        scale = np.abs(rhs).max(initial=0.0) + np.abs(J).max() * np.abs(t).max(initial=0.0)
        resid.append(float(np.abs(J @ t - rhs).max(initial=0.0) / scale)
                     if scale > 0 else 0.0)
        taylor.append(t)
    derivs = tuple(math.factorial(k) * taylor[k] for k in range(1, K + 1))
    quants, signed = _quantities(reform, taylor, K)
    return DerivativeSeries(float(eps_bar), point, derivs, quants, signed,
                            tuple(r * math.factorial(k)
                                  for k, r in enumerate(resid, start=1)),
                            smin, reform)


def _quantities(reform: ReformulationDN, taylor, K):
    part = reform.partition
    st = reform.instance.structure
    us = [st.split(reform.split(t)[2]) for t in taylor]
    vs = [reform.split(t)[3] for t in taylor]
    quants, signed = [], []
    for k in range(1, K + 1):
        fk = math.factorial(k)
        q, sg = {}, {}
        for i in sorted(part.T1):
            d = fk * us[k][i]
            j = int(np.argmax(np.abs(d)))
            q[("u", i)] = float(np.abs(d).max())
            sg[("u", i)] = float(d[j])
        for i in sorted(part.T2):
            # Cauchy product of the Taylor series of u_1^2 - ||u_2:||^2
            coef = sum(us[j][i] @ _reflect(us[k - j][i]) for j in range(k + 1))
            q[("q", i)] = abs(fk * coef)
            sg[("q", i)] = float(fk * coef)
        for i in sorted(part.T3):
            d = fk * vs[k][reform.v_blocks.index(i)]
            q[("v", i)] = abs(float(d))
            sg[("v", i)] = float(d)
        quants.append(q)
        signed.append(sg)
    return tuple(quants), tuple(signed)


class TransitionVerdict(enum.Enum):
    NONLINEARITY_MEMBER = "nonlinearity_member"
    TRANSITION_POINT = "transition_point"
    INAPPLICABLE = "inapplicable"


@dataclass(frozen=True)
class TransitionReport:
    verdict: TransitionVerdict
    eps_bar: float
    partition: OptimalPartition
    primal_nondegenerate: bool
    dual_nondegenerate: bool
    K: int
    deriv_tol: float
    series: DerivativeSeries | None = None
    order: int | None = None
    kind: str | None = None
    block: int | None = None
    value: float | None = None
    notes: tuple[str, ...] = ()

    def summary(self) -> str:
        if self.verdict is TransitionVerdict.TRANSITION_POINT:
            return (f"TRANSITION POINT (order {self.order}, "
                    f"{self.kind}{self.block + 1}^({self.order}) = {self.value:.6g})")
        if self.verdict is TransitionVerdict.NONLINEARITY_MEMBER:
            return f"NONLINEARITY MEMBER (derivatives vanish up to order {self.K})"
        return "INAPPLICABLE (nondegeneracy fails)"


def classify_point(instance: ParametricInstance, eps_bar: float, K: int = 10,
                   deriv_tol: float = DEFAULT_DERIV_TOL, *,
                   class_tol: float = DEFAULT_CLASS_TOL,
                   rank_tol: float = DEFAULT_RANK_TOL,
                   newton_tol: float = DEFAULT_NEWTON_TOL) -> TransitionReport:
    """Derivative test at ``eps_bar``.

    Order ``k`` passes when every tested magnitude is at most
    ``deriv_tol * growth(k)``. The verdict only covers orders up to ``K``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    rep = solve(instance, eps_bar)
    part = classify(rep.triple, class_tol)
    pnd = primal_nondegenerate(rep.triple, instance.A, part, rank_tol)
    dnd = dual_nondegenerate(rep.triple, instance.A, part, rank_tol)
    base = dict(eps_bar=float(eps_bar), partition=part, primal_nondegenerate=pnd,
                dual_nondegenerate=dnd, K=K, deriv_tol=deriv_tol)
    if not (pnd and dnd):
        failed = [name for name, ok in (("primal", pnd), ("dual", dnd)) if not ok]
        return TransitionReport(
            TransitionVerdict.INAPPLICABLE,
            notes=(f"{' and '.join(failed)} nondegeneracy fails",), **base)
    reform = build_reformulation(instance, part)
    point = newton_correct(rep.triple, reform, eps_bar, newton_tol)
    series = derivative_series(point, reform, eps_bar, K)
    notes = [f"orders checked: 1..{K}"]
    if not part.T:
        notes.append("strictly complementary: nothing to test; use the "
                     "auxiliary-problem iteration for the interval")
    if part.low_confidence:
        notes.append("low-confidence blocks: "
                     + ",".join(str(i + 1) for i in sorted(part.low_confidence)))
    for k in range(1, K + 1):
        for (kind, i), mag in series.quantities[k - 1].items():
            if mag > deriv_tol * growth(k):
                return TransitionReport(
                    TransitionVerdict.TRANSITION_POINT, series=series, order=k,
                    kind=kind, block=i, value=series.signed[k - 1][(kind, i)],
                    notes=tuple(notes), **base)
    return TransitionReport(TransitionVerdict.NONLINEARITY_MEMBER, series=series,
                            notes=tuple(notes), **base)
