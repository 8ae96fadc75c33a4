"""Optimal partition of the cone blocks, nondegeneracy tests and radii."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cones import BlockStatus, classify_block, spectral_decomposition
from .errors import InconsistentBlock, NotStrictlyComplementary
from .solver import PrimalDualTriple

__all__ = [
    "DEFAULT_CLASS_TOL",
    "DEFAULT_RANK_TOL",
    "DeltaRadii",
    "OptimalPartition",
    "classify",
    "delta_radius",
    "dual_nondegenerate",
    "dual_nondegeneracy_matrix",
    "is_strictly_complementary",
    "primal_nondegenerate",
    "primal_nondegeneracy_matrix",
    "round_to_partition",
]

DEFAULT_CLASS_TOL = 1e-6
DEFAULT_RANK_TOL = 1e-8

_LABELS = ("B", "N", "R", "T1", "T2", "T3")


@dataclass(frozen=True)
class OptimalPartition:
    """Six disjoint index sets covering the blocks ``0..p-1`` (zero-based).

    ``low_confidence`` lists blocks whose classification sat within a factor
    of ten of a tolerance threshold.
    """

    p: int
    B: frozenset[int]
    N: frozenset[int]
    R: frozenset[int]
    T1: frozenset[int]
    T2: frozenset[int]
    T3: frozenset[int]
    tol: float
    low_confidence: frozenset[int] = field(default=frozenset(), compare=False)

    def __post_init__(self):
        sets = [frozenset(getattr(self, k)) for k in _LABELS]
        for k, v in zip(_LABELS, sets):
            object.__setattr__(self, k, v)
        object.__setattr__(self, "low_confidence", frozenset(self.low_confidence))
        union = frozenset().union(*sets)
        if sum(len(v) for v in sets) != len(union) or union != frozenset(range(self.p)):
            raise ValueError("partition sets must be disjoint and cover all blocks")

    @property
    def T(self) -> frozenset[int]:
        return self.T1 | self.T2 | self.T3

    def label(self, i: int) -> str:
        for k in _LABELS:
            if i in getattr(self, k):
                return k
        raise IndexError(i)

    def labels(self) -> list[str]:
        return [self.label(i) for i in range(self.p)]

    def same_sets(self, other: OptimalPartition) -> bool:
        return all(getattr(self, k) == getattr(other, k) for k in _LABELS)

    def __str__(self) -> str:
        def fmt(s):
            return "{" + ",".join(str(i + 1) for i in sorted(s)) + "}" if s else "{}"
        return (f"({fmt(self.B)}, {fmt(self.N)}, {fmt(self.R)}, "
                f"({fmt(self.T1)}, {fmt(self.T2)}, {fmt(self.T3)}))")


_TABLE = {
    (BlockStatus.BOUNDARY_NONZERO, BlockStatus.BOUNDARY_NONZERO): "R",
    (BlockStatus.ZERO, BlockStatus.ZERO): "T1",
    (BlockStatus.BOUNDARY_NONZERO, BlockStatus.ZERO): "T2",
    (BlockStatus.ZERO, BlockStatus.BOUNDARY_NONZERO): "T3",
}


def _near_threshold(v, tol: float) -> bool:
    """Any classification margin of ``v`` within 10x of the threshold."""
    v = np.atleast_1d(v)
    t = tol * max(1.0, float(np.linalg.norm(v)))
    norm = float(np.linalg.norm(v))
    gap = abs(v[0] - float(np.linalg.norm(v[1:])))
    return (t / 10 < norm <= 10 * t) or (norm > t and t / 10 < gap <= 10 * t)


def classify(triple: PrimalDualTriple, tol: float = DEFAULT_CLASS_TOL
             ) -> OptimalPartition:
    """Partition blocks by where ``x^i`` and ``s^i`` sit relative to the cone.

    Raises
    ------
    InconsistentBlock
        A block is outside its cone, or ``x^i`` and ``s^i`` fit no category.
    """
    sets = {k: set() for k in _LABELS}
    low = set()
    for i, (xb, sb) in enumerate(zip(triple.x_blocks(), triple.s_blocks())):
        cx, cs = classify_block(xb, tol), classify_block(sb, tol)
        if cx is BlockStatus.OUTSIDE or cs is BlockStatus.OUTSIDE:
            raise InconsistentBlock(f"block {i + 1} lies outside its cone",
                                    block=i, x=cx.value, s=cs.value)
        if cx is BlockStatus.INTERIOR and cs is BlockStatus.INTERIOR:
            raise InconsistentBlock(f"block {i + 1}: x and s both interior",
                                    block=i, x=cx.value, s=cs.value)
        if cx is BlockStatus.INTERIOR:
            key = "B"
        elif cs is BlockStatus.INTERIOR:
            key = "N"
        else:
            key = _TABLE[(cx, cs)]
        sets[key].add(i)
        if _near_threshold(xb, tol) or _near_threshold(sb, tol):
            low.add(i)
    return OptimalPartition(triple.structure.p, tol=tol, low_confidence=low,
                            **sets)


def is_strictly_complementary(partition: OptimalPartition) -> bool:
    return not partition.T


def primal_nondegeneracy_matrix(triple: PrimalDualTriple, A: np.ndarray,
                                partition: OptimalPartition) -> np.ndarray:
    """Columns ``A^i Pbar^i`` over R and T2, then ``A^i`` over B."""
    st = triple.structure
    cols = []
    xb = triple.x_blocks()
    for i in sorted(partition.R | partition.T2):
        frame = spectral_decomposition(xb[i], partition.tol, block=i)
        cols.append(A[:, st.slices[i]] @ frame.positive)
    for i in sorted(partition.B):
        cols.append(A[:, st.slices[i]])
    return np.hstack(cols) if cols else np.zeros((A.shape[0], 0))


def dual_nondegeneracy_matrix(triple: PrimalDualTriple, A: np.ndarray,
                              partition: OptimalPartition) -> np.ndarray:
    """Columns ``A^i R s^i`` over R and T3, then ``A^i`` over B, T1, T2."""
    st = triple.structure
    cols = []
    sb = triple.s_blocks()
    for i in sorted(partition.R | partition.T3):
        rs = -sb[i]
        rs[0] = sb[i][0]
        cols.append((A[:, st.slices[i]] @ rs)[:, None])
    for i in sorted(partition.B | partition.T1 | partition.T2):
        cols.append(A[:, st.slices[i]])
    return np.hstack(cols) if cols else np.zeros((A.shape[0], 0))


def _rank(M: np.ndarray, rank_tol: float) -> int:
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > rank_tol * sv[0])) if sv[0] > 0 else 0


def primal_nondegenerate(triple: PrimalDualTriple, A: np.ndarray,
                         partition: OptimalPartition,
                         rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Full row rank of the primal nondegeneracy matrix."""
    M = primal_nondegeneracy_matrix(triple, A, partition)
    return _rank(M, rank_tol) == A.shape[0]


def dual_nondegenerate(triple: PrimalDualTriple, A: np.ndarray,
                       partition: OptimalPartition,
                       rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Full column rank of the dual nondegeneracy matrix."""
    M = dual_nondegeneracy_matrix(triple, A, partition)
    return _rank(M, rank_tol) == M.shape[1]


@dataclass(frozen=True)
class DeltaRadii:
    delta_B: float
    delta_N: float
    delta_R: float

    @property
    def delta(self) -> float:
        return min(self.delta_B, self.delta_N, self.delta_R)


def delta_radius(triple: PrimalDualTriple, partition: OptimalPartition
                 ) -> DeltaRadii:
    """Radius of the neighborhood on which the partition cannot change.

    Empty index sets contribute ``inf``.
    """
    if not is_strictly_complementary(partition):
        raise NotStrictlyComplementary(
            f"partition {partition} has nonempty T sets")
    xb, sb = triple.x_blocks(), triple.s_blocks()

    def gap(v):
        return float(v[0] - np.linalg.norm(v[1:]))

    half = math.sqrt(2.0) / 2.0
    dB = min((half * gap(xb[i]) for i in partition.B), default=math.inf)
    dN = min((half * gap(sb[i]) for i in partition.N), default=math.inf)
    dR = min((min(xb[i][0], sb[i][0]) for i in partition.R), default=math.inf)
    return DeltaRadii(dB, dN, float(dR))


def round_to_partition(triple: PrimalDualTriple, partition: OptimalPartition
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Snap ZERO blocks to exact zero and boundary blocks onto the boundary.

    A boundary block keeps its first entry and has its tail rescaled to the
    same norm.
    """
    x, s = triple.x.copy(), triple.s.copy()
    st = triple.structure
    x_bd = partition.R | partition.T2
    s_bd = partition.R | partition.T3
    x_zero = partition.N | partition.T1 | partition.T3
    s_zero = partition.B | partition.T1 | partition.T2
    for i, sl in enumerate(st.slices):
        for vec, zero, bd in ((x, x_zero, x_bd), (s, s_zero, s_bd)):
            if i in zero:
                vec[sl] = 0.0
            elif i in bd and sl.stop - sl.start > 1:
                tail = vec[sl.start + 1:sl.stop]
                nt = np.linalg.norm(tail)
                if nt > 0:
                    vec[sl.start + 1:sl.stop] = tail * (vec[sl.start] / nt)
    return x, s
