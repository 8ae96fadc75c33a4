"""Jordan-algebra primitives for Cartesian products of second-order cones.

A block ``x`` of size ``n`` belongs to the cone when ``x[0] >= ||x[1:]||``.
Blocks of size one are half-lines (``x[0] >= 0``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "BlockStatus",
    "ConeStructure",
    "ConeVector",
    "SpectralFrame",
    "StructureMismatch",
    "arrow_matrix",
    "block_arrow_matrix",
    "classify_block",
    "jordan_product",
    "jordan_product_flat",
    "reflection_apply",
    "spectral_decomposition",
]


class StructureMismatch(ValueError):
    """Two cone vectors do not share a block structure."""


class BlockStatus(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY_NONZERO = "boundary_nonzero"
    ZERO = "zero"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class ConeStructure:
    """Block sizes ``(n_1, ..., n_p)`` of a product of second-order cones."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) < 1:
            raise ValueError("a cone structure needs at least one block")
        if any(n < 1 for n in dims):
            raise ValueError(f"block sizes must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def p(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        """Total dimension (sum of block sizes)."""
        return sum(self.dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(np.concatenate([[0], np.cumsum(self.dims)]).tolist())

    @cached_property
    def slices(self) -> tuple[slice, ...]:
        o = self.offsets
        return tuple(slice(o[i], o[i + 1]) for i in range(self.p))

    def split(self, vec) -> list[np.ndarray]:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n,):
            raise StructureMismatch(
                f"expected a vector of length {self.n}, got shape {vec.shape}")
        return [vec[sl] for sl in self.slices]

    def identity(self) -> np.ndarray:
        e = np.zeros(self.n)
        e[list(self.offsets[:-1])] = 1.0
        return e


@dataclass(frozen=True)
class ConeVector:
    """A flat vector carrying its block structure."""

    structure: ConeStructure
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.shape != (self.structure.n,):
            raise StructureMismatch(
                f"data of shape {data.shape} does not fit {self.structure.dims}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_blocks(cls, blocks) -> ConeVector:
        blocks = [np.atleast_1d(np.asarray(b, dtype=float)) for b in blocks]
        structure = ConeStructure(tuple(len(b) for b in blocks))
        return cls(structure, np.concatenate(blocks))

    @property
    def blocks(self) -> list[np.ndarray]:
        return self.structure.split(self.data)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.data[self.structure.slices[i]]


def arrow_matrix(x_block) -> np.ndarray:
    """Arrow matrix ``L(x)``: first row/column ``x``, ``x[0]`` on the diagonal."""
    x = np.atleast_1d(np.asarray(x_block, dtype=float))
    n = x.size
    if n < 1:
        raise ValueError("empty block")
    L = x[0] * np.eye(n)
    L[0, :] = x
    L[:, 0] = x
    return L


def block_arrow_matrix(structure: ConeStructure, x) -> np.ndarray:
    """Block-diagonal ``diag(L(x^1), ..., L(x^p))``."""
    out = np.zeros((structure.n, structure.n))
    for sl, xb in zip(structure.slices, structure.split(x)):
        out[sl, sl] = arrow_matrix(xb)
    return out


def jordan_product_flat(structure: ConeStructure, x, s) -> np.ndarray:
    """Blockwise ``x^i o s^i = (x^i . s^i, x_1 s_{2:} + s_1 x_{2:})`` on flat arrays."""
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.empty(structure.n)
    for sl in structure.slices:
        xb, sb = x[sl], s[sl]
        out[sl.start] = xb @ sb
        out[sl.start + 1:sl.stop] = xb[0] * sb[1:] + sb[0] * xb[1:]
    return out


def jordan_product(x: ConeVector, s: ConeVector) -> ConeVector:
    if x.structure != s.structure:
        raise StructureMismatch(
            f"{x.structure.dims} and {s.structure.dims} differ")
    return ConeVector(x.structure, jordan_product_flat(x.structure, x.data, s.data))


def reflection_apply(x_block) -> np.ndarray:
    """``R x`` with ``R = diag(1, -1, ..., -1)``."""
    y = -np.array(np.atleast_1d(x_block), dtype=float)
    y[0] = -y[0]
    return y


@dataclass(frozen=True)
class SpectralFrame:
    """Eigen-decomposition of the arrow matrix of one block.

    ``eigenvalues`` are sorted ascending and ``vectors[:, k]`` is the unit
    eigenvector of ``eigenvalues[k]``. ``positive`` holds the columns whose
    eigenvalue exceeds the tolerance used to build the frame.
    """

    block: int | None
    eigenvalues: np.ndarray
    vectors: np.ndarray
    positive: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.eigenvalues) @ self.vectors.T


def _tail_frame(tail: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit direction of ``tail`` and an orthonormal basis of its complement.

    The complement basis comes from Gram-Schmidt on the canonical vectors,
    smallest index first, so the output is deterministic.
    """
    k = tail.size
    norm = np.linalg.norm(tail)
    if norm > 0.0:
        u = tail / norm
    else:
        u = np.zeros(k)
        u[0] = 1.0
    basis = [u]
    for j in range(k):
        if len(basis) == k:
            break
        v = np.zeros(k)
        v[j] = 1.0
        for _ in range(2):
            for b in basis:
                v = v - (b @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
    return u, np.array(basis[1:]).reshape(-1, k).T


def spectral_decomposition(x_block, tol: float = 0.0, block: int | None = None
                           ) -> SpectralFrame:
    """Closed-form spectral frame of ``L(x)``.

    Eigenvalues are ``x1 - ||x2||``, ``x1`` (multiplicity ``n - 2``) and
    ``x1 + ||x2||``. An eigenvalue counts as positive when it exceeds
    ``tol * max(1, ||x||)``.
    """
    x = np.atleast_1d(np.asarray(x_block, dtype=float))
    n = x.size
    thresh = tol * max(1.0, float(np.linalg.norm(x)))
    if n == 1:
        vals = x.copy()
        vecs = np.ones((1, 1))
    else:
        x1, tail = x[0], x[1:]
        r = np.linalg.norm(tail)
        u, comp = _tail_frame(tail)
        lo = np.concatenate([[1.0], -u]) / np.sqrt(2.0)
        hi = np.concatenate([[1.0], u]) / np.sqrt(2.0)
        mid = np.vstack([np.zeros((1, n - 2)), comp])
        vals = np.concatenate([[x1 - r], np.full(n - 2, x1), [x1 + r]])
        vecs = np.column_stack([lo, mid, hi])
    return SpectralFrame(block, vals, vecs, vecs[:, vals > thresh])


def classify_block(x_block, tol: float) -> BlockStatus:
    """Locate a block relative to its cone, with a scale-aware tolerance.

    The effective threshold is ``tol * max(1, ||x||)``.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    x = np.atleast_1d(np.asarray(x_block, dtype=float))
    norm = float(np.linalg.norm(x))
    t = tol * max(1.0, norm)
    if norm <= t:
        return BlockStatus.ZERO
    gap = x[0] - float(np.linalg.norm(x[1:]))
    if gap > t:
        return BlockStatus.INTERIOR
    if abs(gap) <= t and x[0] > t:
        return BlockStatus.BOUNDARY_NONZERO
    return BlockStatus.OUTSIDE
