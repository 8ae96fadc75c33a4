import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import two_block_eigs
from socopart.cones import (BlockStatus, ConeStructure, ConeVector,
                            arrow_matrix, block_arrow_matrix, classify_block,
                            jordan_product, jordan_product_flat,
                            reflection_apply, spectral_decomposition)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
blocks = st.integers(1, 6).flatmap(lambda n: arrays(float, n, elements=finite))


def test_structure_basics():
    s = ConeStructure((3, 2))
    assert s.p == 2 and s.n == 5
    assert s.slices == (slice(0, 3), slice(3, 5))
    np.testing.assert_array_equal(s.identity(), [1, 0, 0, 1, 0])
    with pytest.raises(ValueError):
        ConeStructure((3, 0))


def test_arrow_and_product_small():
    x = np.array([2.0, 1.0, -1.0])
    s = np.array([1.0, 0.5, 0.5])
    L = arrow_matrix(x)
    np.testing.assert_allclose(L, [[2, 1, -1], [1, 2, 0], [-1, 0, 2]])
    # x o s = (x's; x1 s2: + s1 x2:)
    np.testing.assert_allclose(jordan_product_flat(ConeStructure((3,)), x, s),
                               [2.0, 2.0, 0.0])


def test_reflection():
    np.testing.assert_array_equal(reflection_apply([1.0, 2.0, -3.0]), [1, -2, 3])


def test_conevector_roundtrip():
    st_ = ConeStructure((2, 1))
    v = ConeVector.from_blocks([np.array([1.0, 0.5]), np.array([3.0])])
    assert v.structure == st_
    w = jordan_product(v, v)
    np.testing.assert_allclose(w.blocks[1], [9.0])
    np.testing.assert_allclose(w[0], [1.25, 1.0])


@pytest.mark.parametrize("x,status", [
    ([0.0, 0.0, 0.0], BlockStatus.ZERO),
    ([2.0, 1.0, 0.0], BlockStatus.INTERIOR),
    ([1.0, 0.6, 0.8], BlockStatus.BOUNDARY_NONZERO),
    ([1.0, 2.0, 0.0], BlockStatus.OUTSIDE),
    ([3.0], BlockStatus.INTERIOR),
])
def test_classify_block(x, status):
    assert classify_block(x, 1e-9) is status


@settings(max_examples=200, deadline=None)
@given(blocks)
def test_eigenvalue_law_matches_dense(x):
    frame = spectral_decomposition(x)
    dense = two_block_eigs(x)
    scale = max(1.0, np.abs(x).max())
    np.testing.assert_allclose(frame.eigenvalues, dense, atol=1e-10 * scale)
    np.testing.assert_allclose(frame.reconstruct(), arrow_matrix(x),
                               atol=1e-10 * scale)
    np.testing.assert_allclose(frame.vectors.T @ frame.vectors,
                               np.eye(x.size), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5).flatmap(
    lambda n: st.tuples(arrays(float, n, elements=finite),
                        arrays(float, n, elements=finite))))
def test_jordan_product_commutes_and_matches_arrow(pair):
    x, s = pair
    st_ = ConeStructure((x.size,))
    xs = jordan_product_flat(st_, x, s)
    np.testing.assert_allclose(xs, jordan_product_flat(st_, s, x))
    np.testing.assert_allclose(xs, block_arrow_matrix(st_, x) @ s,
                               rtol=1e-12, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(blocks)
def test_spectral_positive_columns_track_sign(x):
    frame = spectral_decomposition(x, tol=1e-9)
    thresh = 1e-9 * max(1.0, np.linalg.norm(x))
    assert frame.positive.shape[1] == int(np.sum(frame.eigenvalues > thresh))
