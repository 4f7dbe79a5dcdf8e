import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import block_diag

from smcodec.linops import (
    BlockTransformSpec,
    ScaledOperator,
    TransformKind,
    apply_inverse_permutation,
    apply_permutation,
    block_transform_adjoint,
    block_transform_forward,
    dense_block_matrix,
    identity_permutation,
    make_permutation,
    make_subsampler,
    selector_from_rows,
    srm_adjoint,
    srm_apply,
    srm_operator,
    subsample,
    subsample_adjoint,
)


def dense(op: ScaledOperator) -> np.ndarray:
    n = op.transform.n
    return np.stack([srm_apply(op, e) for e in np.eye(n)], axis=1)


# -- permutation


@given(st.integers(0, 2**64 - 1), st.integers(1, 500))
@settings(max_examples=50)
def test_permutation_round_trip(seed, n):
    p = make_permutation(seed, n)
    x = np.arange(n) * 3 + 1
    assert np.array_equal(apply_inverse_permutation(p, apply_permutation(p, x)), x)
    assert np.array_equal(apply_permutation(p, apply_inverse_permutation(p, x)), x)
    assert np.array_equal(np.sort(p.forward), np.arange(n))
    assert np.array_equal(p.inverse_indices()[p.forward], np.arange(n))


def test_permutation_is_read_only_and_seeded():
    p = make_permutation(3, 20)
    with pytest.raises(ValueError):
        p.forward[0] = 1
    assert np.array_equal(p.forward, make_permutation(3, 20).forward)
    assert not np.array_equal(p.forward, make_permutation(4, 20).forward)


def test_permutation_errors():
    with pytest.raises(ValueError):
        make_permutation(0, 0)
    with pytest.raises(ValueError):
        apply_permutation(make_permutation(0, 4), np.zeros(5))


def test_identity_permutation():
    x = np.arange(6.0)
    assert np.array_equal(apply_permutation(identity_permutation(6), x), x)


# -- block transforms


@pytest.mark.parametrize("kind", list(TransformKind))
@pytest.mark.parametrize("B", [1, 2, 8, 32])
def test_dense_block_is_orthonormal(kind, B):
    m = dense_block_matrix(kind, B)
    np.testing.assert_allclose(m @ m.T, np.eye(B), atol=1e-12)


def test_dct_dc_and_wht_rows():
    # DC coefficient of a constant block is sqrt(B) * value
    spec = BlockTransformSpec(TransformKind.BDCT, 8, 16)
    y = block_transform_forward(spec, np.full(16, 2.0))
    np.testing.assert_allclose(y[[0, 8]], [2.0 * math.sqrt(8)] * 2)
    np.testing.assert_allclose(np.delete(y, [0, 8]), 0.0, atol=1e-12)
    # natural (Sylvester) ordering, row k entry i = (-1)^popcount(k & i)
    H = dense_block_matrix("bwht", 4) * 2
    assert H.tolist() == [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]]


@pytest.mark.parametrize("kind", list(TransformKind))
@pytest.mark.parametrize("B,n", [(4, 16), (8, 64), (32, 128)])
def test_fast_transform_matches_block_diagonal_matrix(kind, B, n, rng):
    spec = BlockTransformSpec(kind, B, n)
    F = block_diag(*[dense_block_matrix(kind, B)] * (n // B))
    x = rng.standard_normal(n)
    np.testing.assert_allclose(block_transform_forward(spec, x), F @ x, atol=1e-12)
    np.testing.assert_allclose(block_transform_adjoint(spec, x), F.T @ x, atol=1e-12)


@pytest.mark.parametrize("kind", list(TransformKind))
def test_transform_round_trip_large(kind, rng):
    spec = BlockTransformSpec(kind, 32, 512 * 512)
    x = rng.standard_normal(spec.n)
    back = block_transform_adjoint(spec, block_transform_forward(spec, x))
    assert np.max(np.abs(back - x)) <= 1e-9 * np.max(np.abs(x))


def test_transform_spec_errors():
    with pytest.raises(ValueError):
        BlockTransformSpec(TransformKind.BDCT, 32, 100)
    with pytest.raises(ValueError):
        BlockTransformSpec(TransformKind.BWHT, 24, 48)
    BlockTransformSpec(TransformKind.BDCT, 24, 48)
    with pytest.raises(KeyError):
        TransformKind.parse("fft")


# -- subsampler


@given(st.integers(0, 2**64 - 1), st.integers(1, 400), st.data())
@settings(max_examples=50)
def test_subsampler_rows_distinct(seed, n, data):
    m = data.draw(st.integers(1, n))
    sel = make_subsampler(seed, n, m)
    assert sel.rows.shape == (m,)
    assert np.unique(sel.rows).size == m
    assert sel.rows.min() >= 0 and sel.rows.max() < n


def test_subsampler_errors():
    with pytest.raises(ValueError):
        make_subsampler(0, 10, 0)
    with pytest.raises(ValueError):
        make_subsampler(0, 10, 11)
    with pytest.raises(ValueError):
        selector_from_rows(5, [1, 1])
    with pytest.raises(ValueError):
        selector_from_rows(5, [5])


def test_subsample_adjoint_pair(rng):
    sel = make_subsampler(1, 50, 20)
    x, y = rng.standard_normal(50), rng.standard_normal(20)
    assert math.isclose(subsample(sel, x, 2.0) @ y, x @ subsample_adjoint(sel, y, 2.0), rel_tol=1e-12)


def test_restrict_keeps_positions():
    sel = make_subsampler(5, 100, 30)
    r = sel.restrict([0, 5, 29])
    assert r.m == 3
    assert r.rows.tolist() == sel.rows[[0, 5, 29]].tolist()


def test_subsample_row_frequency():
    # every row is kept with probability m / n
    n, m, trials = 40, 10, 4000
    freq = np.zeros(n)
    for s in range(trials):
        freq[make_subsampler(s, n, m).rows] += 1
    assert np.all(np.abs(freq / trials - m / n) < 0.04)


# -- composed operator


@pytest.mark.parametrize("kind", list(TransformKind))
def test_srm_adjoint_inner_product(kind, rng):
    n, m = 4096, 1500
    op = srm_operator(BlockTransformSpec(kind, 32, n), make_subsampler(2, n, m), make_permutation(3, n))
    x, y = rng.standard_normal(n), rng.standard_normal(m)
    lhs, rhs = srm_apply(op, x) @ y, x @ srm_adjoint(op, y)
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


def test_default_scale_and_row_orthogonality():
    n, m = 64, 24
    op = srm_operator(BlockTransformSpec("bdct", 8, n), make_subsampler(9, n, m), make_permutation(4, n))
    assert op.scale == pytest.approx(math.sqrt(n / m))
    A = dense(op)
    np.testing.assert_allclose(A @ A.T, (n / m) * np.eye(m), atol=1e-10)


def test_srm_expected_gram_is_identity():
    # E[Phi^T Phi] = I over the random subset
    n, m, trials = 16, 8, 3000
    spec = BlockTransformSpec("bwht", 8, n)
    acc = np.zeros((n, n))
    R = make_permutation(1, n)
    for s in range(trials):
        A = dense(srm_operator(spec, make_subsampler(s, n, m), R))
        acc += A.T @ A
    np.testing.assert_allclose(acc / trials, np.eye(n), atol=0.06)


@pytest.mark.parametrize("kind", list(TransformKind))
def test_structural_matrix_on_permuted_equals_srm(kind, rng):
    n = 1024
    spec = BlockTransformSpec(kind, 32, n)
    sel, R = make_subsampler(8, n, 600), make_permutation(6, n)
    x = rng.standard_normal(n)
    srm = srm_apply(srm_operator(spec, sel, R), x)
    sm = srm_apply(srm_operator(spec, sel), apply_permutation(R, x))
    assert np.array_equal(srm, sm)


def test_operator_dimension_check():
    with pytest.raises(ValueError):
        ScaledOperator(BlockTransformSpec("bdct", 8, 64), make_subsampler(0, 32, 4), 1.0)
