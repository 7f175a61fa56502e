import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matmul_lab.gaussian import RandomStream, random_matrix
from matmul_lab.kernels import (
    KernelVariant, matmul_naive, matmul_parallel, matmul_prefetch, matmul_tiled, partition_rows,
)
from matmul_lab.matrix import DimensionError, Matrix, approx_equal, bit_equal, new_zero, transpose


def reference_product(a: Matrix, b: Matrix) -> Matrix:
    """Plain-Python i-j-k loop with one accumulator, independent of the compiled kernels."""
    A, B = a.tolist(), b.tolist()
    out = []
    for i in range(a.rows):
        row = []
        for j in range(b.cols):
            acc = 0.0
            for k in range(a.cols):
                acc += A[i][k] * B[k][j]
            row.append(acc)
        out.append(row)
    return Matrix.from_array(out)


def gaussian(seed, rows, cols):
    return random_matrix(RandomStream(seed), rows, cols)


TWO = Matrix.from_array([[1, 2], [3, 4]]), Matrix.from_array([[5, 6], [7, 8]])
ALL = [
    matmul_naive,
    matmul_prefetch,
    lambda a, b: matmul_tiled(a, b, 1),
    lambda a, b: matmul_tiled(a, b, 32),
    lambda a, b: matmul_parallel(a, b, 3),
]


@pytest.mark.parametrize("kernel", ALL)
def test_two_by_two(kernel):
    assert kernel(*TWO).tolist() == [[19, 22], [43, 50]]


@pytest.mark.parametrize("kernel", ALL)
def test_identity_and_zero(kernel):
    a = gaussian(1, 8, 8)
    assert bit_equal(kernel(a, Matrix.identity(8)), a)
    z = kernel(a, new_zero(8, 5))
    assert z.shape == (8, 5) and not z.data.any()


def test_scalar_product():
    assert matmul_prefetch(Matrix.from_array([[2.0]]), Matrix.from_array([[3.0]])).tolist() == [[6.0]]


@pytest.mark.parametrize("kernel", ALL)
def test_dimension_mismatch_names_shapes(kernel):
    with pytest.raises(DimensionError, match="2x3.*2x2"):
        kernel(new_zero(2, 3), new_zero(2, 2))


def test_naive_matches_python_reference_bitwise():
    for m, n, p in [(1, 1, 1), (3, 5, 2), (7, 4, 9), (16, 16, 16)]:
        a, b = gaussian(m * 100 + n, m, n), gaussian(p * 7 + 1, n, p)
        assert bit_equal(matmul_naive(a, b), reference_product(a, b))


def test_small_shapes_exhaustive():
    for m, n, p in itertools.product(range(1, 9), repeat=3):
        a, b = gaussian(m * 81 + n * 9 + p, m, n), gaussian(1000 + m * 81 + n * 9 + p, n, p)
        ref = matmul_naive(a, b)
        assert bit_equal(matmul_prefetch(a, b), ref)
        assert bit_equal(matmul_parallel(a, b, 3), ref)
        for tile in (1, 2, 3, 32):
            assert approx_equal(ref, matmul_tiled(a, b, tile), 1e-10)


@pytest.mark.parametrize("n", [32, 64, 100, 128])
def test_oracle_equivalence_larger(n):
    a, b = gaussian(n, n, n), gaussian(n + 1, n, n)
    ref = matmul_naive(a, b)
    assert np.allclose(ref.as_array(), a.as_array() @ b.as_array(), rtol=1e-12, atol=1e-12)
    assert bit_equal(matmul_prefetch(a, b), ref)
    assert bit_equal(matmul_parallel(a, b, 4), ref)
    assert approx_equal(ref, matmul_tiled(a, b, 32), 1e-10)


def test_prefetch_bit_equal_at_64_seed_3():
    s = RandomStream(3)
    a, b = random_matrix(s, 64, 64), random_matrix(s, 64, 64)
    assert bit_equal(matmul_prefetch(a, b), matmul_naive(a, b))


def test_tiled_examples():
    s = RandomStream(5)
    a, b = random_matrix(s, 128, 128), random_matrix(s, 128, 128)
    assert approx_equal(matmul_naive(a, b), matmul_tiled(a, b, 32), 1e-10)
    a, b = gaussian(6, 100, 100), gaussian(16, 100, 100)
    assert approx_equal(matmul_naive(a, b), matmul_tiled(a, b, 32), 1e-10)
    a, b = gaussian(2, 20, 30), gaussian(4, 30, 25)
    assert bit_equal(matmul_tiled(a, b, 30), matmul_naive(a, b))


def test_tiled_rejects_zero_tile():
    with pytest.raises(ValueError):
        matmul_tiled(new_zero(2, 2), new_zero(2, 2), 0)


def test_parallel_worker_counts_agree():
    s = RandomStream(9)
    a, b = random_matrix(s, 256, 256), random_matrix(s, 256, 256)
    ref = matmul_naive(a, b)
    assert bit_equal(matmul_parallel(a, b, 1), ref)
    for w in (2, 4, 8):
        assert bit_equal(matmul_parallel(a, b, w), ref)


def test_parallel_more_workers_than_rows():
    a, b = gaussian(1, 3, 5), gaussian(2, 5, 4)
    ranges = partition_rows(3, 8)
    assert sum(1 for lo, hi in ranges if lo == hi) == 5
    assert bit_equal(matmul_parallel(a, b, 8), reference_product(a, b))


@given(st.integers(0, 300), st.integers(1, 40))
def test_partition_rows_covers_range(m, workers):
    ranges = partition_rows(m, workers)
    assert len(ranges) == workers
    block = -(-m // workers)
    covered = [i for lo, hi in ranges for i in range(lo, hi)]
    assert covered == list(range(m))
    assert all(hi - lo <= block for lo, hi in ranges)


def test_transpose_of_product():
    a, b = gaussian(21, 64, 64), gaussian(22, 64, 64)
    lhs = transpose(matmul_naive(a, b))
    for kernel in ALL:
        assert approx_equal(lhs, kernel(transpose(b), transpose(a)), 1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 40), st.integers(1, 9),
       st.integers(1, 12), st.integers(0, 2**32))
def test_random_shapes_against_reference(m, n, p, tile, workers, seed):
    a, b = gaussian(seed, m, n), gaussian(seed + 1, n, p)
    ref = reference_product(a, b)
    assert bit_equal(matmul_naive(a, b), ref)
    assert bit_equal(matmul_prefetch(a, b), ref)
    assert bit_equal(matmul_parallel(a, b, workers), ref)
    assert approx_equal(ref, matmul_tiled(a, b, tile), 1e-10)


@pytest.mark.parametrize("variant", ["naive", "prefetch", "tiled:16", "parallel:1", "parallel:4"])
def test_repeat_invocations_are_identical(variant):
    v = KernelVariant.parse(variant)
    a, b = gaussian(1, 96, 80), gaussian(2, 80, 72)
    assert bit_equal(v(a, b), v(a, b))


def test_variant_parsing():
    assert KernelVariant.parse("naive") == KernelVariant("naive")
    assert KernelVariant.parse("tiled") == KernelVariant("tiled", tile=32)
    assert KernelVariant.parse("tiled:8").tile == 8
    assert KernelVariant.parse("parallel:4").workers == 4
    assert str(KernelVariant("parallel", workers=16)) == "parallel:16"
    assert KernelVariant("naive", tile=5, workers=3) == KernelVariant("naive")
    for bad in ("bogus", "parallel", "parallel:0", "tiled:0", "naive:3", "tiled:x"):
        with pytest.raises(ValueError):
            KernelVariant.parse(bad)
