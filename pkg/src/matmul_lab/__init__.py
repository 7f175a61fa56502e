"""Serial, prefetch, tiled and thread-parallel matrix multiplication with a
benchmark harness for timing them."""

__version__ = "0.1.0"

from .gaussian import RandomStream, box_muller, random_matrix
from .kernels import (
    KernelVariant, matmul_naive, matmul_parallel, matmul_prefetch, matmul_tiled,
)
from .matrix import Matrix, approx_equal, bit_equal, load_csv, new_zero, save_csv, transpose
from .stats import PowerParams, normal_quantile, required_sample_size, summarize

__all__ = [
    "Matrix", "new_zero", "transpose", "approx_equal", "bit_equal", "load_csv", "save_csv",
    "RandomStream", "box_muller", "random_matrix",
    "KernelVariant", "matmul_naive", "matmul_prefetch", "matmul_tiled", "matmul_parallel",
    "PowerParams", "normal_quantile", "required_sample_size", "summarize",
]
