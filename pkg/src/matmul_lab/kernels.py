"""Matrix multiplication kernels: naive, prefetch, tiled and thread-parallel.

All kernels compute ``C = A @ B`` for an ``m x n`` A and ``n x p`` B. The
inner loops are compiled with numba (no fastmath, so floating-point
operations are never reassociated) and release the GIL, which lets the
parallel kernel run real shared-memory threads.
"""

from __future__ import annotations

import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .matrix import DimensionError, Matrix

DEFAULT_TILE = 32
KINDS = ("naive", "prefetch", "tiled", "parallel")


@njit(nogil=True, cache=True)
def _naive_rows(a, b, c, row_start, row_stop):
    n = a.shape[1]
    p = b.shape[1]
    for i in range(row_start, row_stop):
        for j in range(p):
            acc = 0.0
            for k in range(n):
                acc += a[i, k] * b[k, j]
            c[i, j] = acc


@njit(nogil=True, cache=True)
def _prefetch(a, b, c):
    m, n = a.shape
    p = b.shape[1]
    bt = np.empty((p, n))
    for k in range(n):
        for j in range(p):
            bt[j, k] = b[k, j]
    for i in range(m):
        for j in range(p):
            acc = 0.0
            for k in range(n):
                acc += a[i, k] * bt[j, k]
            c[i, j] = acc


@njit(nogil=True, cache=True)
def _tiled(a, b, c, tile):
    # c must be zeroed; each (i, j) still accumulates in ascending k.
    m, n = a.shape
    p = b.shape[1]
    for ii in range(0, m, tile):
        i_stop = min(ii + tile, m)
        for kk in range(0, n, tile):
            k_stop = min(kk + tile, n)
            for jj in range(0, p, tile):
                j_stop = min(jj + tile, p)
                for i in range(ii, i_stop):
                    for k in range(kk, k_stop):
                        aik = a[i, k]
                        for j in range(jj, j_stop):
                            c[i, j] += aik * b[k, j]


def _conformable(a: Matrix, b: Matrix) -> tuple[np.ndarray, np.ndarray]:
    if a.cols != b.rows:
        raise DimensionError(
            f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}: inner dimensions differ"
        )
    return a.as_array(), b.as_array()


def matmul_naive(a: Matrix, b: Matrix) -> Matrix:
    """Triple loop i-j-k with one scalar accumulator per output element."""
    aa, bb = _conformable(a, b)
    c = np.empty((a.rows, b.cols))
    _naive_rows(aa, bb, c, 0, a.rows)
    return Matrix(a.rows, b.cols, c)


def matmul_prefetch(a: Matrix, b: Matrix) -> Matrix:
    """Naive product after copying B's columns into contiguous rows.

    The transpose happens inside the call, so timing it includes that cost.
    """
    aa, bb = _conformable(a, b)
    c = np.empty((a.rows, b.cols))
    _prefetch(aa, bb, c)
    return Matrix(a.rows, b.cols, c)


def matmul_tiled(a: Matrix, b: Matrix, tile: int = DEFAULT_TILE) -> Matrix:
    aa, bb = _conformable(a, b)
    if tile < 1:
        raise ValueError(f"tile must be >= 1, got {tile}")
    c = np.zeros((a.rows, b.cols))
    _tiled(aa, bb, c, int(tile))
    return Matrix(a.rows, b.cols, c)


def partition_rows(m: int, workers: int) -> list[tuple[int, int]]:
    """Split ``range(m)`` into ``workers`` contiguous blocks of ceil(m / workers).

    Trailing blocks may be short or empty.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    block = -(-m // workers)
    return [(min(w * block, m), min((w + 1) * block, m)) for w in range(workers)]


@functools.lru_cache(maxsize=None)
def _pool(workers: int) -> ThreadPoolExecutor:
    # one long-lived team per worker count, like an OpenMP runtime
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix=f"matmul{workers}")


def matmul_parallel(a: Matrix, b: Matrix, workers: int) -> Matrix:
    """Row-block parallel naive product; bit-identical to ``matmul_naive``."""
    aa, bb = _conformable(a, b)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    c = np.empty((a.rows, b.cols))
    ranges = partition_rows(a.rows, workers)
    if workers == 1:
        _naive_rows(aa, bb, c, 0, a.rows)
    else:
        futures = [_pool(workers).submit(_naive_rows, aa, bb, c, lo, hi) for lo, hi in ranges]
        for f in futures:
            f.result()
    return Matrix(a.rows, b.cols, c)


@dataclass(frozen=True)
class KernelVariant:
    """A kernel choice plus its parameter, written ``kind`` or ``kind:param``.

    ``tile`` is only meaningful for ``tiled`` and ``workers`` only for
    ``parallel``; both are ``None`` otherwise.
    """

    kind: str
    tile: int | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.kind == "tiled":
            if self.tile is None:
                object.__setattr__(self, "tile", DEFAULT_TILE)
            if self.tile < 1:
                raise ValueError(f"tile must be >= 1, got {self.tile}")
        elif self.tile is not None:
            object.__setattr__(self, "tile", None)
        if self.kind == "parallel":
            if self.workers is None:
                raise ValueError("parallel kernel needs a worker count")
            if self.workers < 1:
                raise ValueError(f"workers must be >= 1, got {self.workers}")
        elif self.workers is not None:
            object.__setattr__(self, "workers", None)

    @classmethod
    def parse(cls, text: str) -> KernelVariant:
        kind, _, param = text.strip().partition(":")
        kind = kind.strip().lower()
        value = None
        if param:
            try:
                value = int(param)
            except ValueError:
                raise ValueError(f"bad kernel parameter in {text!r}") from None
        if kind == "tiled":
            return cls(kind, tile=value)
        if kind == "parallel":
            return cls(kind, workers=value)
        if value is not None:
            raise ValueError(f"kernel {kind!r} takes no parameter")
        return cls(kind)

    @property
    def param(self) -> int | None:
        return self.tile if self.kind == "tiled" else self.workers

    def __str__(self) -> str:
        return self.kind if self.param is None else f"{self.kind}:{self.param}"

    def sort_key(self) -> tuple[int, int]:
        return (KINDS.index(self.kind), self.param or 0)

    def kernel(self) -> Callable[[Matrix, Matrix], Matrix]:
        fn = KERNELS[self.kind]
        if self.kind == "tiled":
            return functools.partial(fn, tile=self.tile)
        if self.kind == "parallel":
            return functools.partial(fn, workers=self.workers)
        return fn

    def __call__(self, a: Matrix, b: Matrix) -> Matrix:
        return self.kernel()(a, b)


# Dispatch table; looked up at call time so tests can inject faulty kernels.
KERNELS: dict[str, Callable[..., Matrix]] = {
    "naive": matmul_naive,
    "prefetch": matmul_prefetch,
    "tiled": matmul_tiled,
    "parallel": matmul_parallel,
}
