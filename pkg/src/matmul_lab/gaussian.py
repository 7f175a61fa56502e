"""Seedable Box-Muller generation of standard-normal matrices.

Uniforms come from a PCG64 stream (stable across platforms for a given
seed). Each 64-bit word keeps its top 52 bits and is centred inside its
bucket, so every uniform lies in [2**-53, 1 - 2**-53] and ``log(u1)`` is
always finite.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .matrix import Matrix, _check_dims

_TWO_PI = 2.0 * math.pi
_UNIT = 2.0**-52
_MAX_SEED = 2**64 - 1


class DomainError(ValueError):
    """Raised when an input lies outside a function's domain."""


@njit(cache=True)
def _bm(u1, u2):
    r = math.sqrt(-2.0 * math.log(u1))
    theta = _TWO_PI * u2
    return r * math.cos(theta), r * math.sin(theta)


@njit(cache=True)
def _fill_gaussian(raw, out):
    # raw holds 2 words per pair; writes len(raw) normals into out[:len(raw)]
    for p in range(raw.shape[0] // 2):
        u1 = ((raw[2 * p] >> np.uint64(12)) + 0.5) * _UNIT
        u2 = ((raw[2 * p + 1] >> np.uint64(12)) + 0.5) * _UNIT
        z0, z1 = _bm(u1, u2)
        out[2 * p] = z0
        out[2 * p + 1] = z1


def _to_unit(raw: np.ndarray) -> np.ndarray:
    return ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * _UNIT


def box_muller(u1: float, u2: float) -> tuple[float, float]:
    """Map two uniforms on (0, 1) to two independent standard normals."""
    if not 0.0 < u1 < 1.0:
        raise DomainError(f"u1 must lie in the open interval (0, 1), got {u1!r}")
    if not 0.0 < u2 < 1.0:
        raise DomainError(f"u2 must lie in the open interval (0, 1), got {u2!r}")
    return _bm(float(u1), float(u2))


class RandomStream:
    """Single-owner stream of uniforms and Gaussian pairs.

    Not safe to share between threads; derive one seed per worker instead.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed <= _MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._bits = np.random.PCG64(seed)
        self.cached_gaussian: float | None = None

    def _raw(self, n: int) -> np.ndarray:
        return self._bits.random_raw(n)

    def next_uniform_pair(self) -> tuple[float, float]:
        u1, u2 = _to_unit(self._raw(2))
        return float(u1), float(u2)

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` uniforms on (0, 1) as an array; same mapping as ``next_uniform_pair``."""
        return _to_unit(self._raw(n))

    def gaussians(self, n: int) -> np.ndarray:
        """Next ``n`` standard normals, the cached pair member first."""
        out = np.empty(n, dtype=np.float64)
        start = 0
        if n and self.cached_gaussian is not None:
            out[0] = self.cached_gaussian
            self.cached_gaussian = None
            start = 1
        remaining = n - start
        pairs = (remaining + 1) // 2
        if pairs:
            buf = np.empty(2 * pairs, dtype=np.float64)
            _fill_gaussian(self._raw(2 * pairs), buf)
            out[start:] = buf[:remaining]
            if remaining % 2:
                self.cached_gaussian = float(buf[-1])
        return out

    def next_gaussian(self) -> float:
        return float(self.gaussians(1)[0])


def random_matrix(stream: RandomStream, rows: int, cols: int) -> Matrix:
    """Fill a ``rows x cols`` matrix with Gaussian draws in row-major order."""
    _check_dims(rows, cols)
    return Matrix(rows, cols, stream.gaussians(int(rows) * int(cols)))
