"""Dense row-major matrices of 64-bit reals, plus CSV persistence."""

from __future__ import annotations

import math
import os
import sys
from typing import Iterable, Sequence

import numpy as np

# Denominator floor for relative comparisons against an all-zero matrix.
_NORM_FLOOR = 1e-300


class DimensionError(ValueError):
    """Raised for invalid or non-conformable matrix dimensions."""


class CsvFormatError(ValueError):
    """Raised when a CSV matrix file is malformed.

    ``row`` and ``col`` are 1-based positions of the offending line/token.
    """

    def __init__(self, message: str, row: int, col: int | None = None):
        where = f"row {row}" if col is None else f"row {row}, column {col}"
        super().__init__(f"{where}: {message}")
        self.row = row
        self.col = col


def _check_dims(rows: int, cols: int) -> None:
    if isinstance(rows, bool) or isinstance(cols, bool):
        raise DimensionError("dimensions must be integers")
    try:
        rows, cols = int(rows), int(cols)
    except (TypeError, ValueError):
        raise DimensionError(f"dimensions must be integers, got {rows!r}x{cols!r}") from None
    if rows < 1 or cols < 1:
        raise DimensionError(f"dimensions must be >= 1, got {rows}x{cols}")
    if rows * cols > sys.maxsize // 8:
        raise DimensionError(f"{rows}x{cols} overflows the addressable element count")


class Matrix:
    """A ``rows x cols`` matrix stored as a flat, contiguous float64 buffer.

    Element ``(i, j)`` lives at ``data[i * cols + j]``.
    """

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: Iterable[float] | np.ndarray | None = None):
        _check_dims(rows, cols)
        self.rows = int(rows)
        self.cols = int(cols)
        if data is None:
            buf = np.zeros(self.rows * self.cols, dtype=np.float64)
        else:
            buf = np.ascontiguousarray(np.asarray(data, dtype=np.float64).reshape(-1))
            if buf.size != self.rows * self.cols:
                raise DimensionError(
                    f"data has {buf.size} elements, expected {self.rows}x{self.cols}"
                )
        self.data = buf

    @classmethod
    def from_array(cls, array: np.ndarray | Sequence[Sequence[float]]) -> Matrix:
        arr = np.asarray(array, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got {arr.ndim}-D")
        return cls(arr.shape[0], arr.shape[1], arr.copy())

    @classmethod
    def identity(cls, n: int) -> Matrix:
        return cls.from_array(np.eye(n))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def as_array(self) -> np.ndarray:
        """2-D view sharing storage with ``data``."""
        return self.data.reshape(self.rows, self.cols)

    def __getitem__(self, index: tuple[int, int]) -> float:
        i, j = index
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i}, {j}) out of range for {self.rows}x{self.cols}")
        return float(self.data[i * self.cols + j])

    def tolist(self) -> list[list[float]]:
        return self.as_array().tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        if self.rows * self.cols <= 16:
            return f"Matrix({self.rows}, {self.cols}, {self.tolist()})"
        return f"Matrix({self.rows}, {self.cols}, ...)"


def new_zero(rows: int, cols: int) -> Matrix:
    return Matrix(rows, cols)


def transpose(a: Matrix) -> Matrix:
    return Matrix(a.cols, a.rows, np.ascontiguousarray(a.as_array().T))


def bit_equal(a: Matrix, b: Matrix) -> bool:
    """True iff shapes match and every element has the same bit pattern."""
    return a.shape == b.shape and a.data.tobytes() == b.data.tobytes()


def frobenius(x: np.ndarray) -> float:
    """Frobenius norm, rescaled so tiny or huge entries neither underflow nor overflow."""
    scale = float(np.max(np.abs(x))) if x.size else 0.0
    if scale == 0.0 or not math.isfinite(scale):
        return scale
    return scale * float(np.linalg.norm(x / scale))


def relative_error(a: Matrix, b: Matrix) -> float:
    """Frobenius norm of ``a - b`` over the larger operand norm (floored at 1e-300)."""
    if a.shape != b.shape:
        raise DimensionError(f"cannot compare {a.rows}x{a.cols} with {b.rows}x{b.cols}")
    denom = max(frobenius(a.data), frobenius(b.data), _NORM_FLOOR)
    return frobenius(a.data - b.data) / denom


def approx_equal(a: Matrix, b: Matrix, rel_tol: float) -> bool:
    if rel_tol < 0:
        raise ValueError(f"rel_tol must be >= 0, got {rel_tol}")
    if a.shape != b.shape:
        return False
    if bit_equal(a, b):
        return True
    return relative_error(a, b) <= rel_tol


def save_csv(m: Matrix, path: str | os.PathLike) -> None:
    # repr() of a Python float is the shortest string that round-trips exactly.
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in m.as_array().tolist():
            fh.write(",".join(map(repr, row)))
            fh.write("\n")


def load_csv(path: str | os.PathLike) -> Matrix:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CsvFormatError("file contains no rows", row=1)

    values: list[float] = []
    width = None
    for r, line in enumerate(lines, start=1):
        tokens = line.split(",")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise CsvFormatError(
                f"ragged row: expected {width} values, found {len(tokens)}", row=r
            )
        for c, tok in enumerate(tokens, start=1):
            try:
                v = float(tok)
            except ValueError:
                raise CsvFormatError(f"cannot parse {tok!r} as a number", row=r, col=c) from None
            if not math.isfinite(v):
                raise CsvFormatError(f"non-finite value {tok!r}", row=r, col=c)
            values.append(v)
    return Matrix(len(lines), width, values)
