"""Timed execution of experiment plans.

Configurations run strictly one after another, sizes outermost, then
variants, then repetitions. Each timed region wraps exactly one kernel
call; input generation and any verification stay outside it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterable, Iterator, Sequence, Union

from .gaussian import RandomStream, random_matrix
from .kernels import KernelVariant
from .matrix import DimensionError, Matrix
from .stats import PowerParams, required_sample_size, summarize

Size = tuple[int, int, int]

DEFAULT_SIZES: tuple[int, ...] = (32, 64, 128, 256, 512, 1024)
THREAD_SWEEP: tuple[int, ...] = (1, 2, 4, 8, 16)
DEFAULT_REPS = 15
DEFAULT_PILOT = 30

TRIAL_HEADER = (
    "size_m", "size_n", "size_p", "variant", "tile", "workers",
    "rep", "wall_seconds", "seed_a", "seed_b", "timestamp",
)


class ClockError(RuntimeError):
    """The timer produced a non-positive duration."""


class PlanError(RuntimeError):
    """A kernel failed while executing a plan; carries the configuration."""


@dataclass
class ExperimentPlan:
    sizes: list[Size]
    variants: list[KernelVariant]
    repetitions: Union[int, str] = DEFAULT_REPS
    seed: int = 0
    warmup: int = 1
    regenerate_per_rep: bool = False
    pilot_reps: int = DEFAULT_PILOT
    power: PowerParams = field(default_factory=PowerParams)

    def __post_init__(self):
        self.sizes = [tuple(int(d) for d in s) for s in self.sizes]
        if not self.sizes:
            raise ValueError("plan needs at least one size")
        for s in self.sizes:
            if len(s) != 3 or min(s) < 1:
                raise ValueError(f"sizes are (m, n, p) triples of positive ints, got {s}")
        if not self.variants:
            raise ValueError("plan needs at least one kernel variant")
        if self.repetitions != "auto":
            if isinstance(self.repetitions, bool) or not isinstance(self.repetitions, int):
                raise ValueError(f"repetitions must be 'auto' or an int, got {self.repetitions!r}")
            if self.repetitions < 2:
                raise ValueError(f"fixed repetitions must be >= 2, got {self.repetitions}")
        if self.pilot_reps < 2:
            raise ValueError(f"pilot_reps must be >= 2, got {self.pilot_reps}")
        if self.warmup < 0:
            raise ValueError(f"warmup must be >= 0, got {self.warmup}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def auto(self) -> bool:
        return self.repetitions == "auto"

    def describe(self) -> dict:
        return {
            "sizes": [list(s) for s in self.sizes],
            "variants": [str(v) for v in self.variants],
            "repetitions": self.repetitions,
            "seed": self.seed,
            "warmup": self.warmup,
            "regenerate_per_rep": self.regenerate_per_rep,
            "pilot_reps": self.pilot_reps,
            "alpha": self.power.alpha,
            "power": self.power.power,
            "effect_size": self.power.effect_size,
        }


@dataclass(frozen=True)
class TrialRecord:
    size: Size
    variant: KernelVariant
    rep_index: int
    wall_seconds: float
    seed_a: int
    seed_b: int
    timestamp: str

    def to_row(self) -> list[str]:
        m, n, p = self.size
        return [
            str(m), str(n), str(p), self.variant.kind,
            "" if self.variant.tile is None else str(self.variant.tile),
            "" if self.variant.workers is None else str(self.variant.workers),
            str(self.rep_index), repr(self.wall_seconds),
            str(self.seed_a), str(self.seed_b), self.timestamp,
        ]

    @classmethod
    def from_row(cls, row: dict[str, str]) -> TrialRecord:
        tile = row["tile"].strip()
        workers = row["workers"].strip()
        variant = KernelVariant(
            row["variant"].strip(),
            tile=int(tile) if tile else None,
            workers=int(workers) if workers else None,
        )
        seconds = float(row["wall_seconds"])
        if not seconds > 0:
            raise ValueError(f"wall_seconds must be > 0, got {seconds}")
        return cls(
            size=(int(row["size_m"]), int(row["size_n"]), int(row["size_p"])),
            variant=variant,
            rep_index=int(row["rep"]),
            wall_seconds=seconds,
            seed_a=int(row["seed_a"]),
            seed_b=int(row["seed_b"]),
            timestamp=row["timestamp"].strip(),
        )


def derive_seed(base: int, size: Size, variant: KernelVariant | str, role: str,
                rep: int | None = None) -> int:
    """Stable 64-bit seed: BLAKE2b-64 of ``base|m x n x p|variant|role[|rep]``."""
    if role not in ("A", "B"):
        raise ValueError(f"role must be 'A' or 'B', got {role!r}")
    m, n, p = size
    key = f"{base}|{m}x{n}x{p}|{variant}|{role}"
    if rep is not None:
        key += f"|{rep}"
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_inputs(seed_a: int, seed_b: int, size: Size) -> tuple[Matrix, Matrix]:
    m, n, p = size
    return (random_matrix(RandomStream(seed_a), m, n),
            random_matrix(RandomStream(seed_b), n, p))


def regenerate_inputs(record: TrialRecord) -> tuple[Matrix, Matrix]:
    """Rebuild the exact inputs a trial was timed on from its recorded seeds."""
    return make_inputs(record.seed_a, record.seed_b, record.size)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def iter_plan(plan: ExperimentPlan,
              timer: Callable[[], int] = time.perf_counter_ns) -> Iterator[TrialRecord]:
    """Yield trial records as they are measured, in plan order.

    ``timer`` must return integer nanoseconds from a monotonic clock.
    """
    for size in plan.sizes:
        for variant in plan.variants:
            yield from _run_config(plan, size, variant, timer)


def run_plan(plan: ExperimentPlan,
             timer: Callable[[], int] = time.perf_counter_ns) -> list[TrialRecord]:
    return list(iter_plan(plan, timer))


def _run_config(plan, size, variant, timer):
    kernel = variant.kernel()

    def seeds(rep):
        r = rep if plan.regenerate_per_rep else None
        return (derive_seed(plan.seed, size, variant, "A", r),
                derive_seed(plan.seed, size, variant, "B", r))

    cache: dict[tuple[int, int], tuple[Matrix, Matrix]] = {}

    def inputs(sa, sb):
        if (sa, sb) not in cache:
            cache.clear()
            cache[(sa, sb)] = make_inputs(sa, sb, size)
        return cache[(sa, sb)]

    def call(a, b):
        try:
            return kernel(a, b)
        except (DimensionError, ValueError) as exc:
            raise PlanError(f"{variant} at {size[0]}x{size[1]}x{size[2]}: {exc}") from exc

    sa, sb = seeds(0)
    a, b = inputs(sa, sb)
    for _ in range(plan.warmup):
        call(a, b)

    def timed(rep):
        sa, sb = seeds(rep)
        a, b = inputs(sa, sb)
        t0 = timer()
        call(a, b)
        t1 = timer()
        if t1 <= t0:
            raise ClockError(
                f"non-positive duration ({t1 - t0} ns) for {variant} at size {size}; "
                "the clock is not monotonic or too coarse"
            )
        return TrialRecord(size, variant, rep, (t1 - t0) * 1e-9, sa, sb, _utc_now())

    if not plan.auto:
        for rep in range(plan.repetitions):
            yield timed(rep)
        return

    pilot = []
    for rep in range(plan.pilot_reps):
        rec = timed(rep)
        pilot.append(rec.wall_seconds)
        yield rec
    total = auto_repetitions(pilot, plan.power)
    for rep in range(plan.pilot_reps, total):
        yield timed(rep)


def auto_repetitions(pilot_seconds: Sequence[float], power: PowerParams) -> int:
    """Total repetitions implied by a pilot run.

    The effect size is read as a fraction of the mean time, so the variance
    fed to the sample-size formula is the squared coefficient of variation.
    """
    s = summarize(pilot_seconds)
    rel_var = s.variance / (s.mean * s.mean)
    params = PowerParams(power.alpha, power.power, power.effect_size, rel_var)
    return max(required_sample_size(params), len(pilot_seconds))


class TrialWriter:
    """Line-buffered CSV sink: every written line is complete on disk."""

    def __init__(self, path: str | os.PathLike):
        self._fh = open(path, "w", encoding="utf-8", newline="", buffering=1)
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(TRIAL_HEADER)
        self._fh.flush()

    def write(self, record: TrialRecord) -> None:
        self._csv.writerow(record.to_row())
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_trials(records: Iterable[TrialRecord], path: str | os.PathLike) -> None:
    with TrialWriter(path) as w:
        for r in records:
            w.write(r)


def parse_trials(text: str) -> list[TrialRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != TRIAL_HEADER:
        raise ValueError(
            f"unexpected trial header {reader.fieldnames}; expected {','.join(TRIAL_HEADER)}"
        )
    records = []
    for line_no, row in enumerate(reader, start=2):
        if None in row or any(v is None for v in row.values()):
            raise ValueError(f"line {line_no}: wrong number of fields")
        try:
            records.append(TrialRecord.from_row(row))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"line {line_no}: {exc}") from None
    return records


def read_trials(path: str | os.PathLike) -> list[TrialRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_trials(fh.read())
