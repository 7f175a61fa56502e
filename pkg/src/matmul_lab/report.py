"""Aggregation of trial records into summary tables and complexity fits."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .harness import Size, TrialRecord
from .kernels import KernelVariant
from .stats import InsufficientDataError, Summary, summarize

MIN_FIT_SIZE = 128

SUMMARY_COLUMNS = (
    "size_m", "size_n", "size_p", "variant", "tile", "workers",
    "n", "mean", "variance", "std_dev", "min", "max", "ci95_half_width",
    "speedup", "efficiency",
)


@dataclass(frozen=True)
class SummaryRow:
    size: Size
    variant: KernelVariant
    summary: Summary
    speedup: float | None = None
    efficiency: float | None = None


@dataclass(frozen=True)
class ComplexityFit:
    variant: KernelVariant
    slope: float
    intercept: float
    r_squared: float
    sizes: tuple[int, ...]


def _baseline_key(size: Size, variant: KernelVariant, means: dict) -> tuple | None:
    if variant.kind == "parallel":
        one = (size, KernelVariant("parallel", workers=1))
        if one in means:
            return one
    naive = (size, KernelVariant("naive"))
    return naive if naive in means else None


def summarize_trials(records: Iterable[TrialRecord]) -> list[SummaryRow]:
    """One row per (size, variant), ordered by size then variant.

    Speedups are against the naive kernel at the same size; parallel
    variants use the single-worker parallel run instead when it exists.
    """
    groups: dict[tuple[Size, KernelVariant], list[float]] = defaultdict(list)
    for r in records:
        groups[(r.size, r.variant)].append(r.wall_seconds)
    if not groups:
        raise InsufficientDataError("no trial records")

    summaries = {}
    for key, secs in groups.items():
        try:
            summaries[key] = summarize(secs)
        except InsufficientDataError:
            size, variant = key
            raise InsufficientDataError(
                f"{variant} at {size[0]}x{size[1]}x{size[2]} has {len(secs)} record(s); need >= 2"
            ) from None
    means = {k: s.mean for k, s in summaries.items()}

    rows = []
    for (size, variant), s in sorted(summaries.items(), key=lambda kv: (kv[0][0], kv[0][1].sort_key())):
        base = _baseline_key(size, variant, means)
        speedup = efficiency = None
        if base is not None:
            speedup = 1.0 if base == (size, variant) else means[base] / s.mean
            if variant.kind == "parallel":
                efficiency = speedup / variant.workers
        rows.append(SummaryRow(size, variant, s, speedup, efficiency))
    return rows


def missing_baselines(rows: Sequence[SummaryRow]) -> list[str]:
    return [
        f"no baseline for {r.variant} at {_size_label(r.size)}; speedup omitted"
        for r in rows if r.speedup is None
    ]


def fit_complexity(rows: Sequence[SummaryRow], variant: KernelVariant,
                   min_size: int = MIN_FIT_SIZE) -> ComplexityFit:
    """Least-squares line through (log2 n, log2 mean seconds) over square sizes."""
    points = sorted(
        (r.size[0], r.summary.mean) for r in rows
        if r.variant == variant and r.size[0] == r.size[1] == r.size[2] and r.size[0] >= min_size
    )
    if len(points) < 3:
        raise InsufficientDataError(
            f"{variant}: complexity fit needs >= 3 square sizes >= {min_size}, got {len(points)}"
        )
    xs = [math.log2(n) for n, _ in points]
    ys = [math.log2(t) for _, t in points]
    x_bar = math.fsum(xs) / len(xs)
    y_bar = math.fsum(ys) / len(ys)
    sxx = math.fsum((x - x_bar) ** 2 for x in xs)
    sxy = math.fsum((x - x_bar) * (y - y_bar) for x, y in zip(xs, ys))
    syy = math.fsum((y - y_bar) ** 2 for y in ys)
    slope = sxy / sxx
    intercept = y_bar - slope * x_bar
    ss_res = math.fsum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
    r_squared = 1.0 if syy == 0 else min(1.0, max(0.0, 1.0 - ss_res / syy))
    return ComplexityFit(variant, slope, intercept, r_squared, tuple(n for n, _ in points))


def fit_all(rows: Sequence[SummaryRow], min_size: int = MIN_FIT_SIZE) -> list[ComplexityFit]:
    """Fits for every variant that has enough square sizes; others are skipped."""
    fits = []
    for v in sorted({r.variant for r in rows}, key=KernelVariant.sort_key):
        try:
            fits.append(fit_complexity(rows, v, min_size))
        except InsufficientDataError:
            pass
    return fits


# -- rendering ---------------------------------------------------------------

def _size_label(size: Size) -> str:
    m, n, p = size
    return f"{m}x{m}" if m == n == p else f"{m}x{n}x{p}"


def _g6(x: float | None) -> str:
    return "n/a" if x is None else f"{x:.6g}"


def _cell(x: int | float | str | None) -> str:
    if x is None:
        return ""
    return repr(x) if isinstance(x, float) else str(x)


def row_to_dict(row: SummaryRow) -> dict:
    s = row.summary
    return {
        "size_m": row.size[0], "size_n": row.size[1], "size_p": row.size[2],
        "variant": row.variant.kind, "tile": row.variant.tile, "workers": row.variant.workers,
        "n": s.n, "mean": s.mean, "variance": s.variance, "std_dev": s.std_dev,
        "min": s.min, "max": s.max, "ci95_half_width": s.ci95_half_width,
        "speedup": row.speedup, "efficiency": row.efficiency,
    }


def row_from_dict(d: dict) -> SummaryRow:
    def opt_int(v):
        return None if v in (None, "") else int(v)

    def opt_float(v):
        return None if v in (None, "") else float(v)

    return SummaryRow(
        size=(int(d["size_m"]), int(d["size_n"]), int(d["size_p"])),
        variant=KernelVariant(d["variant"], tile=opt_int(d["tile"]), workers=opt_int(d["workers"])),
        summary=Summary(
            n=int(d["n"]), mean=float(d["mean"]), variance=float(d["variance"]),
            std_dev=float(d["std_dev"]), min=float(d["min"]), max=float(d["max"]),
            ci95_half_width=float(d["ci95_half_width"]),
        ),
        speedup=opt_float(d["speedup"]),
        efficiency=opt_float(d["efficiency"]),
    )


def render_csv(rows: Sequence[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        d = row_to_dict(row)
        w.writerow([_cell(d[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def parse_summary_csv(text: str) -> list[SummaryRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
        raise ValueError(f"unexpected summary header {reader.fieldnames}")
    return [row_from_dict(d) for d in reader]


def render_json(rows: Sequence[SummaryRow], fits: Sequence[ComplexityFit] = (),
                metadata: dict | None = None) -> str:
    doc = {
        "metadata": metadata or {},
        "rows": [row_to_dict(r) for r in rows],
        "complexity": [
            {"variant": str(f.variant), "slope": f.slope, "intercept": f.intercept,
             "r_squared": f.r_squared, "sizes": list(f.sizes)}
            for f in fits
        ],
        "warnings": missing_baselines(rows),
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_summary_json(text: str) -> list[SummaryRow]:
    return [row_from_dict(d) for d in json.loads(text)["rows"]]


def render_markdown(rows: Sequence[SummaryRow], fits: Sequence[ComplexityFit] = (),
                    metadata: dict | None = None) -> str:
    out = ["# Matrix multiplication benchmark", ""]
    if metadata:
        for key, value in metadata.items():
            out.append(f"- {key}: {value}")
        out.append("")
    for warning in missing_baselines(rows):
        out.append(f"> warning: {warning}")
    if missing_baselines(rows):
        out.append("")

    serial = [r for r in rows if r.variant.kind != "parallel"]
    threaded = [r for r in rows if r.variant.kind == "parallel"]
    if serial:
        out += ["## Size sweep", "",
                "| Matrix Size | Variant | Avg Time (sec) | Speedup |",
                "|---|---|---|---|"]
        out += [f"| {_size_label(r.size)} | {r.variant} | {_g6(r.summary.mean)} | {_g6(r.speedup)} |"
                for r in serial]
        out.append("")
    if threaded:
        out += ["## Thread sweep", "",
                "| Matrix Size | Threads | Avg Time (sec) | Speedup | Efficiency |",
                "|---|---|---|---|---|"]
        out += [f"| {_size_label(r.size)} | {r.variant.workers} | {_g6(r.summary.mean)} "
                f"| {_g6(r.speedup)} | {_g6(r.efficiency)} |"
                for r in threaded]
        out.append("")
    if fits:
        out += ["## Complexity", "",
                "| Variant | Slope | R² | Sizes |",
                "|---|---|---|---|"]
        out += [f"| {f.variant} | {_g6(f.slope)} | {_g6(f.r_squared)} | {', '.join(map(str, f.sizes))} |"
                for f in fits]
        out.append("")
    out += [
        "Speedup is relative to the naive kernel at the same size "
        "(single-worker parallel run for thread sweeps). "
        "Prefetch times include the in-kernel transpose of B.",
        "",
    ]
    return "\n".join(out)


def render(rows: Sequence[SummaryRow], fits: Sequence[ComplexityFit] = (),
           fmt: str = "markdown", metadata: dict | None = None) -> str:
    if not rows:
        raise ValueError("nothing to render: no summary rows")
    fmt = {"md": "markdown"}.get(fmt, fmt)
    if fmt == "csv":
        return render_csv(rows)
    if fmt == "json":
        return render_json(rows, fits, metadata)
    if fmt == "markdown":
        return render_markdown(rows, fits, metadata)
    raise ValueError(f"unknown format {fmt!r}; choose from csv, json, md")
