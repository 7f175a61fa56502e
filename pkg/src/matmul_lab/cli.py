"""Command line entry point: ``gen``, ``verify``, ``bench`` and ``report``.

Exit status is 0 on success, 1 on runtime or verification failure and 2 on
usage errors. ``MATMUL_LAB_OUT_DIR`` sets the directory for default output
files and ``MATMUL_LAB_SEED`` the default seed; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import platform
import sys
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from . import __version__
from .gaussian import RandomStream, random_matrix
from .harness import (
    DEFAULT_PILOT, DEFAULT_REPS, DEFAULT_SIZES, THREAD_SWEEP, ExperimentPlan, TrialWriter,
    derive_seed, iter_plan, make_inputs, read_trials,
)
from .kernels import DEFAULT_TILE, KINDS, KernelVariant, matmul_naive
from .matrix import bit_equal, relative_error, save_csv
from .report import fit_all, render, summarize_trials
from .stats import PowerParams

log = logging.getLogger("matmul_lab")

ENV_OUT_DIR = "MATMUL_LAB_OUT_DIR"
ENV_SEED = "MATMUL_LAB_SEED"

TILED_TOL = 1e-10
VERIFY_SIZES = "1-8,32,64,100,128"

PLAN_KEYS = {
    "sizes", "variants", "tile", "threads", "reps", "pilot", "warmup",
    "seed", "regenerate", "alpha", "power", "effect_size",
}
BENCH_DEFAULTS = {
    "sizes": ",".join(map(str, DEFAULT_SIZES)),
    "variants": ",".join(KINDS),
    "tile": DEFAULT_TILE,
    "threads": ",".join(map(str, THREAD_SWEEP)),
    "reps": str(DEFAULT_REPS),
    "pilot": DEFAULT_PILOT,
    "warmup": 1,
    "regenerate": False,
    "alpha": 0.05,
    "power": 0.8,
    "effect_size": 0.5,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- value parsing -------------------------------------------------------------

def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {v}")
    return v


def parse_size_groups(text: str) -> list[tuple[str, list[tuple[int, int, int]]]]:
    """Parse ``n``, ``m:n:p`` and ``a-b`` items separated by commas.

    ``a-b`` expands to every (m, n, p) with each dimension in ``[a, b]``.
    """
    groups = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if "-" in item:
                lo, hi = (int(x) for x in item.split("-"))
                if not 1 <= lo <= hi:
                    raise ValueError
                r = range(lo, hi + 1)
                groups.append((item, [(m, n, p) for m in r for n in r for p in r]))
            elif ":" in item:
                m, n, p = (int(x) for x in item.split(":"))
                if min(m, n, p) < 1:
                    raise ValueError
                groups.append((item, [(m, n, p)]))
            else:
                n = int(item)
                if n < 1:
                    raise ValueError
                groups.append((item, [(n, n, n)]))
        except ValueError:
            raise UsageError(f"bad size {item!r}; use n, m:n:p or a-b with positive integers") from None
    if not groups:
        raise UsageError("no sizes given")
    return groups


def parse_sizes(text: str) -> list[tuple[int, int, int]]:
    return [s for _, sizes in parse_size_groups(text) for s in sizes]


def parse_int_list(text: str, what: str) -> list[int]:
    try:
        values = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad {what} list {text!r}") from None
    if not values or min(values) < 1:
        raise UsageError(f"{what} must be positive integers, got {text!r}")
    return values


def parse_variants(text: str, tile: int, threads: Sequence[int]) -> list[KernelVariant]:
    """Kernel list; bare ``tiled`` takes ``tile`` and bare ``parallel`` expands over ``threads``."""
    variants: list[KernelVariant] = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if item == "tiled":
                v = [KernelVariant("tiled", tile=tile)]
            elif item == "parallel":
                v = [KernelVariant("parallel", workers=w) for w in threads]
            else:
                v = [KernelVariant.parse(item)]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        variants += [x for x in v if x not in variants]
    if not variants:
        raise UsageError("no kernel variants given")
    return variants


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def load_plan_file(path: str) -> dict[str, str]:
    """Read a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read plan file: {exc}") from None
    for no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not value.strip():
            raise UsageError(f"{path}:{no}: expected 'key = value'")
        if key not in PLAN_KEYS:
            raise UsageError(f"{path}:{no}: unknown plan key {key!r}")
        values[key] = value.strip()
    return values


def _default_seed() -> int:
    env = os.environ.get(ENV_SEED)
    if env is None:
        return 0
    try:
        return _seed(env)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"{ENV_SEED}: {exc}") from None


def _default_path(name: str) -> Path:
    return Path(os.environ.get(ENV_OUT_DIR, ".")) / name


def resolve_plan(args: argparse.Namespace) -> ExperimentPlan:
    """Merge built-in defaults, the plan file and flags (flags win)."""
    merged = dict(BENCH_DEFAULTS, seed=_default_seed())
    if args.plan:
        merged.update(load_plan_file(args.plan))
    for key in PLAN_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag

    def num(key, conv):
        try:
            return conv(merged[key])
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"bad value for {key}: {merged[key]!r} ({exc})") from None

    tile = num("tile", lambda v: _positive_int(str(v)))
    threads = parse_int_list(merged["threads"], "threads")
    reps_text = str(merged["reps"]).strip().lower()
    if reps_text == "auto":
        reps: int | str = "auto"
    else:
        try:
            reps = int(reps_text)
        except ValueError:
            raise UsageError(f"--reps must be 'auto' or an integer, got {merged['reps']!r}") from None
    try:
        return ExperimentPlan(
            sizes=parse_sizes(merged["sizes"]),
            variants=parse_variants(merged["variants"], tile, threads),
            repetitions=reps,
            seed=num("seed", lambda v: _seed(str(v))),
            warmup=num("warmup", int),
            regenerate_per_rep=_parse_bool(merged["regenerate"]),
            pilot_reps=num("pilot", int),
            power=PowerParams(num("alpha", float), num("power", float), num("effect_size", float)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def host_metadata() -> dict:
    return {
        "host": f"{platform.node()} {platform.machine()} {platform.processor() or ''}".strip(),
        "cpus": os.cpu_count(),
        "toolchain": f"Python {platform.python_version()}, numpy {np.__version__}, "
                     f"numba {numba.__version__}",
        "matmul_lab": __version__,
    }


# -- subcommands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    out = args.out or _default_path(f"matrix_{args.rows}x{args.cols}_seed{seed}.csv")
    m = random_matrix(RandomStream(seed), args.rows, args.cols)
    save_csv(m, out)
    log.info("wrote %dx%d matrix (seed %d) to %s", args.rows, args.cols, seed, out)
    return 0


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    groups = parse_size_groups(args.sizes)
    variants = parse_variants(args.variants, args.tile, parse_int_list(args.threads, "threads"))
    out = sys.stdout
    out.write(f"{'sizes':<16} {'variant':<12} {'check':<10} {'shapes':>6} {'max abs err':>12} "
              f"{'rel frob':>10}  status\n")
    failures = []
    for label, sizes in groups:
        for v in variants:
            exact = v.kind != "tiled"
            worst_abs = worst_rel = 0.0
            ok = True
            worst_size = sizes[0]
            for size in sizes:
                a, b = make_inputs(derive_seed(seed, size, "verify", "A"),
                                   derive_seed(seed, size, "verify", "B"), size)
                ref = matmul_naive(a, b)
                got = v(a, b)
                if got.shape != ref.shape:
                    ok, worst_size, worst_abs, worst_rel = False, size, float("inf"), float("inf")
                    break
                abs_err = float(np.max(np.abs(got.data - ref.data)))
                rel = relative_error(ref, got)
                passed = bit_equal(got, ref) if exact else rel <= TILED_TOL
                if abs_err > worst_abs or not passed:
                    worst_size = size
                worst_abs = max(worst_abs, abs_err)
                worst_rel = max(worst_rel, rel)
                ok = ok and passed
            check = "bit-exact" if exact else f"rel<={TILED_TOL:g}"
            status = "ok" if ok else "FAIL"
            out.write(f"{label:<16} {str(v):<12} {check:<10} {len(sizes):>6} {worst_abs:>12.3e} "
                      f"{worst_rel:>10.3e}  {status}\n")
            if not ok:
                failures.append((v, worst_size, worst_abs))
    for v, size, err in failures:
        sys.stderr.write(f"verify: {v} mismatches naive at {size[0]}x{size[1]}x{size[2]} "
                         f"(max abs error {err:.3e})\n")
    return 1 if failures else 0


def cmd_bench(args) -> int:
    plan = resolve_plan(args)
    out = Path(args.out) if args.out else _default_path("trials.csv")
    meta = {"plan": plan.describe(), **host_metadata(),
            "timed_region": "one kernel call; prefetch includes its transpose"}
    Path(f"{out}.meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    count = 0
    with TrialWriter(out) as writer:
        for rec in iter_plan(plan):
            writer.write(rec)
            count += 1
            log.info("%s %s rep %d: %.6g s", "x".join(map(str, rec.size)), rec.variant,
                     rec.rep_index, rec.wall_seconds)
    log.info("wrote %d trial records to %s", count, out)
    return 0


def cmd_report(args) -> int:
    try:
        records = read_trials(args.input)
    except OSError as exc:
        sys.stderr.write(f"report: cannot read {args.input}: {exc}\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"report: malformed trial file {args.input}: {exc}\n")
        return 1
    if not records:
        sys.stderr.write(f"report: {args.input} holds no trial records\n")
        return 1
    rows = summarize_trials(records)
    fits = fit_all(rows, args.min_fit_size)
    meta_path = Path(f"{args.input}.meta.json")
    metadata = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else None
    if args.format == "md" and metadata:
        metadata = {k: metadata[k] for k in ("host", "toolchain") if k in metadata}
    text = render(rows, fits, args.format, metadata)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


# -- wiring ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None,
                        help=f"base seed (default ${ENV_SEED} or 0)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="matmul-lab", description="Dense matrix multiplication lab.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="write a Gaussian random matrix as CSV")
    p.add_argument("--rows", type=_positive_int, required=True)
    p.add_argument("--cols", type=_positive_int, required=True)
    p.add_argument("--out", help=f"output CSV (default in ${ENV_OUT_DIR})")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", parents=[common], help="check every kernel against the naive one")
    p.add_argument("--sizes", default=VERIFY_SIZES, help="n, m:n:p or a-b items (default %(default)s)")
    p.add_argument("--variants", default="prefetch,tiled,parallel")
    p.add_argument("--tile", type=_positive_int, default=DEFAULT_TILE)
    p.add_argument("--threads", default=",".join(map(str, THREAD_SWEEP)))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", parents=[common], help="run a timing plan, streaming trials to CSV")
    p.add_argument("--plan", help="flat key = value plan file; flags override it")
    p.add_argument("--sizes")
    p.add_argument("--variants")
    p.add_argument("--tile", type=_positive_int)
    p.add_argument("--threads", help="worker counts for bare 'parallel'")
    p.add_argument("--reps", help="'auto' or a fixed count >= 2")
    p.add_argument("--pilot", type=_positive_int, help="pilot repetitions for --reps auto")
    p.add_argument("--warmup", type=int)
    p.add_argument("--regenerate", dest="regenerate", action="store_true", default=None,
                   help="fresh inputs for every repetition")
    p.add_argument("--no-regenerate", dest="regenerate", action="store_false")
    p.add_argument("--alpha", type=float)
    p.add_argument("--power", type=float)
    p.add_argument("--effect-size", dest="effect_size", type=float)
    p.add_argument("--out", help=f"trial CSV (default trials.csv in ${ENV_OUT_DIR})")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", parents=[common], help="summarize a trial CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--min-fit-size", type=_positive_int, default=128,
                   help="smallest square size used in the complexity fit")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 2
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{args.command}: {exc}\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - top-level diagnostic
        log.debug("failure", exc_info=True)
        sys.stderr.write(f"{args.command}: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
