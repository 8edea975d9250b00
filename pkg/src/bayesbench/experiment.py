"""Multi-run benchmark experiments: seeds, checkpoints, CSV output.

Each run uses seed ``base_seed + i``.  The per-evaluation CSV uses shortest
round-trip float formatting, so a rerun with the same seeds reproduces the
file byte for byte whenever the injected clock is deterministic.
"""

from __future__ import annotations

import io
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

from .benchmarks import Benchmark, gap
from .config import Params
from .errors import ExperimentError, RangeError
from .optimizer import Optimizer, OptResult, Problem

__all__ = ["GapRow", "run_experiment", "write_csv", "read_csv", "summarize"]


@dataclass(frozen=True)
class GapRow:
    """Aggregated optimization gaps at the requested sample checkpoints."""

    benchmark: str
    label: str
    checkpoints: tuple[int, ...]
    mean_gap: tuple[float, ...]
    std_gap: tuple[float, ...]
    mean_time_s: float
    std_time_s: float
    n_runs: int


def run_experiment(
    params: Params,
    bench: Benchmark,
    n_runs: int,
    base_seed: int,
    checkpoints: Sequence[int],
    out_csv: str | Path | None = None,
    label: str = "run",
    clock: Callable[[], float] | None = None,
) -> GapRow:
    """Run the optimizer n_runs times and aggregate gaps at the checkpoints."""
    total = params.n_init_samples + params.n_iterations
    checkpoints = tuple(int(c) for c in checkpoints)
    if any(c < 1 or c > total for c in checkpoints):
        raise RangeError(
            f"checkpoints must lie in [1, {total}], got {checkpoints}"
        )
    if n_runs < 1:
        raise RangeError("n_runs must be >= 1")

    results: list[OptResult] = []
    for i in range(n_runs):
        run_params = replace(params, random_seed=base_seed + i)
        problem = Problem(dim=bench.dim, box=bench.box, evaluate=bench.evaluate)
        try:
            results.append(Optimizer(problem, run_params, clock=clock).run())
        except Exception as exc:
            raise ExperimentError(
                f"run {i} (seed {base_seed + i}) failed: {exc}", run_index=i
            ) from exc

    if out_csv is not None:
        Path(out_csv).write_text(render_csv(results, bench), encoding="ascii")

    gaps = {
        c: [gap(_best_among(res, c), bench) for res in results] for c in checkpoints
    }
    times = [res.history[-1].elapsed_s for res in results]
    return GapRow(
        benchmark=bench.name,
        label=label,
        checkpoints=checkpoints,
        mean_gap=tuple(statistics.fmean(gaps[c]) for c in checkpoints),
        std_gap=tuple(_std(gaps[c]) for c in checkpoints),
        mean_time_s=statistics.fmean(times),
        std_time_s=_std(times),
        n_runs=n_runs,
    )


def _best_among(res: OptResult, c: int) -> float:
    return res.history[c - 1].y_best


def _std(values) -> float:
    if len(values) < 2:
        return 0.0
    return statistics.stdev(values)


def render_csv(results: Sequence[OptResult], bench: Benchmark) -> str:
    """Per-evaluation rows for every run; schema is fixed."""
    dim = bench.dim
    out = io.StringIO()
    coords = ",".join(f"x_{j}" for j in range(dim))
    out.write(f"run_id,iteration,eval_index,{coords},y,y_best,gap,elapsed_ms\n")
    for run_id, res in enumerate(results):
        start = res.history[0].elapsed_s
        for rec in res.history:
            xs = ",".join(repr(v) for v in rec.x)
            elapsed_ms = (rec.elapsed_s - start) * 1000.0
            out.write(
                f"{run_id},{rec.iteration},{rec.eval_index},{xs},"
                f"{rec.y!r},{rec.y_best!r},{gap(rec.y_best, bench)!r},"
                f"{elapsed_ms!r}\n"
            )
    return out.getvalue()


def write_csv(results, bench, path) -> None:
    Path(path).write_text(render_csv(results, bench), encoding="ascii")


def read_csv(path) -> list[dict]:
    """Parse an experiment CSV back into row dictionaries."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        values = line.split(",")
        row: dict = dict(zip(header, values))
        for key in ("run_id", "iteration", "eval_index"):
            row[key] = int(row[key])
        for key in header:
            if isinstance(row[key], str):
                row[key] = float(row[key])
        rows.append(row)
    return rows


def summarize(
    rows: list[dict], checkpoints: Sequence[int], label: str = "results"
) -> GapRow:
    """Aggregate a parsed CSV into a GapRow (for the table command)."""
    run_ids = sorted({row["run_id"] for row in rows})
    by_run = {
        rid: {row["eval_index"]: row for row in rows if row["run_id"] == rid}
        for rid in run_ids
    }
    checkpoints = tuple(int(c) for c in checkpoints)
    max_index = max(row["eval_index"] for row in rows)
    usable = tuple(c for c in checkpoints if c <= max_index)
    gaps = {c: [by_run[rid][c]["gap"] for rid in run_ids] for c in usable}
    times = [
        by_run[rid][max(by_run[rid])]["elapsed_ms"] / 1000.0 for rid in run_ids
    ]
    return GapRow(
        benchmark=label,
        label=label,
        checkpoints=usable,
        mean_gap=tuple(statistics.fmean(gaps[c]) for c in usable),
        std_gap=tuple(_std(gaps[c]) for c in usable),
        mean_time_s=statistics.fmean(times),
        std_time_s=_std(times),
        n_runs=len(run_ids),
    )


def format_table(row: GapRow) -> str:
    """Render a GapRow as an aligned mean (std) grid."""
    headers = ["config"] + [f"gap@{c}" for c in row.checkpoints] + ["time_s"]
    cells = [row.label]
    for mean, std in zip(row.mean_gap, row.std_gap):
        cells.append(f"{mean:.5f} ({std:.3f})")
    cells.append(f"{row.mean_time_s:.1f} ({row.std_time_s:.2f})")
    widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
    line1 = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    line2 = "  ".join(c.ljust(w) for c, w in zip(cells, widths))
    return f"{line1}\n{line2}"
