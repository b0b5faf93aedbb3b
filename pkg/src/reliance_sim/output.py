"""CSV/JSON emitters for traces, strategy tables, and sweeps.

All writers go through an atomic temp-file-then-rename step so a failed run
never leaves a partial file behind. Floats are serialized with 12 significant
digits.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .episode import DecisionTrace
from .montecarlo import AttackCountResult, SweepRow

TRACE_COLUMNS = [
    "episode_id",
    "task_index",
    "attacked",
    "reliance_before",
    "trusted",
    "assessment_passed",
    "executed",
    "executed_correct",
    "as_i",
    "d_i",
    "reliance_after",
]

STRATEGY_COLUMNS = [
    "strategy_id",
    "mask",
    "n_attacks",
    "as_mean",
    "as_std",
    "as_max",
    "as_min",
    "n_replications",
]

SWEEP_COLUMNS = [
    "parameter",
    "value",
    "n_attacks",
    "mean_as",
    "std_as",
    "max_as",
    "best_mask",
    "n_samples",
]


def fmt_float(x: float) -> str:
    return f"{x:.12g}"


def fmt_bool(x: bool) -> str:
    return "true" if x else "false"


def atomic_write_text(path: Path, text: str) -> None:
    """Write text to `path` via a temp file in the same directory + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def trace_rows(episode_id: str, trace: DecisionTrace) -> Iterable[list[str]]:
    for rec in trace.records:
        yield [
            episode_id,
            str(rec.task_index),
            str(int(rec.attacked)),
            fmt_float(rec.reliance_before),
            fmt_bool(rec.trusted),
            fmt_bool(rec.assessment_passed),
            rec.executed.value,
            "" if rec.executed_correct is None else fmt_bool(rec.executed_correct),
            fmt_float(rec.as_i),
            fmt_float(rec.d_i),
            fmt_float(rec.reliance_after),
        ]


def render_trace_csv(traces: Sequence[tuple[str, DecisionTrace]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for episode_id, trace in traces:
        writer.writerows(trace_rows(episode_id, trace))
    return buf.getvalue()


def write_trace_csv(path: Path, traces: Sequence[tuple[str, DecisionTrace]]) -> None:
    atomic_write_text(path, render_trace_csv(traces))


def trace_json_records(traces: Sequence[tuple[str, DecisionTrace]]) -> list[dict]:
    records = []
    for episode_id, trace in traces:
        for rec in trace.records:
            records.append(
                {
                    "episode_id": episode_id,
                    "task_index": rec.task_index,
                    "attacked": int(rec.attacked),
                    "reliance_before": rec.reliance_before,
                    "trusted": rec.trusted,
                    "assessment_passed": rec.assessment_passed,
                    "executed": rec.executed.value,
                    "executed_correct": rec.executed_correct,
                    "as_i": rec.as_i,
                    "d_i": rec.d_i,
                    "reliance_after": rec.reliance_after,
                }
            )
    return records


def write_trace_json(path: Path, traces: Sequence[tuple[str, DecisionTrace]]) -> None:
    atomic_write_text(path, json.dumps(trace_json_records(traces), indent=2) + "\n")


def render_strategy_csv(results: Sequence[AttackCountResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STRATEGY_COLUMNS)
    for result in results:
        for s in result.strategies:
            writer.writerow(
                [
                    str(s.strategy_id),
                    s.mask,
                    str(s.n_attacks),
                    fmt_float(s.as_mean),
                    fmt_float(s.as_std),
                    fmt_float(s.as_max),
                    fmt_float(s.as_min),
                    str(s.n_replications),
                ]
            )
    return buf.getvalue()


def write_strategy_csv(path: Path, results: Sequence[AttackCountResult]) -> None:
    atomic_write_text(path, render_strategy_csv(results))


def strategy_json_records(results: Sequence[AttackCountResult]) -> list[dict]:
    return [
        {
            "strategy_id": s.strategy_id,
            "mask": s.mask,
            "n_attacks": s.n_attacks,
            "as_mean": s.as_mean,
            "as_std": s.as_std,
            "as_max": s.as_max,
            "as_min": s.as_min,
            "n_replications": s.n_replications,
        }
        for result in results
        for s in result.strategies
    ]


def write_strategy_json(path: Path, results: Sequence[AttackCountResult]) -> None:
    atomic_write_text(path, json.dumps(strategy_json_records(results), indent=2) + "\n")


def enumeration_summary(
    results: Sequence[AttackCountResult], metadata: dict
) -> dict:
    return {
        "metadata": metadata,
        "by_attack_count": [
            {
                "n_attacks": r.n_attacks,
                "pooled": {
                    "mean": r.stats.mean,
                    "std": r.stats.std,
                    "min": r.stats.min,
                    "q25": r.stats.q25,
                    "median": r.stats.median,
                    "q75": r.stats.q75,
                    "max": r.stats.max,
                },
                "best_strategy_id": r.stats.argmax_strategy_id,
                "best_mask": r.best_mask,
                "best_mean": r.best_mean,
                "worst_mask": r.worst_mask,
                "worst_mean": r.worst_mean,
                "n_strategies": len(r.strategies),
            }
            for r in results
        ],
    }


def write_enumeration_summary_json(
    path: Path, results: Sequence[AttackCountResult], metadata: dict
) -> None:
    atomic_write_text(
        path, json.dumps(enumeration_summary(results, metadata), indent=2) + "\n"
    )


def render_sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.parameter,
                row.value,
                str(row.n_attacks),
                fmt_float(row.mean_as),
                fmt_float(row.std_as),
                fmt_float(row.max_as),
                row.best_mask,
                str(row.n_samples),
            ]
        )
    return buf.getvalue()


def write_sweep_csv(path: Path, rows: Sequence[SweepRow]) -> None:
    atomic_write_text(path, render_sweep_csv(rows))


def sweep_summary(rows: Sequence[SweepRow], metadata: dict) -> dict:
    payload = []
    for row in rows:
        payload.append(
            {
                "parameter": row.parameter,
                "value": row.value,
                "n_attacks": row.n_attacks,
                "mean_as": row.mean_as,
                "std_as": row.std_as,
                "max_as": row.max_as,
                "best_mask": row.best_mask,
                "n_samples": row.n_samples,
            }
        )
    optimal = {}
    for row in rows:
        key = row.value
        if key not in optimal or row.max_as > optimal[key]["max_as"]:
            optimal[key] = {"n_attacks": row.n_attacks, "max_as": row.max_as}
    return {"metadata": metadata, "rows": payload, "optimal_attack_count": optimal}


def write_sweep_summary_json(path: Path, rows: Sequence[SweepRow], metadata: dict) -> None:
    atomic_write_text(path, json.dumps(sweep_summary(rows, metadata), indent=2) + "\n")
