"""Command-line front end.

Subcommands
-----------
simulate   run one or more episodes for a fixed attack mask, writing the trace
enumerate  score every placement of an attack budget, writing the strategy table
analytic   closed-form strategy scores and the trust recovery index
sweep      sensitivity grid over accuracy / threshold parameters

Exit codes: 0 success, 1 validation error (bad flags, bad config, bad mask,
enumeration cap), 2 runtime error. Output files are written atomically.
The seed is taken from --seed, then the RELIANCE_SIM_SEED environment
variable, then the config's stochastic.base_seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import output
from .episode import (
    AttackVector,
    DecisionTrace,
    EpisodeError,
    expected_trace,
    run_episode,
)
from .montecarlo import (
    SweepGrid,
    SweepParameter,
    _draw_world_arrays,
    distribution_by_attack_count,
    expected_distribution_by_attack_count,
    format_sweep_value,
    sensitivity_sweep,
    strategy_generator,
    world_from_arrays,
)
from .reliance import DomainError
from .runconfig import ConfigError, RunConfig, load_run_config
from .strategies import (
    EnumerationCapError,
    StrategyKind,
    UnsupportedFamilyError,
    ErrorRates,
    closed_form_one_time,
    closed_form_two_time,
    recovery_index,
)

VALIDATION_ERRORS = (
    ConfigError,
    DomainError,
    EpisodeError,
    EnumerationCapError,
    UnsupportedFamilyError,
)


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 on usage errors, per the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _resolve_seed(args, config: RunConfig) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("RELIANCE_SIM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(
                f"RELIANCE_SIM_SEED: expected an integer, got {env!r}"
            ) from None
    return config.stochastic.base_seed


def _load_config(args) -> RunConfig:
    config = load_run_config(args.config)
    if getattr(args, "replications", None) is not None:
        if args.replications < 1:
            raise ConfigError(
                f"--replications: expected >= 1, got {args.replications}"
            )
        config = replace(
            config, stochastic=replace(config.stochastic, replications=args.replications)
        )
    return config


def _parse_mask(text: str, n: int) -> AttackVector:
    vector = AttackVector.from_bitstring(text)
    if vector.n != n:
        raise EpisodeError(
            f"mask: length {vector.n} does not match the configured {n} tasks"
        )
    return vector


def cmd_simulate(args) -> int:
    config = _load_config(args)
    seed = _resolve_seed(args, config)
    vector = _parse_mask(args.mask, config.n)
    spec = replace(config.stochastic, base_seed=seed)

    traces: list[tuple[str, DecisionTrace]] = []
    if args.deterministic:
        trace = expected_trace(
            config.reliance,
            config.profiles,
            vector,
            spec.expected_losses(),
            config.d_attacked,
            config.d_clean,
            config.loss,
        )
        traces.append(("expected", trace))
    else:
        reps = spec.replications if args.replications is not None else 1
        rng = strategy_generator(spec.base_seed, context=0, ordinal=0)
        arrays = _draw_world_arrays(spec, rng, reps)
        for j in range(reps):
            world = world_from_arrays(arrays, j)
            trace = run_episode(config.reliance, config.profiles, vector, world, config.loss)
            traces.append((str(j), trace))

    out = Path(args.out)
    if args.format == "json":
        output.write_trace_json(out, traces)
    else:
        output.write_trace_csv(out, traces)
    for episode_id, trace in traces[:1]:
        print(f"episode {episode_id}: attack_score={output.fmt_float(trace.attack_score)}")
    print(f"wrote {out}")
    return 0


def cmd_enumerate(args) -> int:
    config = _load_config(args)
    seed = _resolve_seed(args, config)
    spec = replace(config.stochastic, base_seed=seed)
    counts = _parse_attack_counts(args.k, config.n, flag="--k")

    if args.deterministic:
        results = expected_distribution_by_attack_count(
            config.reliance,
            config.profiles,
            spec.expected_losses(),
            config.d_attacked,
            config.d_clean,
            config.n,
            config.loss,
            counts,
            cap=args.cap,
        )
    else:
        results = distribution_by_attack_count(
            config.reliance,
            config.profiles,
            spec,
            config.loss,
            counts,
            cap=args.cap,
            jobs=args.jobs,
        )

    out = Path(args.out)
    if args.format == "json":
        output.write_strategy_json(out, results)
    else:
        output.write_strategy_csv(out, results)
    emitted = [str(out)]
    metadata = {
        "seed": seed,
        "replications": 0 if args.deterministic else spec.replications,
        "deterministic": bool(args.deterministic),
        "config_hash": config.config_hash(),
        "config_source": config.source,
        "n_tasks": config.n,
    }
    if args.summary:
        output.write_enumeration_summary_json(Path(args.summary), results, metadata)
        emitted.append(args.summary)
    for r in results:
        print(
            f"k={r.n_attacks}: best mask={r.best_mask} "
            f"mean={output.fmt_float(r.best_mean)}; worst mask={r.worst_mask} "
            f"mean={output.fmt_float(r.worst_mean)}"
        )
    for path in emitted:
        print(f"wrote {path}")
    return 0


_FAMILY_FLAGS = {
    "first": StrategyKind.FIRST_TASK,
    "last": StrategyKind.LAST_TASK,
    "first_two": StrategyKind.FIRST_TWO,
    "last_two": StrategyKind.LAST_TWO,
    "first_and_last": StrategyKind.FIRST_AND_LAST,
}


def cmd_analytic(args) -> int:
    config = load_run_config(args.config)
    rates = ErrorRates(e_H=args.e_h, e_M=args.e_m, e_A=args.e_a)
    rel = config.reliance
    families = list(_FAMILY_FLAGS) if args.family == "all" else [args.family]

    # Trust dynamics of the deterministic regime drive the recovery index:
    # one hit from the initial state, then clean feedback.
    r_after_attack = rel.alpha * rel.r_init + (1.0 - rel.alpha) * (
        rel.scaling_c * config.d_attacked
    )
    if rel.clamp_reliance:
        r_after_attack = min(1.0, max(0.0, r_after_attack))
    rec = recovery_index(
        r_after_attack,
        rel.alpha,
        rel.scaling_c,
        config.d_clean,
        rel.r_hat,
        args.n,
        rel.tie_break,
    )
    recovery_task = None if rec is None else 1 + rec

    rows: list[dict] = []
    for name in families:
        kind = _FAMILY_FLAGS[name]
        detail = ""
        if kind in (StrategyKind.FIRST_TASK, StrategyKind.LAST_TASK):
            score = closed_form_one_time(args.n, kind, rates)
        elif kind is StrategyKind.FIRST_AND_LAST:
            if recovery_task is None or not 2 <= recovery_task <= args.n - 2:
                rows.append(
                    {
                        "family": name,
                        "attack_score": None,
                        "detail": "no trust recovery inside [2, n-2]",
                    }
                )
                continue
            score = closed_form_two_time(args.n, kind, rates, recovery_k=recovery_task)
            detail = f"k={recovery_task}"
        else:
            score = closed_form_two_time(args.n, kind, rates)
        rows.append({"family": name, "attack_score": score, "detail": detail})

    print(f"recovery_index={'none' if rec is None else rec}")
    for row in rows:
        score = row["attack_score"]
        rendered = "none" if score is None else output.fmt_float(score)
        suffix = f" ({row['detail']})" if row["detail"] else ""
        print(f"{row['family']}: AS={rendered}{suffix}")

    if args.out:
        out = Path(args.out)
        if args.format == "json":
            payload = {
                "n": args.n,
                "rates": {"e_H": rates.e_H, "e_M": rates.e_M, "e_A": rates.e_A},
                "recovery_index": rec,
                "families": rows,
            }
            output.atomic_write_text(out, json.dumps(payload, indent=2) + "\n")
        else:
            import csv as _csv
            import io as _io

            buf = _io.StringIO()
            writer = _csv.writer(buf, lineterminator="\n")
            writer.writerow(["family", "attack_score", "detail"])
            for row in rows:
                score = row["attack_score"]
                writer.writerow(
                    [
                        row["family"],
                        "" if score is None else output.fmt_float(score),
                        row["detail"],
                    ]
                )
            output.atomic_write_text(out, buf.getvalue())
        print(f"wrote {out}")
    return 0


def _parse_values(param: str, text: str) -> tuple:
    if not text.strip():
        raise ConfigError("--values: expected a non-empty comma-separated list")
    items = [chunk.strip() for chunk in text.split(",") if chunk.strip()]
    if not items:
        raise ConfigError("--values: expected a non-empty comma-separated list")
    values = []
    for item in items:
        if param == SweepParameter.COMBINED_ACC:
            parts = item.split(":")
            if len(parts) != 2:
                raise ConfigError(
                    f"--values: combined_acc expects pm:ph pairs, got {item!r}"
                )
            try:
                values.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ConfigError(f"--values: not a number pair: {item!r}") from None
        else:
            try:
                values.append(float(item))
            except ValueError:
                raise ConfigError(f"--values: not a number: {item!r}") from None
    return tuple(values)


def _parse_attack_counts(text: str, n: int, flag: str = "--attack-counts") -> tuple[int, ...]:
    counts: list[int] = []
    for chunk in str(text).split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "-" in chunk:
            lo_s, hi_s = chunk.split("-", 1)
            try:
                lo, hi = int(lo_s), int(hi_s)
            except ValueError:
                raise ConfigError(f"{flag}: bad range {chunk!r}") from None
            counts.extend(range(lo, hi + 1))
        else:
            try:
                counts.append(int(chunk))
            except ValueError:
                raise ConfigError(f"{flag}: not an integer: {chunk!r}") from None
    if not counts:
        raise ConfigError(f"{flag}: expected at least one budget")
    for k in counts:
        if not 0 <= k <= n:
            raise ConfigError(f"{flag}: {k} outside [0, {n}]")
    return tuple(counts)


def cmd_sweep(args) -> int:
    config = _load_config(args)
    seed = _resolve_seed(args, config)
    spec = replace(config.stochastic, base_seed=seed)
    values = _parse_values(args.param, args.values)
    counts = (
        _parse_attack_counts(args.attack_counts, config.n)
        if args.attack_counts
        else tuple(range(config.n + 1))
    )
    grid = SweepGrid(parameter=args.param, values=values, attack_counts=counts)

    rows = sensitivity_sweep(
        grid,
        config.reliance,
        config.profiles,
        spec,
        config.loss,
        cap=args.cap,
        jobs=args.jobs,
    )

    out_dir = Path(args.out_dir)
    suffix = "json" if args.format == "json" else "csv"
    csv_path = out_dir / f"{args.param}.{suffix}"
    json_path = out_dir / f"{args.param}.summary.json"
    metadata = {
        "seed": seed,
        "replications": spec.replications,
        "parameter": args.param,
        "values": [format_sweep_value(args.param, v) for v in values],
        "attack_counts": list(counts),
        "config_hash": config.config_hash(),
        "config_source": config.source,
        "n_tasks": config.n,
    }
    if args.format == "json":
        payload = [row.__dict__ for row in rows]
        output.atomic_write_text(csv_path, json.dumps(payload, indent=2) + "\n")
    else:
        output.write_sweep_csv(csv_path, rows)
    output.write_sweep_summary_json(json_path, rows, metadata)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="reliance-sim",
        description="Simulate sequential human-AI decision-making under timing-based attacks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, jobs: bool = True) -> None:
        p.add_argument("--config", default="paper-v5", help="config path or preset name")
        p.add_argument("--seed", type=int, default=None, help="base seed override")
        p.add_argument(
            "--replications", type=int, default=None, help="replications override"
        )
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument(
            "--cap",
            type=int,
            default=1_000_000,
            help="refuse enumerations above this many strategies",
        )

    sim = sub.add_parser("simulate", help="run episodes for a fixed attack mask")
    common(sim, jobs=False)
    sim.add_argument("--mask", required=True, help="attack mask bitstring, e.g. 1000000001")
    sim.add_argument("--deterministic", action="store_true", help="fixed evaluation scores, expected losses")
    sim.add_argument("--out", required=True, help="trace file path")
    sim.add_argument("--format", choices=["csv", "json"], default="csv")
    sim.set_defaults(func=cmd_simulate)

    enum = sub.add_parser("enumerate", help="score every placement of an attack budget")
    common(enum)
    enum.add_argument("--k", required=True, help="attack budget(s), e.g. 2 or 0-10")
    enum.add_argument("--deterministic", action="store_true", help="expected-loss scoring")
    enum.add_argument("--out", required=True, help="strategy table CSV path")
    enum.add_argument("--summary", default=None, help="optional summary JSON path")
    enum.add_argument("--format", choices=["csv", "json"], default="csv")
    enum.set_defaults(func=cmd_enumerate)

    ana = sub.add_parser("analytic", help="closed-form strategy scores")
    ana.add_argument("--config", default="paper-v5", help="config path or preset name")
    ana.add_argument("--n", type=int, required=True, help="episode length")
    ana.add_argument("--e-h", type=float, required=True, help="human per-task loss")
    ana.add_argument("--e-m", type=float, required=True, help="clean model per-task loss")
    ana.add_argument("--e-a", type=float, required=True, help="attacked model per-task loss")
    ana.add_argument(
        "--family",
        choices=["all", *_FAMILY_FLAGS],
        default="all",
        help="which strategy family to evaluate",
    )
    ana.add_argument("--out", default=None, help="optional output file")
    ana.add_argument("--format", choices=["csv", "json"], default="csv")
    ana.set_defaults(func=cmd_analytic)

    sw = sub.add_parser("sweep", help="sensitivity sweep over a parameter grid")
    common(sw)
    sw.add_argument(
        "--param",
        required=True,
        choices=list(SweepParameter.ALL),
        help="parameter to sweep",
    )
    sw.add_argument(
        "--values",
        required=True,
        help="comma-separated values (pm:ph pairs for combined_acc)",
    )
    sw.add_argument(
        "--attack-counts",
        default=None,
        help="budgets to evaluate, e.g. '0-10' or '0,2,4' (default 0-n)",
    )
    sw.add_argument("--out-dir", required=True, help="directory for sweep outputs")
    sw.add_argument("--format", choices=["csv", "json"], default="csv")
    sw.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors exit 1, --help exits 0
        return int(exc.code or 0)
    try:
        return args.func(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # runtime failures map to exit 2
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
