"""Run configuration files: a TOML document bundling every engine parameter.

Unknown sections or keys are rejected, and every validation error carries the
dotted path of the offending field. Presets shipped with the package can be
referenced by bare name (e.g. ``paper-v5``) wherever a config path is
accepted.
"""

from __future__ import annotations

import hashlib
import json

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .episode import Aggregation, LossKind, LossSpec
from .montecarlo import StochasticSpec
from .reliance import (
    AssessmentMode,
    DomainError,
    FallbackPolicy,
    FeedbackPolicy,
    RelianceConfig,
    TaskProfile,
    TieBreak,
)


class ConfigError(ValueError):
    """A config document failed validation; the message names the field path."""


_RELIANCE_KEYS = {
    "gamma": float,
    "alpha": float,
    "scaling_c": float,
    "r_hat": float,
    "r_init": float,
    "theta_m": float,
    "theta_h": float,
    "tie_break": str,
    "clamp_reliance": bool,
    "feedback_policy": str,
    "fallback_policy": str,
    "assessment": str,
}
_FACTOR_KEYS = {"w_c": float, "w_k": float, "w_o": float, "w_s": float}
_PROFILE_KEYS = {
    "self_confidence": float,
    "risk": float,
    "complexity": float,
    "time_sensitivity": float,
}
_STOCHASTIC_KEYS = {
    "p_m": float,
    "p_h": float,
    "p_a": float,
    "d_low": list,
    "d_high": list,
    "replications": int,
    "base_seed": int,
}
_DETERMINISTIC_KEYS = {"d_attacked": float, "d_clean": float}
_LOSS_KEYS = {"kind": str, "aggregation": str}
_SECTIONS = {
    "episode": {"n_tasks": int},
    "reliance": _RELIANCE_KEYS,
    "factors": _FACTOR_KEYS,
    "profile": _PROFILE_KEYS,
    "profiles": None,  # array of tables, validated separately
    "stochastic": _STOCHASTIC_KEYS,
    "deterministic": _DETERMINISTIC_KEYS,
    "loss": _LOSS_KEYS,
}


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs: engine config, task profiles, sampling
    model, loss, and the fixed evaluation scores of the deterministic regime."""

    n: int
    reliance: RelianceConfig
    profiles: tuple[TaskProfile, ...]
    stochastic: StochasticSpec
    loss: LossSpec
    d_attacked: float
    d_clean: float
    source: str = "<inline>"

    def resolved_dict(self) -> dict:
        """Canonical plain-data view, used for hashing and summaries."""
        return {
            "episode": {"n_tasks": self.n},
            "reliance": {
                "gamma": self.reliance.gamma,
                "alpha": self.reliance.alpha,
                "scaling_c": self.reliance.scaling_c,
                "r_hat": self.reliance.r_hat,
                "r_init": self.reliance.r_init,
                "theta_m": self.reliance.theta_m,
                "theta_h": self.reliance.theta_h,
                "tie_break": self.reliance.tie_break.value,
                "clamp_reliance": self.reliance.clamp_reliance,
                "feedback_policy": self.reliance.feedback_policy.value,
                "fallback_policy": self.reliance.fallback_policy.value,
                "assessment": self.reliance.assessment.value,
            },
            "factors": {
                "w_c": self.reliance.w_c,
                "w_k": self.reliance.w_k,
                "w_o": self.reliance.w_o,
                "w_s": self.reliance.w_s,
            },
            "profiles": [
                {
                    "self_confidence": p.self_confidence,
                    "risk": p.risk,
                    "complexity": p.complexity,
                    "time_sensitivity": p.time_sensitivity,
                }
                for p in self.profiles
            ],
            "stochastic": {
                "p_m": self.stochastic.p_m,
                "p_h": self.stochastic.p_h,
                "p_a": self.stochastic.p_a,
                "d_low": list(self.stochastic.d_low_range),
                "d_high": list(self.stochastic.d_high_range),
                "replications": self.stochastic.replications,
                "base_seed": self.stochastic.base_seed,
            },
            "deterministic": {"d_attacked": self.d_attacked, "d_clean": self.d_clean},
            "loss": {
                "kind": self.loss.kind.value,
                "aggregation": self.loss.aggregation.value,
            },
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.resolved_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def _coerce(path: str, value, expected_type):
    if expected_type is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if expected_type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if expected_type is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if expected_type is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if expected_type is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected an array, got {value!r}")
        return value
    raise AssertionError(f"unhandled schema type for {path}")


def _check_section(name: str, table: dict, keys: dict) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"{name}: expected a table")
    out = {}
    for key, value in table.items():
        if key not in keys:
            raise ConfigError(f"{name}.{key}: unknown key")
        out[key] = _coerce(f"{name}.{key}", value, keys[key])
    return out


def _enum_value(path: str, enum_cls, raw: str):
    try:
        return enum_cls(raw)
    except ValueError:
        options = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"{path}: expected one of [{options}], got {raw!r}") from None


def _range_pair(path: str, raw: list) -> tuple[float, float]:
    if len(raw) != 2 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        raise ConfigError(f"{path}: expected [lo, hi] with two numbers, got {raw!r}")
    return float(raw[0]), float(raw[1])


def parse_run_config(document: dict, source: str = "<inline>") -> RunConfig:
    """Validate a parsed TOML document into a RunConfig."""
    if not isinstance(document, dict):
        raise ConfigError("top level: expected a table of sections")
    for section in document:
        if section not in _SECTIONS:
            raise ConfigError(f"{section}: unknown section")
    if "profile" in document and "profiles" in document:
        raise ConfigError("profiles: give either [profile] or [[profiles]], not both")

    episode = _check_section("episode", document.get("episode", {}), _SECTIONS["episode"])
    n = episode.get("n_tasks", 10)
    if n < 1:
        raise ConfigError(f"episode.n_tasks: expected >= 1, got {n}")

    rel = _check_section("reliance", document.get("reliance", {}), _RELIANCE_KEYS)
    fac = _check_section("factors", document.get("factors", {}), _FACTOR_KEYS)
    if "tie_break" in rel:
        rel["tie_break"] = _enum_value("reliance.tie_break", TieBreak, rel["tie_break"])
    if "feedback_policy" in rel:
        rel["feedback_policy"] = _enum_value(
            "reliance.feedback_policy", FeedbackPolicy, rel["feedback_policy"]
        )
    if "fallback_policy" in rel:
        rel["fallback_policy"] = _enum_value(
            "reliance.fallback_policy", FallbackPolicy, rel["fallback_policy"]
        )
    if "assessment" in rel:
        rel["assessment"] = _enum_value(
            "reliance.assessment", AssessmentMode, rel["assessment"]
        )
    try:
        reliance = RelianceConfig(**rel, **fac)
    except DomainError as exc:
        raise ConfigError(f"reliance.{exc}") from exc

    if "profiles" in document:
        raw_profiles = document["profiles"]
        if not isinstance(raw_profiles, list):
            raise ConfigError("profiles: expected an array of tables")
        if len(raw_profiles) != n:
            raise ConfigError(
                f"profiles: expected {n} entries to match episode.n_tasks, "
                f"got {len(raw_profiles)}"
            )
        profiles = []
        for idx, entry in enumerate(raw_profiles):
            fields = _check_section(f"profiles[{idx}]", entry, _PROFILE_KEYS)
            try:
                profiles.append(TaskProfile(**fields))
            except DomainError as exc:
                raise ConfigError(f"profiles[{idx}].{exc}") from exc
        profile_tuple = tuple(profiles)
    else:
        fields = _check_section("profile", document.get("profile", {}), _PROFILE_KEYS)
        try:
            profile_tuple = (TaskProfile(**fields),) * n
        except DomainError as exc:
            raise ConfigError(f"profile.{exc}") from exc

    sto = _check_section("stochastic", document.get("stochastic", {}), _STOCHASTIC_KEYS)
    if "d_low" in sto:
        sto["d_low_range"] = _range_pair("stochastic.d_low", sto.pop("d_low"))
    if "d_high" in sto:
        sto["d_high_range"] = _range_pair("stochastic.d_high", sto.pop("d_high"))
    try:
        stochastic = StochasticSpec(n=n, **sto)
    except DomainError as exc:
        raise ConfigError(f"stochastic.{exc}") from exc

    det = _check_section(
        "deterministic", document.get("deterministic", {}), _DETERMINISTIC_KEYS
    )
    d_attacked = det.get("d_attacked", 0.2)
    d_clean = det.get("d_clean", 0.8)
    for key, value in (("d_attacked", d_attacked), ("d_clean", d_clean)):
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"deterministic.{key}: expected a value in [0, 1], got {value!r}")

    los = _check_section("loss", document.get("loss", {}), _LOSS_KEYS)
    kind = _enum_value("loss.kind", LossKind, los["kind"]) if "kind" in los else LossKind.ZERO_ONE
    agg = (
        _enum_value("loss.aggregation", Aggregation, los["aggregation"])
        if "aggregation" in los
        else Aggregation.MEAN
    )

    return RunConfig(
        n=n,
        reliance=reliance,
        profiles=profile_tuple,
        stochastic=stochastic,
        loss=LossSpec(kind=kind, aggregation=agg),
        d_attacked=d_attacked,
        d_clean=d_clean,
        source=source,
    )


def builtin_preset_names() -> list[str]:
    root = resources.files("reliance_sim").joinpath("presets")
    return sorted(p.name[: -len(".cfg")] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_run_config(path_or_preset: str | Path) -> RunConfig:
    """Load a config from a filesystem path or a built-in preset name."""
    path = Path(path_or_preset)
    if path.exists():
        try:
            document = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: not valid TOML: {exc}") from exc
        return parse_run_config(document, source=str(path))
    name = str(path_or_preset)
    resource = resources.files("reliance_sim").joinpath("presets", f"{name}.cfg")
    if resource.is_file():
        document = tomllib.loads(resource.read_text())
        return parse_run_config(document, source=f"preset:{name}")
    raise ConfigError(
        f"config: no file at {path_or_preset!r} and no preset of that name "
        f"(available: {', '.join(builtin_preset_names())})"
    )


def default_run_config() -> RunConfig:
    """The shipped defaults without touching the filesystem."""
    return parse_run_config({}, source="<defaults>")
