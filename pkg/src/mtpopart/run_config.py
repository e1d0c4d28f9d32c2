"""Run configuration: plain-text ``key = value`` files with command-line overrides.

Every default is pre-filled; where the full-scale setting differs it is
noted next to the field.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, NamedTuple

from jsonschema import Draft7Validator

from mtpopart.experiment.variants import VARIANTS
from mtpopart.storage import atomic_write
from mtpopart.taskworld.specs import BUILTIN_SUITES, load_suite

UPDATE_ORDERS = ("gradient_first", "stats_first")
_BOOL_TRUE = {"on", "true", "1", "yes"}
_BOOL_FALSE = {"off", "false", "0", "no"}


@dataclass(frozen=True, slots=True)
class RunConfig:
    suite: str = "scale6"
    variant: str = "popart"
    frames: int = 2_000_000  # summed across tasks
    actors: int = 0  # 0 = 2 x tasks; large-scale runs use hundreds
    unroll_length: int = 20  # 20-100 at full scale
    batch_size: int = 8  # 32 at full scale
    queue_capacity: int = 0  # 0 = 2 x actors; full queue blocks actors
    seed: int = 1
    hidden: int = 64
    learning_rate: float = 6e-4  # PBT support: log-uniform [5e-6, 5e-3]
    entropy_cost: float = 3e-3  # PBT support: log-uniform [5e-5, 1e-2]
    rmsprop_epsilon: float = 1e-5  # PBT support: {1e-1, 1e-3, 1e-5, 1e-7}
    rmsprop_decay: float = 0.99
    max_grad_norm: float = 40.0  # PBT support: uniform [10, 100]
    baseline_cost: float = 0.5
    beta: float = 3e-4  # statistics decay, not tuned by PBT
    sigma_lo: float = 1e-4  # sigma clamped to [sigma_lo, sigma_hi]
    sigma_hi: float = 1e6
    update_order: str = "gradient_first"  # stats_first rescales just in time
    synchronous: bool = False  # actor/learner alternate; deterministic, for testing
    checkpoint_interval: int = 0  # learner steps between checkpoints; 0 = final only
    eval_episodes: int = 100  # 0 skips the post-training evaluation
    oracle_episodes: int = 2000  # Monte Carlo episodes for the random-policy reference
    out: str = "runs/default"

    def resolved_actors(self, n_tasks: int) -> int:
        return self.actors or 2 * n_tasks

    def resolved_queue_capacity(self, n_tasks: int) -> int:
        return self.queue_capacity or 2 * self.resolved_actors(n_tasks)


_DEFAULTS = RunConfig()


class _KeyMeta(NamedTuple):
    description: str
    kind: str  # "str", "int", "float", "bool", "choice"


_KEY_META: dict[str, _KeyMeta] = {
    "suite": _KeyMeta("Built-in suite name or suite file path", "str"),
    "variant": _KeyMeta("Agent variant", "choice"),
    "frames": _KeyMeta("Environment frame budget, summed across tasks", "int"),
    "actors": _KeyMeta("Actor count (0 = 2 x tasks)", "int"),
    "unroll_length": _KeyMeta("Transitions per rollout", "int"),
    "batch_size": _KeyMeta("Rollouts per learner step", "int"),
    "queue_capacity": _KeyMeta("Rollout queue capacity (0 = 2 x actors)", "int"),
    "seed": _KeyMeta("Root seed for parameters, actors and environments", "int"),
    "hidden": _KeyMeta("Trunk width", "int"),
    "learning_rate": _KeyMeta("RMSProp learning rate", "float"),
    "entropy_cost": _KeyMeta("Entropy regularization weight", "float"),
    "rmsprop_epsilon": _KeyMeta("RMSProp epsilon (inside the square root)", "float"),
    "rmsprop_decay": _KeyMeta("RMSProp accumulator decay", "float"),
    "max_grad_norm": _KeyMeta("Global gradient norm clip", "float"),
    "baseline_cost": _KeyMeta("Value loss weight", "float"),
    "beta": _KeyMeta("Statistics EMA decay", "float"),
    "sigma_lo": _KeyMeta("Lower clamp on sigma", "float"),
    "sigma_hi": _KeyMeta("Upper clamp on sigma", "float"),
    "update_order": _KeyMeta("Learner update order", "choice"),
    "synchronous": _KeyMeta("Alternate actor and learner deterministically", "bool"),
    "checkpoint_interval": _KeyMeta("Learner steps between checkpoints (0 = final only)", "int"),
    "eval_episodes": _KeyMeta("Evaluation episodes per task (0 = skip)", "int"),
    "oracle_episodes": _KeyMeta("Random-policy reference episodes per task", "int"),
    "out": _KeyMeta("Output directory", "str"),
}

VALID_KEYS = frozenset(_KEY_META)

_CHOICES: dict[str, tuple[str, ...]] = {"variant": VARIANTS, "update_order": UPDATE_ORDERS}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "frames": {"type": "integer", "minimum": 0},
        "actors": {"type": "integer", "minimum": 0},
        "unroll_length": {"type": "integer", "minimum": 1},
        "batch_size": {"type": "integer", "minimum": 1},
        "queue_capacity": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "hidden": {"type": "integer", "minimum": 1},
        "learning_rate": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "entropy_cost": {"type": "number", "minimum": 0, "maximum": 1},
        "rmsprop_epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "rmsprop_decay": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "max_grad_norm": {"type": "number", "exclusiveMinimum": 0},
        "baseline_cost": {"type": "number", "minimum": 0},
        "beta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "sigma_lo": {"type": "number", "exclusiveMinimum": 0},
        "sigma_hi": {"type": "number", "exclusiveMinimum": 0},
        "checkpoint_interval": {"type": "integer", "minimum": 0},
        "eval_episodes": {"type": "integer", "minimum": 0},
        "oracle_episodes": {"type": "integer", "minimum": 1},
        "variant": {"enum": list(VARIANTS)},
        "update_order": {"enum": list(UPDATE_ORDERS)},
    },
}


def _parse_value(key: str, raw: str) -> str | int | float | bool:
    """Parse a raw string value for the given key. Raises ValueError on invalid input."""
    meta = _KEY_META[key]
    stripped = raw.strip()
    if meta.kind == "str":
        if not stripped:
            raise ValueError("must not be empty")
        return stripped
    if meta.kind == "choice":
        if stripped not in _CHOICES[key]:
            raise ValueError(f"must be one of: {', '.join(_CHOICES[key])}")
        return stripped
    if meta.kind == "bool":
        lowered = stripped.lower()
        if lowered in _BOOL_TRUE:
            return True
        if lowered in _BOOL_FALSE:
            return False
        raise ValueError("must be on/off")
    if meta.kind == "int":
        try:
            return int(stripped.replace("_", ""))
        except ValueError:
            raise ValueError("must be an integer") from None
    if meta.kind == "float":
        try:
            return float(stripped)
        except ValueError:
            raise ValueError("must be a number") from None
    raise ValueError(f"unknown key kind: {meta.kind}")


def apply_overrides(config: RunConfig, pairs: dict[str, str]) -> RunConfig:
    """Parse and apply raw string values; errors name the offending key."""
    parsed: dict[str, Any] = {}
    for key, raw in pairs.items():
        if key not in VALID_KEYS:
            raise ValueError(f"unknown key: {key} (valid: {', '.join(sorted(VALID_KEYS))})")
        try:
            parsed[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ValueError(f"{key}: {exc}") from None
    return replace(config, **parsed)


def parse_text(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key = value")
        pairs[key.strip()] = value.strip()
    return pairs


def load(path: Path) -> RunConfig:
    return apply_overrides(_DEFAULTS, parse_text(path.read_text()))


def validate(config: RunConfig) -> list[str]:
    """All problems with the config, empty when valid."""
    data = {f.name: getattr(config, f.name) for f in fields(RunConfig)}
    errors = [f"{'.'.join(str(p) for p in err.path) or 'config'}: {err.message}" for err in Draft7Validator(SCHEMA).iter_errors(data)]
    if config.sigma_lo >= config.sigma_hi:
        errors.append("sigma_lo must be below sigma_hi")
    if config.suite not in BUILTIN_SUITES and not Path(config.suite).exists():
        errors.append(f"suite: {config.suite!r} is neither a built-in suite ({', '.join(BUILTIN_SUITES)}) nor an existing file")
    else:
        try:
            load_suite(config.suite)
        except ValueError as exc:
            errors.append(f"suite: {exc}")
    return errors


def to_text(config: RunConfig) -> str:
    lines = ["# resolved run configuration"]
    for key, meta in _KEY_META.items():
        value = getattr(config, key)
        if isinstance(value, bool):
            value = "on" if value else "off"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}  # {meta.description}")
    return "\n".join(lines) + "\n"


def save(config: RunConfig, path: Path) -> None:
    atomic_write(path, to_text(config).encode())


def format_all(config: RunConfig) -> str:
    """One line per setting, marking values left at their default."""
    lines: list[str] = []
    for key in _KEY_META:
        value = getattr(config, key)
        label = str(value)
        lines.append(f"{key}: {label} (default)" if value == getattr(_DEFAULTS, key) else f"{key}: {label}")
    return "\n".join(lines)
