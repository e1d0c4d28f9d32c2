"""Task specifications and suite definitions.

A suite file is plain text, one task per line, whitespace-separated
``key=value`` pairs; ``#`` starts a comment. Keys:

  family        chain | grid | dense_walk          (required)
  length        chain length L / dense_walk horizon positions (default 8)
  width, height grid size (default 4x4)
  walls         grid interior walls, ``x:y`` cells joined by ``,`` (default none)
  reward_scale  positive multiplier on raw rewards (default 1)
  sparsity      dense | terminal_only (default: terminal_only, dense for dense_walk)
  gamma         discount in [0, 1) (default 0.99)
  transform     none | clip | oar (default none)
  episode_cap   steps before an episode is cut (default 50)
  p             dense_walk reward probability (default 0.3)

Task ids are assigned by line order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

Family = Literal["chain", "grid", "dense_walk"]
Sparsity = Literal["dense", "terminal_only"]
Transform = Literal["none", "clip", "oar"]

N_ACTIONS = 4  # shared by every family: 0 left, 1 right, 2 up, 3 down

_FAMILIES = ("chain", "grid", "dense_walk")
_SPARSITIES = ("dense", "terminal_only")
_TRANSFORMS = ("none", "clip", "oar")


@dataclass(frozen=True, slots=True)
class TaskSpec:
    family: Family
    task_id: int = 0
    length: int = 8
    width: int = 4
    height: int = 4
    walls: tuple[tuple[int, int], ...] = ()
    reward_scale: float = 1.0
    sparsity: Sparsity = "terminal_only"
    gamma: float = 0.99
    transform: Transform = "none"
    episode_cap: int = 50
    p: float = 0.3

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {', '.join(_FAMILIES)}")
        if self.sparsity not in _SPARSITIES:
            raise ValueError(f"unknown sparsity {self.sparsity!r}")
        if self.transform not in _TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}; expected one of {', '.join(_TRANSFORMS)}")
        if not (math.isfinite(self.reward_scale) and self.reward_scale >= 0):
            raise ValueError(f"reward_scale must be finite and non-negative, got {self.reward_scale}")
        if not 0 <= self.gamma < 1:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.episode_cap < 1:
            raise ValueError(f"episode_cap must be >= 1, got {self.episode_cap}")
        if self.family == "chain" and self.length < 2:
            raise ValueError("chain needs length >= 2")
        if self.family == "grid":
            if self.width < 1 or self.height < 1 or self.width * self.height < 2:
                raise ValueError(f"grid {self.width}x{self.height} has no room for a goal")
            blocked = {(0, 0), (self.width - 1, self.height - 1)}
            for x, y in self.walls:
                if not (0 <= x < self.width and 0 <= y < self.height) or (x, y) in blocked:
                    raise ValueError(f"wall {x}:{y} is outside the grid or covers start/goal")
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must be in [0, 1], got {self.p}")

    @property
    def shape_key(self) -> tuple[str, int, int]:
        """Tasks with equal keys share observation features."""
        if self.family == "grid":
            return ("grid", self.width, self.height)
        return (self.family, self.length, 0)

    @property
    def n_states(self) -> int:
        if self.family == "grid":
            return self.width * self.height
        return self.length


@dataclass(frozen=True, slots=True)
class Suite:
    name: str
    tasks: tuple[TaskSpec, ...]

    def __len__(self) -> int:
        return len(self.tasks)


def _scale_family(family: Family, transform: Transform, scales: tuple[float, ...]) -> list[TaskSpec]:
    return [TaskSpec(family=family, reward_scale=s, transform=transform) for s in scales]


def _scale6(transform: Transform) -> list[TaskSpec]:
    scales = (0.01, 1.0, 100.0)
    return _scale_family("chain", transform, scales) + _scale_family("grid", transform, scales)


def _numbered(name: str, tasks: list[TaskSpec]) -> Suite:
    return Suite(name=name, tasks=tuple(replace(t, task_id=i) for i, t in enumerate(tasks)))


BUILTIN_SUITES = ("scale6", "clipped6", "oar6", "pair2", "probe3")


def builtin_suite(name: str) -> Suite:
    if name == "scale6":
        return _numbered(name, _scale6("none"))
    if name == "clipped6":
        return _numbered(name, _scale6("clip"))
    if name == "oar6":
        return _numbered(name, _scale6("oar"))
    if name == "pair2":
        return _numbered(name, [TaskSpec("chain", length=5, reward_scale=1.0), TaskSpec("grid", width=3, height=3, reward_scale=100.0)])
    if name == "probe3":
        return _numbered(name, [TaskSpec("dense_walk", sparsity="dense", reward_scale=s) for s in (0.01, 1.0, 100.0)])
    raise ValueError(f"unknown suite {name!r}; built-in suites: {', '.join(BUILTIN_SUITES)}")


def _parse_walls(raw: str) -> tuple[tuple[int, int], ...]:
    cells: list[tuple[int, int]] = []
    for part in filter(None, raw.split(",")):
        x, _, y = part.partition(":")
        cells.append((int(x), int(y)))
    return tuple(cells)


_INT_KEYS = {"length", "width", "height", "episode_cap"}
_FLOAT_KEYS = {"reward_scale", "gamma", "p"}
_STR_KEYS = {"family", "sparsity", "transform"}


def parse_task_line(line: str, task_id: int) -> TaskSpec:
    values: dict[str, object] = {"task_id": task_id}
    for token in line.split():
        key, sep, raw = token.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {token!r}")
        if key in _INT_KEYS:
            values[key] = int(raw)
        elif key in _FLOAT_KEYS:
            values[key] = float(raw)
        elif key in _STR_KEYS:
            values[key] = raw
        elif key == "walls":
            values[key] = _parse_walls(raw)
        else:
            raise ValueError(f"unknown task key {key!r}")
    if "family" not in values:
        raise ValueError("task line is missing family=")
    if values["family"] == "dense_walk" and "sparsity" not in values:
        values["sparsity"] = "dense"
    return TaskSpec(**values)  # type: ignore[arg-type]


def parse_suite(text: str, name: str = "custom") -> Suite:
    tasks: list[TaskSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            tasks.append(parse_task_line(line, len(tasks)))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not tasks:
        raise ValueError("suite defines no tasks")
    return Suite(name=name, tasks=tuple(tasks))


def format_suite(suite: Suite) -> str:
    """Inverse of parse_suite; only non-default keys are written."""
    defaults = {"length": 8, "width": 4, "height": 4, "reward_scale": 1.0, "gamma": 0.99, "transform": "none", "episode_cap": 50, "p": 0.3}
    lines = [f"# suite {suite.name}"]
    for t in suite.tasks:
        parts = [f"family={t.family}"]
        for key, default in defaults.items():
            value = getattr(t, key)
            if value != default:
                parts.append(f"{key}={value}")
        if t.walls:
            parts.append("walls=" + ",".join(f"{x}:{y}" for x, y in t.walls))
        if t.sparsity != ("dense" if t.family == "dense_walk" else "terminal_only"):
            parts.append(f"sparsity={t.sparsity}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def load_suite(name_or_path: str) -> Suite:
    """Built-in name, or path to a suite file."""
    if name_or_path in BUILTIN_SUITES:
        return builtin_suite(name_or_path)
    path = Path(name_or_path)
    if not path.exists():
        raise FileNotFoundError(f"no built-in suite or suite file named {name_or_path!r}")
    return parse_suite(path.read_text(), name=path.stem)
