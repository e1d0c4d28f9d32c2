"""Checkpoint text format.

    format mtpopart-checkpoint 1
    variant popart
    activation tanh
    version 12
    tasks 6
    stats 0 <mu> <nu>              one line per task; sigma is recomputed on load
    stats_config <beta> <sigma_lo> <sigma_hi>
    rejected_steps 0
    param trunk_w 64x16            name and shape, then one line of row-major values
    <v0> <v1> ...
    param rmsprop.trunk_w 64x16    optimizer accumulators, optional

Floats are written with repr so a save/load round trip is exact.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mtpopart.approximator import PARAM_NAMES, NetworkParams, RMSPropState
from mtpopart.normalizer import NormStats, TaskStatsVector
from mtpopart.storage import atomic_write
from mtpopart.taskworld.envs import ObservationLayout
from mtpopart.taskworld.specs import N_ACTIONS, Suite

log = logging.getLogger(__name__)

_FORMAT = "mtpopart-checkpoint 1"


class CheckpointError(ValueError):
    """Malformed checkpoint, or one that does not fit the suite it is used with."""


@dataclass(frozen=True, slots=True)
class Checkpoint:
    params: NetworkParams
    stats: TaskStatsVector
    variant: str
    optimizer: RMSPropState | None = None

    @property
    def n_tasks(self) -> int:
        return len(self.stats)


def _array_lines(name: str, arr: np.ndarray) -> list[str]:
    shape = "x".join(str(d) for d in arr.shape)
    return [f"param {name} {shape}", " ".join(repr(float(v)) for v in arr.ravel())]


def dumps(ckpt: Checkpoint) -> str:
    params = ckpt.params
    first = ckpt.stats[0]
    lines = [
        f"format {_FORMAT}",
        f"variant {ckpt.variant}",
        f"activation {params.activation}",
        f"version {params.version}",
        f"tasks {len(ckpt.stats)}",
    ]
    lines += [f"stats {i} {s.mu!r} {s.nu!r}" for i, s in enumerate(ckpt.stats.stats)]
    lines.append(f"stats_config {first.beta!r} {first.sigma_lo!r} {first.sigma_hi!r}")
    lines.append(f"rejected_steps {ckpt.optimizer.rejected_steps if ckpt.optimizer else 0}")
    for name, arr in params.arrays().items():
        lines += _array_lines(name, arr)
    if ckpt.optimizer is not None:
        for name, arr in ckpt.optimizer.accumulators.items():
            lines += _array_lines(f"rmsprop.{name}", arr)
    return "\n".join(lines) + "\n"


def loads(text: str) -> Checkpoint:
    header: dict[str, str] = {}
    stats_rows: dict[int, tuple[float, float]] = {}
    arrays: dict[str, np.ndarray] = {}
    lines = iter(text.splitlines())
    for line in lines:
        if not line.strip():
            continue
        tag, _, rest = line.partition(" ")
        try:
            if tag == "stats":
                idx, mu, nu = rest.split()
                stats_rows[int(idx)] = (float(mu), float(nu))
            elif tag == "param":
                name, shape_raw = rest.split()
                shape = tuple(int(d) for d in shape_raw.split("x")) if shape_raw else ()
                values = np.array([float(v) for v in next(lines).split()], dtype=np.float64)
                arrays[name] = values.reshape(shape)
            else:
                header[tag] = rest
        except (ValueError, StopIteration) as exc:
            raise CheckpointError(f"malformed checkpoint line {line[:60]!r}: {exc}") from None

    if header.get("format") != _FORMAT:
        raise CheckpointError(f"not a checkpoint (format {header.get('format')!r})")
    missing = [n for n in PARAM_NAMES if n not in arrays]
    if missing:
        raise CheckpointError(f"checkpoint lacks parameters: {', '.join(missing)}")
    n_tasks = int(header.get("tasks", "0"))
    if sorted(stats_rows) != list(range(n_tasks)):
        raise CheckpointError(f"checkpoint declares {n_tasks} tasks but has stats for {sorted(stats_rows)}")

    try:
        beta, sigma_lo, sigma_hi = (float(v) for v in header["stats_config"].split())
    except (KeyError, ValueError):
        raise CheckpointError("checkpoint lacks a valid stats_config line") from None
    stats = TaskStatsVector(
        stats=tuple(
            NormStats(mu=stats_rows[i][0], nu=stats_rows[i][1], beta=beta, sigma_lo=sigma_lo, sigma_hi=sigma_hi)
            for i in range(n_tasks)
        )
    )
    activation = header.get("activation", "tanh")
    if activation not in ("tanh", "identity"):
        raise CheckpointError(f"unknown activation {activation!r}")
    params = NetworkParams(
        **{n: arrays[n] for n in PARAM_NAMES},
        version=int(header.get("version", "0")),
        activation=activation,  # type: ignore[arg-type]
    )
    accumulators = {n.removeprefix("rmsprop."): a for n, a in arrays.items() if n.startswith("rmsprop.")}
    optimizer = RMSPropState(accumulators, int(header.get("rejected_steps", "0"))) if accumulators else None
    return Checkpoint(params=params, stats=stats, variant=header.get("variant", "popart"), optimizer=optimizer)


def save_checkpoint(path: Path, ckpt: Checkpoint) -> None:
    atomic_write(path, dumps(ckpt).encode())
    log.info("checkpoint written: %s (version %d)", path, ckpt.params.version)


def load_checkpoint(path: Path) -> Checkpoint:
    return loads(path.read_text())


def fingerprint(ckpt: Checkpoint) -> str:
    """Content hash, used to show that evaluation leaves checkpoints untouched."""
    return hashlib.sha256(dumps(ckpt).encode()).hexdigest()


def check_fits(ckpt: Checkpoint, suite: Suite) -> None:
    """Raise CheckpointError unless the checkpoint's dimensions match the suite."""
    dim = ObservationLayout.for_suite(suite).dim
    params = ckpt.params
    if params.obs_dim != dim:
        raise CheckpointError(f"checkpoint expects {params.obs_dim}-dim observations, suite {suite.name} has {dim}")
    if params.n_actions != N_ACTIONS:
        raise CheckpointError(f"checkpoint has {params.n_actions} actions, tasks have {N_ACTIONS}")
    if ckpt.n_tasks != len(suite):
        raise CheckpointError(f"checkpoint has statistics for {ckpt.n_tasks} tasks, suite {suite.name} has {len(suite)}")
    heads = len(suite) if ckpt.variant != "baseline" else 1
    if params.n_heads != heads:
        raise CheckpointError(f"{ckpt.variant} checkpoint has {params.n_heads} value heads, expected {heads}")
