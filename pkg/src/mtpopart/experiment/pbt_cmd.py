"""CLI handler for `mtpopart pbt`.

Members train one after another for each interval; pbt_step runs between
intervals. fitness.csv gets one row per member per evaluation, including the
evaluation of the initial population.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
from pathlib import Path

import numpy as np

from mtpopart import run_config
from mtpopart.config import resolve_out_dir
from mtpopart.experiment.evaluation import evaluate_with_cache
from mtpopart.experiment.pbt import PbtMember, in_support, pbt_step, sample_hyperparameters
from mtpopart.experiment.scores import UndefinedNormalizationError, aggregate
from mtpopart.experiment.variants import make_agent_config
from mtpopart.run_config import RunConfig
from mtpopart.runtime.train_cmd import EXIT_INVALID, add_run_arguments, fail, resolve_run_config
from mtpopart.runtime.training import initial_checkpoint, run_training
from mtpopart.storage import append_csv_row
from mtpopart.taskworld.specs import Suite, load_suite

log = logging.getLogger(__name__)


def _member_config(config: RunConfig, member: PbtMember) -> RunConfig:
    return dataclasses.replace(config, **dataclasses.asdict(member.hyperparameters))


def _fitness(member: PbtMember, config: RunConfig, suite: Suite, oracle_path: Path) -> float:
    records = evaluate_with_cache(
        member.checkpoint,
        suite,
        config.eval_episodes,
        config.seed,
        oracle_path=oracle_path,
        oracle_episodes=config.oracle_episodes,
    )
    return aggregate(records)[1]


def _record(path: Path, interval: int, frames: int, member: PbtMember) -> None:
    hp = member.hyperparameters
    append_csv_row(
        path,
        {
            "interval": interval,
            "frames": frames,
            "member_id": member.member_id,
            "parent_id": "" if member.parent_id is None else member.parent_id,
            "fitness": member.fitness,
            "learning_rate": hp.learning_rate,
            "entropy_cost": hp.entropy_cost,
            "rmsprop_epsilon": hp.rmsprop_epsilon,
            "max_grad_norm": hp.max_grad_norm,
        },
    )


def run_pbt_command(argv: list[str]) -> None:
    parser = argparse.ArgumentParser(prog="mtpopart pbt")
    add_run_arguments(parser)
    parser.add_argument("--population", type=int, default=4, help="Population size (>= 2)")
    parser.add_argument("--intervals", type=int, default=3, help="Exploit intervals")
    parser.add_argument("--exploit-fraction", type=float, default=0.25, help="Share of members replaced per interval")
    args = parser.parse_args(argv)

    if args.population < 2:
        fail(f"--population must be at least 2, got {args.population}", EXIT_INVALID)
    if args.intervals < 1:
        fail(f"--intervals must be at least 1, got {args.intervals}", EXIT_INVALID)
    if not 0 < args.exploit_fraction <= 0.5:
        fail("--exploit-fraction must be in (0, 0.5]", EXIT_INVALID)
    config = resolve_run_config(args)
    if args.show_config:
        print(run_config.format_all(config))
        return
    if config.eval_episodes < 1:
        fail("pbt needs eval_episodes >= 1 to compute fitness", EXIT_INVALID)

    suite = load_suite(config.suite)
    agent = make_agent_config(config.variant)
    out_dir = resolve_out_dir(config.out)
    oracle_path = out_dir / "oracles.csv"
    fitness_path = out_dir / "fitness.csv"
    fitness_path.unlink(missing_ok=True)
    interval_frames = config.frames // args.intervals
    rng = np.random.default_rng(config.seed)

    population: list[PbtMember] = []
    for member_id in range(args.population):
        hp = sample_hyperparameters(rng)
        if not in_support(hp):
            raise AssertionError(f"sampled hyperparameters outside their support: {hp}")
        log.info("member %d sampled %s (within support)", member_id, hp)
        member_config = dataclasses.replace(config, seed=config.seed + member_id)
        population.append(PbtMember(member_id, hp, initial_checkpoint(member_config, suite, agent)))

    try:
        frames = 0
        for interval in range(args.intervals + 1):
            if interval > 1:
                population = pbt_step(population, rng, exploit_fraction=args.exploit_fraction)
            if interval > 0:
                trained: list[PbtMember] = []
                for member in population:
                    result = run_training(
                        _member_config(config, member),
                        out_dir=out_dir / f"member-{member.member_id}" / f"interval-{interval}",
                        start=member.checkpoint,
                        frames=interval_frames,
                        seed_offset=interval * args.population + member.member_id,
                    )
                    trained.append(dataclasses.replace(member, checkpoint=result.checkpoint))
                population = trained
                frames += interval_frames
            population = [
                dataclasses.replace(m, fitness=_fitness(m, config, suite, oracle_path)) for m in population
            ]
            for member in population:
                _record(fitness_path, interval, frames, member)
            best = max(population, key=lambda m: m.fitness or 0.0)
            print(f"interval {interval}: best member {best.member_id} fitness {best.fitness:.4f}")
    except UndefinedNormalizationError as exc:
        fail(f"suite {suite.name} cannot be scored: {exc}", EXIT_INVALID)
    print(f"wrote {fitness_path}")
