"""Tests for runtime/actor.py: rollout generation and the actor loop."""

import threading
from dataclasses import replace

import numpy as np

from mtpopart.approximator import forward_batch, init_params, log_softmax
from mtpopart.runtime.actor import ActorState, SnapshotBox, actor_loop, generate_rollout
from mtpopart.runtime.rollouts import RolloutQueue
from mtpopart.taskworld.envs import EnvInstance, ObservationLayout
from mtpopart.taskworld.specs import Suite, TaskSpec


def _actor(spec, seed=0):
    layout = ObservationLayout.for_suite(Suite("s", (spec,)))
    env = EnvInstance(spec=spec, layout=layout, seed=seed)
    return ActorState(actor_id=0, env=env, rng=np.random.default_rng(seed))


def _params(actor, forced_action=None, seed=0):
    params = init_params(actor.env.layout.dim, 4, 1, np.random.default_rng(seed), hidden=6)
    if forced_action is None:
        return replace(params, policy_w=np.random.default_rng(seed + 1).normal(size=(4, 6)))
    bias = np.zeros(4)
    bias[forced_action] = 60.0
    return replace(params, policy_b=bias)


def test_dominant_logit_forces_actions():
    actor = _actor(TaskSpec("grid"))

    rollout = generate_rollout(actor, _params(actor, forced_action=3), 6)

    assert rollout.actions.tolist() == [3] * 6


def test_behavior_log_probs_replay_exactly():
    actor = _actor(TaskSpec("grid", width=3, height=3))
    params = _params(actor)

    rollout = generate_rollout(actor, params, 12)

    logits, _, _ = forward_batch(params, rollout.observations[:-1])
    replayed = log_softmax(logits)[np.arange(12), rollout.actions]
    np.testing.assert_allclose(replayed, rollout.behavior_logp, rtol=0, atol=1e-12)
    assert rollout.params_version == params.version


def test_terminations_get_zero_discount_and_report_returns():
    actor = _actor(TaskSpec("chain", length=2, reward_scale=3.0))

    rollout = generate_rollout(actor, _params(actor, forced_action=1), 3)

    assert rollout.discounts.tolist() == [0.0, 0.0, 0.0]
    assert rollout.rewards.tolist() == [3.0, 3.0, 3.0]
    assert rollout.episode_returns == (3.0, 3.0, 3.0)


def test_episodes_continue_across_rollouts():
    actor = _actor(TaskSpec("chain", length=8))
    params = _params(actor, forced_action=1)

    first = generate_rollout(actor, params, 4)
    second = generate_rollout(actor, params, 4)

    assert np.array_equal(first.observations[-1], second.observations[0])
    assert first.discounts.tolist() == [0.99] * 4
    assert second.discounts.tolist() == [0.99, 0.99, 0.0, 0.99]
    assert second.episode_returns == (1.0,)


def test_stop_signal_discards_partial_rollout():
    actor = _actor(TaskSpec("chain"))
    stop = threading.Event()
    stop.set()

    assert generate_rollout(actor, _params(actor), 5, stop) is None
    assert actor.partial_discarded == 1


def test_snapshot_box_publishes_latest():
    actor = _actor(TaskSpec("chain"))
    first = _params(actor)
    box = SnapshotBox(first)
    second = replace(first, version=1)

    box.publish(second)

    assert box.latest() is second


def test_actor_loop_exits_when_queue_closes():
    actor = _actor(TaskSpec("chain"))
    queue = RolloutQueue(2)
    stop = threading.Event()
    t = threading.Thread(target=actor_loop, args=(actor, SnapshotBox(_params(actor)), queue, 5, stop))
    t.start()

    queue.get(timeout=5)
    queue.close()
    t.join(timeout=5)

    assert not t.is_alive()
    assert actor.rollouts_sent >= 1
