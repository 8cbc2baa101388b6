"""Deterministic-policy gradient learners over flat-parameter networks.

Two learners share the same machinery: a single-critic learner with
per-call target blending, and a twin-critic learner with min-backup
targets, smoothed target actions, and actor updates delayed to every
d-th call. Critic inputs are the observation concatenated with the
action, so the actor update chains the critic's action-input gradient
through the actor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import net
from .replay import Batch, ReplayBuffer
from .seeds import SeedStream


class TrainingDiverged(RuntimeError):
    """A loss or gradient became non-finite during an update."""


@dataclass(frozen=True)
class RlHyperparams:
    gamma: float = 0.99
    tau: float = 0.005
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    batch_size: int = 128
    exploration_sigma: float = 0.07
    policy_delay: int = 2
    target_noise_sigma: float = 0.14
    target_noise_clip: float = 0.35
    action_bound: float = 0.7

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be at least 1")
        if self.target_noise_clip < 0.0 or self.target_noise_sigma < 0.0:
            raise ValueError("target noise parameters must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.action_bound <= 0.0:
            raise ValueError("action_bound must be positive")


def actor_spec(obs_size: int, action_size: int, bound: float = 0.7,
               hidden: tuple[int, ...] = (64, 64)) -> net.NetworkSpec:
    return net.mlp_spec([obs_size, *hidden, action_size],
                        output_activation="scaled_tanh", output_bound=bound)


def critic_spec(obs_size: int, action_size: int,
                hidden: tuple[int, ...] = (64, 64)) -> net.NetworkSpec:
    return net.mlp_spec([obs_size + action_size, *hidden, 1])


@dataclass
class DdpgLearner:
    actor: net.ParamVector
    critic: net.ParamVector
    target_actor: net.ParamVector
    target_critic: net.ParamVector
    actor_adam: net.AdamState
    critic_adam: net.AdamState
    hp: RlHyperparams


@dataclass
class Td3Learner:
    actor: net.ParamVector
    critic_1: net.ParamVector
    critic_2: net.ParamVector
    target_actor: net.ParamVector
    target_critic_1: net.ParamVector
    target_critic_2: net.ParamVector
    actor_adam: net.AdamState
    critic_1_adam: net.AdamState
    critic_2_adam: net.AdamState
    hp: RlHyperparams
    update_counter: int = 0


def init_ddpg(obs_size: int, action_size: int, hp: RlHyperparams, seed: int,
              hidden: tuple[int, ...] = (64, 64)) -> DdpgLearner:
    stream = SeedStream(seed)
    a_spec = actor_spec(obs_size, action_size, hp.action_bound, hidden)
    c_spec = critic_spec(obs_size, action_size, hidden)
    actor = net.init_network(a_spec, stream.next())
    critic = net.init_network(c_spec, stream.next())
    return DdpgLearner(actor, critic, actor, critic,
                       net.init_adam(a_spec.param_count),
                       net.init_adam(c_spec.param_count), hp)


def init_td3(obs_size: int, action_size: int, hp: RlHyperparams, seed: int,
             hidden: tuple[int, ...] = (64, 64)) -> Td3Learner:
    stream = SeedStream(seed)
    a_spec = actor_spec(obs_size, action_size, hp.action_bound, hidden)
    c_spec = critic_spec(obs_size, action_size, hidden)
    actor = net.init_network(a_spec, stream.next())
    critic_1 = net.init_network(c_spec, stream.next())
    critic_2 = net.init_network(c_spec, stream.next())
    return Td3Learner(actor, critic_1, critic_2, actor, critic_1, critic_2,
                      net.init_adam(a_spec.param_count),
                      net.init_adam(c_spec.param_count),
                      net.init_adam(c_spec.param_count), hp)


def exploration_action(actor: net.ParamVector, observation, sigma: float,
                       seed: int, bound: float = 0.7) -> np.ndarray:
    """Deterministic policy action plus clamped seeded Gaussian noise."""
    if sigma < 0.0:
        raise ValueError("sigma must be non-negative")
    action = net.forward(actor, observation)
    noise = np.random.default_rng(seed).normal(0.0, sigma, size=action.shape)
    return np.clip(action + noise, -bound, bound)


def _critic_input(observations: np.ndarray, actions: np.ndarray) -> np.ndarray:
    return np.concatenate([observations, actions], axis=1)


def ddpg_critic_target(batch: Batch, target_actor: net.ParamVector,
                       target_critic: net.ParamVector, gamma: float) -> np.ndarray:
    """y = r + gamma * (1 - done) * Q'(s', pi'(s')), one value per item."""
    next_actions = net.forward(target_actor, batch.next_observations)
    q = net.forward(target_critic, _critic_input(batch.next_observations,
                                                 next_actions))[:, 0]
    return batch.rewards + gamma * (1.0 - batch.dones.astype(np.float64)) * q


def smoothed_target_action(target_actor: net.ParamVector, next_observations,
                           hp: RlHyperparams, seed: int) -> np.ndarray:
    """Target action with clipped Gaussian smoothing noise, clamped to bounds."""
    actions = net.forward(target_actor, next_observations)
    rng = np.random.default_rng(seed)
    noise = np.clip(rng.normal(0.0, hp.target_noise_sigma, size=actions.shape),
                    -hp.target_noise_clip, hp.target_noise_clip)
    return np.clip(actions + noise, -hp.action_bound, hp.action_bound)


def td3_critic_target(batch: Batch, target_actor: net.ParamVector,
                      target_critics: tuple[net.ParamVector, net.ParamVector],
                      hp: RlHyperparams, seed: int) -> np.ndarray:
    """Min-of-twin-critics backup on a smoothed target action."""
    a = smoothed_target_action(target_actor, batch.next_observations, hp, seed)
    x = _critic_input(batch.next_observations, a)
    q1 = net.forward(target_critics[0], x)[:, 0]
    q2 = net.forward(target_critics[1], x)[:, 0]
    return (batch.rewards
            + hp.gamma * (1.0 - batch.dones.astype(np.float64)) * np.minimum(q1, q2))


def _critic_gradient(critic: net.ParamVector, batch: Batch,
                     targets: np.ndarray) -> np.ndarray:
    """Gradient of mean squared Bellman error for one critic."""
    x = _critic_input(batch.observations, batch.actions)
    q = net.forward(critic, x)[:, 0]
    residual = q - targets
    with np.errstate(over="ignore"):  # overflow is caught as divergence below
        loss = float(np.mean(residual * residual))
    if not np.isfinite(loss):
        raise TrainingDiverged("critic loss is non-finite")
    upstream = (2.0 / len(batch)) * residual[:, None]
    grad, _ = net.backward(critic, x, upstream)
    return grad


def update_critic(learner, batch: Batch, targets: np.ndarray):
    """One Adam step on the squared-error critic loss (both critics if twin)."""
    hp = learner.hp
    if isinstance(learner, Td3Learner):
        g1 = _critic_gradient(learner.critic_1, batch, targets)
        g2 = _critic_gradient(learner.critic_2, batch, targets)
        learner.critic_1, learner.critic_1_adam = net.adam_step(
            learner.critic_1, g1, learner.critic_1_adam, hp.critic_lr)
        learner.critic_2, learner.critic_2_adam = net.adam_step(
            learner.critic_2, g2, learner.critic_2_adam, hp.critic_lr)
    else:
        g = _critic_gradient(learner.critic, batch, targets)
        learner.critic, learner.critic_adam = net.adam_step(
            learner.critic, g, learner.critic_adam, hp.critic_lr)
    return learner


def actor_gradient(actor: net.ParamVector, critic: net.ParamVector,
                   observations: np.ndarray) -> np.ndarray:
    """Gradient that descends -mean Q(s, pi(s)) (an ascent step on Q)."""
    actions = net.forward(actor, observations)
    x = _critic_input(observations, actions)
    upstream = np.full((observations.shape[0], 1), -1.0 / observations.shape[0])
    _, input_grad = net.backward(critic, x, upstream)
    action_grad = input_grad[:, observations.shape[1]:]
    grad, _ = net.backward(actor, observations, action_grad)
    return grad


def update_actor(learner, batch: Batch):
    """One Adam ascent step on mean Q; the twin learner uses its first critic."""
    critic = learner.critic_1 if isinstance(learner, Td3Learner) else learner.critic
    grad = actor_gradient(learner.actor, critic, batch.observations)
    if not np.all(np.isfinite(grad)):
        raise TrainingDiverged("actor gradient is non-finite")
    learner.actor, learner.actor_adam = net.adam_step(
        learner.actor, grad, learner.actor_adam, learner.hp.actor_lr)
    return learner


def _blend_targets_ddpg(learner: DdpgLearner) -> None:
    tau = learner.hp.tau
    learner.target_actor = net.polyak_blend(learner.target_actor, learner.actor, tau)
    learner.target_critic = net.polyak_blend(learner.target_critic,
                                             learner.critic, tau)


def _blend_targets_td3(learner: Td3Learner) -> None:
    tau = learner.hp.tau
    learner.target_actor = net.polyak_blend(learner.target_actor, learner.actor, tau)
    learner.target_critic_1 = net.polyak_blend(learner.target_critic_1,
                                               learner.critic_1, tau)
    learner.target_critic_2 = net.polyak_blend(learner.target_critic_2,
                                               learner.critic_2, tau)


def train_step(learner, buffer: ReplayBuffer, seed: int):
    """One minibatch update.

    The single-critic learner updates critic, actor, and both targets
    every call. The twin learner updates its critics every call but the
    actor and targets only on every policy_delay-th call, so after n
    calls exactly floor(n / policy_delay) actor updates have happened.
    """
    hp = learner.hp
    stream = SeedStream(seed)
    batch = buffer.sample_batch(hp.batch_size, stream.next())
    if isinstance(learner, Td3Learner):
        targets = td3_critic_target(
            batch, learner.target_actor,
            (learner.target_critic_1, learner.target_critic_2), hp, stream.next())
        update_critic(learner, batch, targets)
        learner.update_counter += 1
        if learner.update_counter % hp.policy_delay == 0:
            update_actor(learner, batch)
            _blend_targets_td3(learner)
    else:
        targets = ddpg_critic_target(batch, learner.target_actor,
                                     learner.target_critic, hp.gamma)
        update_critic(learner, batch, targets)
        update_actor(learner, batch)
        _blend_targets_ddpg(learner)
    return learner
