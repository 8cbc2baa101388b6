"""Run one episode of any env exposing reset(seed) and step(action)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .env import SimulationDiverged
from .replay import Transition


@dataclass
class EpisodeResult:
    episode_return: float
    steps: int
    done_reason: str
    diverged: bool
    transitions: list[Transition] = field(default_factory=list)


def run_episode(env, policy: Callable[[np.ndarray], np.ndarray], reset_seed: int,
                collect: bool = True) -> EpisodeResult:
    """Roll the policy until the env reports done.

    A simulation divergence ends the episode early with the return
    accumulated so far and the diverged flag set, so a caller can treat
    the partial return as a (poor) fitness instead of crashing.
    """
    obs = env.reset(reset_seed)
    total = 0.0
    steps = 0
    transitions: list[Transition] = []
    reason = "none"
    diverged = False
    while True:
        action = policy(obs)
        try:
            result = env.step(action)
        except SimulationDiverged:
            reason = "diverged"
            diverged = True
            break
        total += result.reward
        steps += 1
        if collect:
            transitions.append(Transition(obs, np.asarray(action, dtype=np.float64),
                                          result.reward, result.observation,
                                          result.done))
        obs = result.observation
        if result.done:
            reason = result.done_reason
            break
    return EpisodeResult(total, steps, reason, diverged, transitions)
