"""Two-terrain evaluation protocol and its reports.

A policy is evaluated with its deterministic actor (no exploration
noise) for a number of trials, default 10. Trial t uses seed
eval_seed + t; on rough terrain that seed also regenerates the terrain,
so the statistics average over ground maps rather than measuring one
map's quirks. A transfer experiment evaluates flat then rough and
reports the degradation (flat mean minus rough mean).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import net
from .checkpoint import Checkpoint
from .env import QuadrupedEnv
from .rollout import run_episode
from .terrain import Terrain, make_terrain


def summarize(returns) -> tuple[float, float, float, float]:
    """(mean, sample std, median, best); std is 0 for a single value."""
    values = [float(v) for v in returns]
    if not values:
        raise ValueError("cannot summarize an empty list of returns")
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        std = 0.0
    else:
        std = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
    ordered = sorted(values)
    mid = n // 2
    median = ordered[mid] if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2.0
    return mean, std, median, max(values)


@dataclass(frozen=True)
class EvalReport:
    terrain: str
    trial_returns: tuple[float, ...]
    mean: float
    std: float
    median: float
    best: float

    @classmethod
    def from_returns(cls, terrain: str, returns) -> "EvalReport":
        mean, std, median, best = summarize(returns)
        return cls(terrain, tuple(float(v) for v in returns), mean, std,
                   median, best)


def _trial_terrain(ck: Checkpoint, kind: str, seed: int,
                   fixed: Terrain | None) -> Terrain:
    if fixed is not None:
        return fixed
    cfg = ck.config
    if kind == "flat":
        return make_terrain("flat", seed, 0.0, cfg.terrain_cell_size,
                            cfg.terrain_extent)
    return make_terrain("rough", seed, cfg.terrain_amplitude,
                        cfg.terrain_cell_size, cfg.terrain_extent)


def evaluate(ck: Checkpoint, terrain_kind: str, trials: int = 10,
             eval_seed: int = 0, fixed_terrain: Terrain | None = None) -> EvalReport:
    """Run noise-free rollouts of the checkpoint's actor and summarize."""
    if terrain_kind not in ("flat", "rough"):
        raise ValueError(f"unknown terrain kind {terrain_kind!r}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    actor = ck.actor()
    cfg = ck.config
    returns = []
    for t in range(trials):
        seed = eval_seed + t
        terrain = _trial_terrain(ck, terrain_kind, seed, fixed_terrain)
        env = QuadrupedEnv(terrain, cfg.robot, cfg.t_max)
        result = run_episode(env, lambda obs: net.forward(actor, obs), seed,
                             collect=False)
        returns.append(result.episode_return)
    return EvalReport.from_returns(terrain_kind, returns)


def transfer_experiment(ck: Checkpoint, eval_seed: int = 0, trials: int = 10,
                        fixed_terrain: Terrain | None = None
                        ) -> tuple[EvalReport, EvalReport, float]:
    """Evaluate flat then rough; degradation = flat mean - rough mean."""
    flat = evaluate(ck, "flat", trials, eval_seed)
    rough = evaluate(ck, "rough", trials, eval_seed, fixed_terrain)
    return flat, rough, flat.mean - rough.mean


def report_csv(reports: list[EvalReport]) -> str:
    """CSV with one row per report: terrain, stats, then trial returns."""
    trials = len(reports[0].trial_returns)
    if any(len(r.trial_returns) != trials for r in reports):
        raise ValueError("reports have differing trial counts")
    header = ("terrain,mean,std,median,best,"
              + ",".join(f"trial_{i}" for i in range(1, trials + 1)))
    lines = [header]
    for r in reports:
        cells = [r.terrain, repr(r.mean), repr(r.std), repr(r.median), repr(r.best)]
        cells += [repr(v) for v in r.trial_returns]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


TABLE_COLUMNS = ("Mean Reward", "Std. Dev.", "Median Reward", "Best Reward")


def transfer_table(flat: EvalReport, rough: EvalReport, degradation: float) -> str:
    """Plain-text table, one row per terrain, in the standard column order."""
    rows = [("Terrain", *TABLE_COLUMNS)]
    for r in (flat, rough):
        rows.append((r.terrain, f"{r.mean:.2f}", f"{r.std:.2f}",
                     f"{r.median:.2f}", f"{r.best:.2f}"))
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    lines.append(f"degradation (flat mean - rough mean): {degradation:.2f}")
    return "\n".join(lines) + "\n"
