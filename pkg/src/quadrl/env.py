"""Simplified quadruped walker: dynamics, reward, and observations.

Model summary. The torso is a single rigid box; the four two-link legs
are treated as massless appendages, so joints follow their PD-driven
dynamics with a fixed effective inertia and the ground acts on the torso
through the summed foot contact forces and their torques about the torso
center. Orientation uses roll/pitch/yaw with the angular velocity state
identified with the Euler-angle rates and a diagonal box inertia, which
is accurate in the small-tilt regime the walker operates in (episodes
end beyond 1 rad of tilt).

Leg layout: legs are ordered front-left, front-right, rear-left,
rear-right; each leg has a hip pitch joint then a knee pitch joint, so
the 8-entry joint vector is [hip_fl, knee_fl, hip_fr, knee_fr, hip_rl,
knee_rl, hip_rr, knee_rr]. At zero joint angles a leg points straight
down; positive hip pitch swings the foot forward.

Observation layout (48 entries, fixed order, each block divided by its
normalizer constant):

    [0:3]   torso position (m)
    [3:6]   torso roll, pitch, yaw (rad)
    [6:9]   torso linear velocity (m/s)
    [9:12]  torso angular velocity (rad/s)
    [12:20] joint angles (rad)
    [20:28] joint velocities (rad/s)
    [28:40] foot contact forces, foot-major x/y/z (N)
    [40:48] previous-step joint angles (rad)

Every simulation quantity is float64 and every update is a pure
function of its inputs, so a (terrain seed, reset seed, action sequence)
triple reproduces trajectories bit-exactly.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .terrain import Terrain, height_at

N_LEGS = 4
N_JOINTS = 8
OBS_SIZE = 48
JOINT_RANGE = np.pi / 2.0


class SimulationDiverged(RuntimeError):
    """The integrator produced a non-finite state."""


class ProtocolError(RuntimeError):
    """An episode was driven past its done signal."""


@dataclass(frozen=True)
class RobotConfig:
    body_length: float = 0.40
    body_width: float = 0.20
    mass: float = 5.0
    torque_limit: float = 5.0
    upper_leg_length: float = 0.12
    lower_leg_length: float = 0.12
    pd_kp: float = 40.0
    pd_kd: float = 1.0
    dt: float = 0.01
    substeps: int = 4
    gravity: float = 9.81
    leg_inertia: float = 0.02
    contact_stiffness: float = 5000.0
    contact_damping: float = 50.0
    friction_mu: float = 0.8
    slip_velocity: float = 0.05
    action_bound: float = 0.7
    stance_hip: float = 0.3
    stance_knee: float = -0.6

    def __post_init__(self) -> None:
        positive = ("body_length", "body_width", "mass", "torque_limit",
                    "upper_leg_length", "lower_leg_length", "pd_kp", "pd_kd",
                    "dt", "substeps", "gravity", "leg_inertia",
                    "contact_stiffness", "contact_damping", "friction_mu",
                    "slip_velocity", "action_bound")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def stand_height(self) -> float:
        """Torso height above the feet at the nominal stance."""
        return (self.upper_leg_length * np.cos(self.stance_hip)
                + self.lower_leg_length * np.cos(self.stance_hip + self.stance_knee))

    @property
    def nominal_stance(self) -> np.ndarray:
        return np.tile([self.stance_hip, self.stance_knee], N_LEGS)

    @functools.cached_property
    def hip_offsets(self) -> np.ndarray:
        """Hip anchor points in the torso frame, one row per leg."""
        hl, hw = self.body_length / 2.0, self.body_width / 2.0
        return np.array([[hl, hw, 0.0], [hl, -hw, 0.0],
                         [-hl, hw, 0.0], [-hl, -hw, 0.0]])

    @functools.cached_property
    def inertia(self) -> np.ndarray:
        """Diagonal box inertia; box height taken as half the body width."""
        l, w, h = self.body_length, self.body_width, self.body_width / 2.0
        return self.mass / 12.0 * np.array([w * w + h * h,
                                            l * l + h * h,
                                            l * l + w * w])


@dataclass(frozen=True)
class Normalizers:
    position: float = 1.0
    orientation: float = np.pi / 2.0
    linear_velocity: float = 2.0
    angular_velocity: float = 10.0
    joint_angle: float = np.pi / 2.0
    joint_velocity: float = 10.0
    force: float = 100.0


DEFAULT_NORMALIZERS = Normalizers()


@dataclass
class RobotState:
    torso_position: np.ndarray
    torso_orientation: np.ndarray
    linear_velocity: np.ndarray
    angular_velocity: np.ndarray
    joint_angles: np.ndarray
    joint_velocities: np.ndarray
    previous_joint_angles: np.ndarray
    foot_forces: np.ndarray
    timestep: int
    initial_position: np.ndarray


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    done_reason: str  # one of: fell, tilted, timeout, none

    def __post_init__(self) -> None:
        if self.done != (self.done_reason != "none"):
            raise ValueError("done flag must match done_reason")


def rotation_matrix(orientation: np.ndarray) -> np.ndarray:
    """World-from-body rotation for (roll, pitch, yaw), applied z-y-x.

    Written out as the composed Rz(yaw) @ Ry(pitch) @ Rx(roll) matrix.
    """
    roll, pitch, yaw = orientation
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def _feet_body_frame(joint_angles: np.ndarray, config: RobotConfig):
    """Foot positions and joint-rate velocity terms in the torso frame.

    Returns (positions (4,3), d_pos/d_hip (4,3), d_pos/d_knee (4,3)).
    Each leg is a planar two-link chain in the torso's x-z plane.
    """
    l1, l2 = config.upper_leg_length, config.lower_leg_length
    hip = joint_angles[0::2]
    total = hip + joint_angles[1::2]
    sin_h, cos_h = np.sin(hip), np.cos(hip)
    sin_t, cos_t = np.sin(total), np.cos(total)
    pos = config.hip_offsets.copy()
    pos[:, 0] += l1 * sin_h + l2 * sin_t
    pos[:, 2] -= l1 * cos_h + l2 * cos_t
    d_knee = np.zeros((N_LEGS, 3))
    d_knee[:, 0] = l2 * cos_t
    d_knee[:, 2] = l2 * sin_t
    d_hip = d_knee.copy()
    d_hip[:, 0] += l1 * cos_h
    d_hip[:, 2] += l1 * sin_h
    return pos, d_hip, d_knee


def forward_kinematics(state: RobotState, config: RobotConfig) -> np.ndarray:
    """World positions of the four feet, one row per leg."""
    rot = rotation_matrix(state.torso_orientation)
    body, _, _ = _feet_body_frame(state.joint_angles, config)
    return state.torso_position + body @ rot.T


def _cross_rows(w: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Row-wise w x rows for a single 3-vector w and an (n, 3) array."""
    out = np.empty_like(rows)
    out[:, 0] = w[1] * rows[:, 2] - w[2] * rows[:, 1]
    out[:, 1] = w[2] * rows[:, 0] - w[0] * rows[:, 2]
    out[:, 2] = w[0] * rows[:, 1] - w[1] * rows[:, 0]
    return out


def _foot_kinematics(position, orientation, linear_velocity, angular_velocity,
                     joint_angles, joint_velocities, config):
    """World foot positions and velocities for the current pose."""
    rot = rotation_matrix(orientation)
    body, d_hip, d_knee = _feet_body_frame(joint_angles, config)
    offsets = body @ rot.T
    world = position + offsets
    joint_vel_body = (d_hip * joint_velocities[0::2, None]
                      + d_knee * joint_velocities[1::2, None])
    vel = (linear_velocity + _cross_rows(angular_velocity, offsets)
           + joint_vel_body @ rot.T)
    return world, vel


def pd_torque(targets, angles, velocities, config: RobotConfig) -> np.ndarray:
    """Saturated PD torque toward the (clamped) joint targets."""
    b = config.action_bound
    t = np.clip(np.asarray(targets, dtype=np.float64), -b, b)
    raw = config.pd_kp * (t - angles) - config.pd_kd * velocities
    return np.clip(raw, -config.torque_limit, config.torque_limit)


def contact_forces(foot_positions, foot_velocities, terrain: Terrain,
                   config: RobotConfig) -> np.ndarray:
    """Spring-damper normal force plus regularized Coulomb friction.

    Accepts (n, 3) position/velocity arrays and returns (n, 3) forces in
    world x/y/z per foot. A foot at or above the ground gets zero force.
    The friction magnitude ramps linearly with horizontal speed up to the
    Coulomb bound mu * normal, so it never violates the friction cone.
    """
    pos = np.asarray(foot_positions, dtype=np.float64)
    vel = np.asarray(foot_velocities, dtype=np.float64)
    ground = height_at(terrain, pos[:, 0], pos[:, 1])
    depth = ground - pos[:, 2]
    in_contact = depth > 0.0
    normal = np.where(
        in_contact,
        config.contact_stiffness * depth
        + config.contact_damping * np.maximum(0.0, -vel[:, 2]),
        0.0,
    )
    horizontal = vel[:, :2]
    speed = np.sqrt(horizontal[:, 0] ** 2 + horizontal[:, 1] ** 2)
    magnitude = (config.friction_mu * normal
                 * np.minimum(1.0, speed / config.slip_velocity))
    safe_speed = np.where(speed > 0.0, speed, 1.0)
    direction = horizontal / safe_speed[:, None]
    forces = np.zeros_like(pos)
    forces[:, :2] = -magnitude[:, None] * direction
    forces[:, 2] = normal
    return forces


def integrate(state: RobotState, torques, terrain: Terrain,
              config: RobotConfig) -> RobotState:
    """Advance one control step with semi-implicit Euler substeps.

    Torques are held constant over the control step. Velocities update
    before positions each substep; contact forces are evaluated at the
    substep's starting pose. Joint angles are clamped to the mechanical
    range with their velocity zeroed at the stop.
    """
    tau = np.asarray(torques, dtype=np.float64)
    h = config.dt / config.substeps
    pos = state.torso_position.copy()
    euler = state.torso_orientation.copy()
    lin_vel = state.linear_velocity.copy()
    ang_vel = state.angular_velocity.copy()
    q = state.joint_angles.copy()
    qd = state.joint_velocities.copy()
    inertia = config.inertia
    gravity = np.array([0.0, 0.0, -config.gravity])
    forces = state.foot_forces

    for _ in range(config.substeps):
        feet, feet_vel = _foot_kinematics(pos, euler, lin_vel, ang_vel, q, qd, config)
        forces = contact_forces(feet, feet_vel, terrain, config)
        lin_acc = gravity + forces.sum(axis=0) / config.mass
        lever = feet - pos
        torque_world = np.array([
            (lever[:, 1] * forces[:, 2] - lever[:, 2] * forces[:, 1]).sum(),
            (lever[:, 2] * forces[:, 0] - lever[:, 0] * forces[:, 2]).sum(),
            (lever[:, 0] * forces[:, 1] - lever[:, 1] * forces[:, 0]).sum(),
        ])
        ang_acc = torque_world / inertia
        lin_vel = lin_vel + lin_acc * h
        ang_vel = ang_vel + ang_acc * h
        qd = qd + (tau / config.leg_inertia) * h
        pos = pos + lin_vel * h
        euler = euler + ang_vel * h
        q = q + qd * h
        hit_stop = np.abs(q) > JOINT_RANGE
        if np.any(hit_stop):
            q = np.clip(q, -JOINT_RANGE, JOINT_RANGE)
            qd = np.where(hit_stop, 0.0, qd)

    new_state = RobotState(
        torso_position=pos,
        torso_orientation=euler,
        linear_velocity=lin_vel,
        angular_velocity=ang_vel,
        joint_angles=q,
        joint_velocities=qd,
        previous_joint_angles=state.joint_angles.copy(),
        foot_forces=forces,
        timestep=state.timestep + 1,
        initial_position=state.initial_position,
    )
    for arr in (pos, euler, lin_vel, ang_vel, q, qd, forces):
        if not np.all(np.isfinite(arr)):
            raise SimulationDiverged(
                f"non-finite state at control step {new_state.timestep}"
            )
    return new_state


def reward_terms(state: RobotState, config: RobotConfig, t_max: int) -> np.ndarray:
    """The seven reward terms; their plain sum is the step reward.

    Order: forward velocity, survival, height deviation, lateral
    deviation, roll, pitch, joint motion. Deviations are measured from
    the torso position recorded at reset.
    """
    dz = state.torso_position[2] - state.initial_position[2]
    dy = state.torso_position[1] - state.initial_position[1]
    joint_motion = np.sum(np.abs(np.abs(state.joint_angles)
                                 - np.abs(state.previous_joint_angles)))
    return np.array([
        75.0 * state.linear_velocity[0],
        25.0 * state.timestep / t_max,
        -10.0 * abs(dz),
        -5.0 * abs(dy),
        -5.0 * abs(state.torso_orientation[0]),
        -5.0 * abs(state.torso_orientation[1]),
        -0.05 * joint_motion,
    ])


def compute_reward(state: RobotState, config: RobotConfig, t_max: int) -> float:
    return float(reward_terms(state, config, t_max).sum())


def observe(state: RobotState,
            normalizers: Normalizers = DEFAULT_NORMALIZERS) -> np.ndarray:
    obs = np.concatenate([
        state.torso_position / normalizers.position,
        state.torso_orientation / normalizers.orientation,
        state.linear_velocity / normalizers.linear_velocity,
        state.angular_velocity / normalizers.angular_velocity,
        state.joint_angles / normalizers.joint_angle,
        state.joint_velocities / normalizers.joint_velocity,
        state.foot_forces.ravel() / normalizers.force,
        state.previous_joint_angles / normalizers.joint_angle,
    ])
    if not np.all(np.isfinite(obs)):
        raise SimulationDiverged("non-finite observation")
    return obs


def reset(terrain: Terrain, config: RobotConfig,
          seed: int = 0) -> tuple[RobotState, np.ndarray]:
    """Place the robot at the origin in its nominal stance, at rest.

    The placement is deterministic; the seed parameter is accepted for
    interface uniformity and reserved for future start randomization.
    The initial torso position becomes the reward's deviation reference.
    """
    del seed
    position = np.array([0.0, 0.0, config.stand_height + height_at(terrain, 0.0, 0.0)])
    stance = config.nominal_stance.astype(np.float64)
    state = RobotState(
        torso_position=position,
        torso_orientation=np.zeros(3),
        linear_velocity=np.zeros(3),
        angular_velocity=np.zeros(3),
        joint_angles=stance.copy(),
        joint_velocities=np.zeros(N_JOINTS),
        previous_joint_angles=stance.copy(),
        foot_forces=np.zeros((N_LEGS, 3)),
        timestep=0,
        initial_position=position.copy(),
    )
    return state, observe(state)


def _done_reason(state: RobotState, terrain: Terrain, config: RobotConfig,
                 t_max: int) -> str:
    ground = height_at(terrain, state.torso_position[0], state.torso_position[1])
    height = state.torso_position[2] - ground
    if height < 0.4 * config.stand_height:
        return "fell"
    if (abs(state.torso_orientation[0]) > 1.0
            or abs(state.torso_orientation[1]) > 1.0):
        return "tilted"
    if state.timestep >= t_max:
        return "timeout"
    return "none"


def step(state: RobotState, action, terrain: Terrain, config: RobotConfig,
         t_max: int,
         normalizers: Normalizers = DEFAULT_NORMALIZERS
         ) -> tuple[RobotState, StepResult]:
    """Apply one control step: clamp action, PD torques, integrate, score."""
    if state.timestep >= t_max:
        raise ProtocolError("step called on a finished episode")
    action = np.clip(np.asarray(action, dtype=np.float64),
                     -config.action_bound, config.action_bound)
    torques = pd_torque(action, state.joint_angles, state.joint_velocities, config)
    new_state = integrate(state, torques, terrain, config)
    reward = compute_reward(new_state, config, t_max)
    reason = _done_reason(new_state, terrain, config, t_max)
    result = StepResult(observe(new_state, normalizers), reward,
                        reason != "none", reason)
    return new_state, result


@dataclass
class QuadrupedEnv:
    """Stateful convenience wrapper over the pure simulator functions."""

    terrain: Terrain
    config: RobotConfig = field(default_factory=RobotConfig)
    t_max: int = 1000
    normalizers: Normalizers = DEFAULT_NORMALIZERS

    def __post_init__(self) -> None:
        self.state: RobotState | None = None
        self.done = False

    def reset(self, seed: int = 0) -> np.ndarray:
        self.state, obs = reset(self.terrain, self.config, seed)
        self.done = False
        return obs

    def step(self, action) -> StepResult:
        if self.state is None:
            raise ProtocolError("step called before reset")
        if self.done:
            raise ProtocolError("step called on a finished episode")
        self.state, result = step(self.state, action, self.terrain, self.config,
                                  self.t_max, self.normalizers)
        self.done = result.done
        return result
