"""Surrogate antagonistic-muscle arm: actuation lag, joint motion, kinematics.

The plant is deliberately simple: a first-order pressure lag feeding a
linear antagonistic torque per degree of freedom, with viscous damping and
soft joint-limit torques. Safety comes from clamping pressures to their
allowed ranges, never from rejecting actions.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .ball import RacketPose
from .validation import NonFiniteError, PamTennisError, finite_vector, require_finite

# Soft-limit torque engages in the outer part of each joint range.
SOFT_LIMIT_MARGIN = np.deg2rad(5.0)


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a unit axis."""
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    cc = 1.0 - c
    return np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    rx = rotation_about_axis(np.array([1.0, 0.0, 0.0]), roll)
    ry = rotation_about_axis(np.array([0.0, 1.0, 0.0]), pitch)
    rz = rotation_about_axis(np.array([0.0, 0.0, 1.0]), yaw)
    return rz @ ry @ rx


@dataclass(frozen=True)
class RobotState:
    """Joint angles/velocities plus measured and desired muscle pressures.

    Pressures are normalized to [0, 1] over the plant's full span; the
    allowed range per muscle may be narrower (see ArmModel.pressure_ranges).
    """

    q: np.ndarray
    qdot: np.ndarray
    p: np.ndarray
    p_des: np.ndarray

    def __post_init__(self):
        n = self.q.shape[0] if hasattr(self.q, "shape") else len(self.q)
        object.__setattr__(self, "q", finite_vector(self.q, n, "q"))
        object.__setattr__(self, "qdot", finite_vector(self.qdot, n, "qdot"))
        object.__setattr__(self, "p", finite_vector(self.p, 2 * n, "p"))
        object.__setattr__(self, "p_des", finite_vector(self.p_des, 2 * n, "p_des"))


@dataclass(frozen=True)
class Action:
    """Per-step change in desired pressures, one entry per muscle."""

    dp_des: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.dp_des, dtype=np.float64)
        object.__setattr__(self, "dp_des", require_finite(arr, "dp_des"))


def _default_axes():
    # Base yaw, then three pitch joints.
    return np.array(
        [
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
        ]
    )


def _default_link_dirs():
    # Column up from the base, then segments extending toward the table.
    return np.array(
        [
            [0.0, 0.0, 1.0],
            [0.0, -1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, -1.0, 0.0],
        ]
    )


@dataclass(frozen=True)
class ArmModel:
    """Declared geometry and dynamics of the surrogate arm.

    Muscles pair up per DoF: muscle 2i is the agonist and 2i+1 the
    antagonist of joint i, so the joint torque is proportional to the
    pressure differential of its pair.
    """

    link_lengths: np.ndarray = field(default_factory=lambda: np.array([0.30, 0.30, 0.25, 0.10]))
    joint_axes: np.ndarray = field(default_factory=_default_axes)
    link_dirs: np.ndarray = field(default_factory=_default_link_dirs)
    base_pos: np.ndarray = field(default_factory=lambda: np.array([0.30, 1.90, 0.05]))
    base_rpy: np.ndarray = field(default_factory=lambda: np.zeros(3))
    racket_normal_local: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    racket_radius: float = 0.08
    muscle_gain: float = 6.0
    inertia: np.ndarray = field(default_factory=lambda: np.array([0.08, 0.08, 0.04, 0.01]))
    viscous_damping: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5, 0.25, 0.08]))
    soft_limit_stiffness: float = 3000.0
    pressure_time_constant: float = 0.08
    pressure_ranges: np.ndarray = field(
        default_factory=lambda: np.column_stack([np.zeros(8), np.ones(8)])
    )
    joint_limits: np.ndarray = field(
        default_factory=lambda: np.array([[-1.2, 1.2], [-1.4, 0.8], [-0.8, 1.4], [-0.5, 2.0]])
    )
    initial_posture: np.ndarray = field(default_factory=lambda: np.array([0.0, -0.4, 0.5, 1.2]))
    dp_max: float = 0.3

    def __post_init__(self):
        n = self.n_joints
        if np.any(np.asarray(self.inertia) <= 0):
            raise PamTennisError("inertia must be positive")
        if self.pressure_time_constant <= 0:
            raise PamTennisError("pressure_time_constant must be positive")
        pr = np.asarray(self.pressure_ranges)
        if pr.shape != (2 * n, 2) or np.any(pr[:, 0] >= pr[:, 1]):
            raise PamTennisError("pressure_ranges must be 2n valid [min, max] rows")
        jl = np.asarray(self.joint_limits)
        if jl.shape != (n, 2) or np.any(jl[:, 0] >= jl[:, 1]):
            raise PamTennisError("joint_limits must be n valid [min, max] rows")

    @property
    def n_joints(self) -> int:
        return len(self.link_lengths)

    @property
    def n_muscles(self) -> int:
        return 2 * self.n_joints

    def base_rotation(self) -> np.ndarray:
        return rpy_matrix(*self.base_rpy)


def reset_robot(model: ArmModel) -> RobotState:
    """Initial posture at rest with mid-range co-contraction."""
    pr = np.asarray(model.pressure_ranges, dtype=np.float64)
    mid = 0.5 * (pr[:, 0] + pr[:, 1])
    q0 = np.asarray(model.initial_posture, dtype=np.float64).copy()
    return RobotState(q=q0, qdot=np.zeros(model.n_joints), p=mid.copy(), p_des=mid.copy())


def apply_action(state: RobotState, action: Action, model: ArmModel) -> RobotState:
    """Move desired pressures by a clamped delta, then clamp to ranges."""
    dp = np.clip(action.dp_des, -model.dp_max, model.dp_max)
    pr = np.asarray(model.pressure_ranges)
    p_des = np.clip(state.p_des + dp, pr[:, 0], pr[:, 1])
    return replace(state, p_des=p_des)


def _soft_limit_torque(q: np.ndarray, limits: np.ndarray, stiffness: float) -> np.ndarray:
    lo = limits[:, 0] + SOFT_LIMIT_MARGIN
    hi = limits[:, 1] - SOFT_LIMIT_MARGIN
    torque = np.zeros_like(q)
    below = q < lo
    above = q > hi
    torque[below] = stiffness * (lo[below] - q[below]) ** 2
    torque[above] = -stiffness * (q[above] - hi[above]) ** 2
    return torque


def step_robot(state: RobotState, model: ArmModel, dt: float) -> RobotState:
    """One control step of the surrogate plant.

    First-order pressure lag toward p_des, antagonistic torque from the
    pressure differential, viscous damping, soft limit torque, then a
    semi-implicit Euler update of the joints with a hard stop at the
    configured limits.
    """
    if not np.all(np.isfinite(state.q)) or not np.all(np.isfinite(state.p)):
        raise NonFiniteError("robot state contains non-finite values")
    pr = np.asarray(model.pressure_ranges)
    p = state.p + (dt / model.pressure_time_constant) * (state.p_des - state.p)
    p = np.clip(p, pr[:, 0], pr[:, 1])

    diff = p[0::2] - p[1::2]
    limits = np.asarray(model.joint_limits)
    torque = (
        model.muscle_gain * diff
        - np.asarray(model.viscous_damping) * state.qdot
        + _soft_limit_torque(state.q, limits, model.soft_limit_stiffness)
    )
    qdot = state.qdot + dt * torque / np.asarray(model.inertia)
    q = state.q + dt * qdot

    hit_lo = q < limits[:, 0]
    hit_hi = q > limits[:, 1]
    q = np.clip(q, limits[:, 0], limits[:, 1])
    qdot = np.where(hit_lo | hit_hi, 0.0, qdot)
    return RobotState(q=q, qdot=qdot, p=p, p_des=state.p_des.copy())


def forward_kinematics(q: np.ndarray, model: ArmModel) -> RacketPose:
    """Racket pose from joint angles; pose velocity is zeroed.

    Composes each joint rotation about its local axis followed by the
    link translation; the racket normal is the chain rotation applied to
    the configured transverse axis of the last link.
    """
    q = finite_vector(q, model.n_joints, "q")
    rot = model.base_rotation()
    pos = np.asarray(model.base_pos, dtype=np.float64).copy()
    axes = np.asarray(model.joint_axes)
    dirs = np.asarray(model.link_dirs)
    lengths = np.asarray(model.link_lengths)
    for i in range(model.n_joints):
        rot = rot @ rotation_about_axis(axes[i], q[i])
        pos = pos + rot @ (lengths[i] * dirs[i])
    normal = rot @ np.asarray(model.racket_normal_local, dtype=np.float64)
    normal = normal / np.linalg.norm(normal)
    return RacketPose(center=pos, normal=normal, velocity=np.zeros(3), radius=model.racket_radius)


def racket_velocity(q: np.ndarray, qdot: np.ndarray, model: ArmModel, h: float = 1e-6) -> np.ndarray:
    """Racket center velocity as a finite-difference Jacobian times qdot."""
    n = model.n_joints
    jac = np.empty((3, n))
    for i in range(n):
        dq = np.zeros(n)
        dq[i] = h
        plus = forward_kinematics(q + dq, model).center
        minus = forward_kinematics(q - dq, model).center
        jac[:, i] = (plus - minus) / (2 * h)
    return jac @ np.asarray(qdot, dtype=np.float64)
