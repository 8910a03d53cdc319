"""Episode reward functions for the return and smash tasks.

The terminal reward is conditional on whether the racket touched the ball:
a touched ball is scored by its landing accuracy (times the maximum
post-hit ball speed for the smash task), a missed ball by how closely it
passed the racket. Landing accuracy is normalized so that a landing as far
from the target as the racket's start position scores zero, and the score
is floored to keep wild deflections from dominating the gradient signal.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .ball import ContactEvent
from .validation import PamTennisError, finite_vector


class NotHitError(PamTennisError):
    """table_tennis_reward called for an episode without a racket contact."""


class Task(enum.Enum):
    RETURN = "return"
    SMASH = "smash"


@dataclass(frozen=True)
class RewardConfig:
    task: Task = Task.RETURN
    b_des: tuple = (0.0, -0.685)
    r0: tuple = (0.30, 1.35, 0.35)
    exponent: float = 0.75
    floor: float = -0.2
    table_z: float = 0.0

    def __post_init__(self):
        if not 0 < self.exponent <= 1:
            raise PamTennisError("exponent must be in (0, 1]")
        if self.floor >= 0:
            raise PamTennisError("floor must be negative")
        if self.b_des[1] >= 0:
            raise PamTennisError("b_des must lie on the opponent half (y < 0)")

    @property
    def accuracy_scale(self) -> float:
        """1 / distance from the initial racket position to the target."""
        target = np.array([self.b_des[0], self.b_des[1], self.table_z])
        return 1.0 / float(np.linalg.norm(np.asarray(self.r0) - target))

    @classmethod
    def for_arm(cls, model, task: "Task" = None, b_des: tuple = (0.0, -0.685), **kwargs) -> "RewardConfig":
        """Config with r0 taken from the arm's initial racket position."""
        from .arm import forward_kinematics

        center = forward_kinematics(np.asarray(model.initial_posture, dtype=np.float64), model).center
        return cls(task=task or Task.RETURN, b_des=b_des, r0=tuple(float(v) for v in center), **kwargs)


@dataclass(frozen=True)
class StrokeOutcome:
    """What happened to the ball in one episode."""

    hit: bool
    min_ball_racket_distance: float
    t_hit: float | None = None
    landing: ContactEvent | None = None
    max_speed_after_hit: float | None = None
    net_fault: bool = False

    def __post_init__(self):
        if self.min_ball_racket_distance < 0:
            raise PamTennisError("min_ball_racket_distance must be non-negative")
        if not self.hit and (
            self.landing is not None or self.t_hit is not None or self.max_speed_after_hit is not None
        ):
            raise PamTennisError("miss outcomes cannot carry hit data")


def hitting_reward(outcome: StrokeOutcome) -> float:
    """Negated closest approach between ball and racket over the episode."""
    return -outcome.min_ball_racket_distance


def table_tennis_reward(outcome: StrokeOutcome, cfg: RewardConfig) -> float:
    """Landing-accuracy score for a touched ball, floored at cfg.floor.

    A hit without a valid landing (net fault, ball lost, or timeout)
    scores the floor value directly.
    """
    if not outcome.hit:
        raise NotHitError("table tennis reward requires a racket contact")
    if outcome.landing is None or outcome.net_fault:
        return cfg.floor
    landing_xy = outcome.landing.point[:2]
    d = float(np.linalg.norm(landing_xy - np.asarray(cfg.b_des, dtype=np.float64)))
    reward = 1.0 - (cfg.accuracy_scale * d) ** cfg.exponent
    if cfg.task is Task.SMASH:
        reward *= outcome.max_speed_after_hit
    return max(reward, cfg.floor)


def episode_reward(outcome: StrokeOutcome, cfg: RewardConfig) -> float:
    """Conditional terminal reward: accuracy if hit, closeness otherwise."""
    if outcome.hit:
        return table_tennis_reward(outcome, cfg)
    return hitting_reward(outcome)
