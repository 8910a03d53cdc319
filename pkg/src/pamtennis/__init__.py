"""Muscular-robot table tennis learning, fully simulated.

The package bundles a projectile/bounce/rebound ball model, a surrogate
antagonistic-muscle arm, a synthetic ball launcher, replay-then-simulate
episodes over recorded trajectories, a from-scratch PPO trainer, and
evaluation utilities, wired together behind one batch CLI.
"""

__version__ = "0.1.0"

from .arm import Action, ArmModel, RobotState, forward_kinematics, racket_velocity, reset_robot
from .ball import (
    AeroParams,
    BallState,
    ContactEvent,
    ContactKind,
    RacketPose,
    TableGeometry,
    detect_racket_contact,
    detect_table_contact,
    racket_rebound,
    simulate_until_landing,
    step_ball,
    table_bounce,
)
from .dataset import Dataset, RecordedTrajectory, VariabilityReport, load_dataset, resample, sample_trajectory, save_dataset, variability_stats
from .evaluation import EvalReport, evaluate_policy, learning_curve, speed_histogram, toy_reach_benchmark
from .hysr import EpisodeRollout, HysrConfig, HysrEnv, NormalizationSpec, SurrogatePlant, compose_observation, run_episode
from .launcher import LauncherConfig, generate_dataset, launcher_selftest
from .ppo import PpoHyper, PPOTrainer, gae, load_checkpoint, ppo_update, save_checkpoint, train
from .rewards import RewardConfig, StrokeOutcome, Task, episode_reward, hitting_reward, table_tennis_reward

__all__ = [
    "Action",
    "AeroParams",
    "ArmModel",
    "BallState",
    "ContactEvent",
    "ContactKind",
    "Dataset",
    "EpisodeRollout",
    "EvalReport",
    "HysrConfig",
    "HysrEnv",
    "LauncherConfig",
    "NormalizationSpec",
    "PPOTrainer",
    "PpoHyper",
    "RacketPose",
    "RecordedTrajectory",
    "RewardConfig",
    "RobotState",
    "StrokeOutcome",
    "SurrogatePlant",
    "TableGeometry",
    "Task",
    "VariabilityReport",
    "compose_observation",
    "detect_racket_contact",
    "detect_table_contact",
    "episode_reward",
    "evaluate_policy",
    "forward_kinematics",
    "gae",
    "generate_dataset",
    "hitting_reward",
    "launcher_selftest",
    "learning_curve",
    "load_checkpoint",
    "load_dataset",
    "ppo_update",
    "racket_rebound",
    "racket_velocity",
    "resample",
    "reset_robot",
    "run_episode",
    "sample_trajectory",
    "save_checkpoint",
    "save_dataset",
    "simulate_until_landing",
    "speed_histogram",
    "step_ball",
    "table_bounce",
    "table_tennis_reward",
    "toy_reach_benchmark",
    "train",
    "variability_stats",
]
