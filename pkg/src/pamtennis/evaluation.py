"""Policy evaluation, aggregate statistics, and the toy reach benchmark."""

import os
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .arm import ArmModel, forward_kinematics
from .hysr import EpisodeRollout, HysrEnv, NormalizationSpec, SurrogatePlant
from .rewards import StrokeOutcome
from .rng import NS_EVAL, substream
from .validation import PamTennisError


class EmptyInputError(PamTennisError):
    pass


@dataclass
class EvalReport:
    n_episodes: int
    n_hits: int
    n_returns: int
    hit_rate: float
    return_rate: float
    landing_points: np.ndarray  # (k, 2)
    landing_mean: np.ndarray
    landing_cov: np.ndarray
    speed_samples: np.ndarray
    mean_rtt: float
    episode_rewards: np.ndarray = field(default=None, repr=False)


def is_return(outcome: StrokeOutcome, net_y: float = 0.0) -> bool:
    """Landed on the opponent half (the launcher's side) without a net fault."""
    return (
        outcome.hit
        and not outcome.net_fault
        and outcome.landing is not None
        and outcome.landing.point[1] < net_y
    )


def evaluate_policy(
    params: nn.PolicyParams,
    env: HysrEnv,
    n: int,
    seed: int,
    deterministic: bool = True,
) -> EvalReport:
    """Run ``n`` episodes on the env's (held-out) dataset and aggregate.

    Episode k draws its trajectory (and, when sampling, its actions) from
    the substream (seed, eval, k), so two policies evaluated with the same
    seed face the same ball sequence.
    """
    if n < 1:
        raise PamTennisError("n must be at least 1")
    hits = 0
    returns = 0
    rewards = np.empty(n)
    landings = []
    speeds = []
    for k in range(n):
        rng = substream(seed, NS_EVAL, k)
        rollout = env.rollout(params, rng, deterministic=deterministic)
        outcome = rollout.outcome
        rewards[k] = rollout.total_reward
        if outcome.hit:
            hits += 1
            speeds.append(outcome.max_speed_after_hit)
        if is_return(outcome, env.table.net_y):
            returns += 1
            landings.append(outcome.landing.point[:2])
    landing_points = np.asarray(landings) if landings else np.zeros((0, 2))
    if len(landing_points) >= 2:
        landing_mean = landing_points.mean(axis=0)
        landing_cov = np.cov(landing_points.T, ddof=1)
    elif len(landing_points) == 1:
        landing_mean = landing_points[0].copy()
        landing_cov = np.zeros((2, 2))
    else:
        landing_mean = np.zeros(2)
        landing_cov = np.zeros((2, 2))
    return EvalReport(
        n_episodes=n,
        n_hits=hits,
        n_returns=returns,
        hit_rate=hits / n,
        return_rate=returns / n,
        landing_points=landing_points,
        landing_mean=landing_mean,
        landing_cov=landing_cov,
        speed_samples=np.asarray(speeds),
        mean_rtt=float(rewards.mean()),
        episode_rewards=rewards,
    )


def speed_histogram(speeds, bin_width: float):
    """Counts and probabilities over [0, max + bin_width) bins."""
    if bin_width <= 0:
        raise PamTennisError("bin_width must be positive")
    speeds = np.asarray(speeds, dtype=np.float64)
    if speeds.size == 0:
        raise EmptyInputError("no speed samples")
    n_bins = int(np.floor(speeds.max() / bin_width)) + 1
    edges = bin_width * np.arange(n_bins + 1)
    counts, _ = np.histogram(speeds, bins=edges)
    return counts, counts / speeds.size, edges


def learning_curve(update_logs):
    """Per-update (mean, unbiased std) of episode rewards.

    ``update_logs`` is an iterable of (update_index, rewards) pairs;
    singleton groups report std 0.
    """
    rows = []
    for update, rewards in update_logs:
        rewards = np.asarray(rewards, dtype=np.float64)
        std = float(rewards.std(ddof=1)) if rewards.size > 1 else 0.0
        rows.append((update, float(rewards.mean()), std))
    return rows


def write_eval_csvs(report: EvalReport, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "landing_points.csv"), "w", encoding="utf-8") as fh:
        fh.write("x,y\n")
        for x, y in report.landing_points:
            fh.write(f"{float(x)!r},{float(y)!r}\n")
    with open(os.path.join(out_dir, "speeds.csv"), "w", encoding="utf-8") as fh:
        fh.write("speed\n")
        for s in report.speed_samples:
            fh.write(f"{float(s)!r}\n")
    cov = report.landing_cov
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8") as fh:
        fh.write(
            "n_episodes,n_hits,n_returns,hit_rate,return_rate,mean_rtt,"
            "landing_mean_x,landing_mean_y,cov_xx,cov_xy,cov_yy\n"
        )
        fh.write(
            ",".join(
                [str(report.n_episodes), str(report.n_hits), str(report.n_returns)]
                + [
                    repr(float(v))
                    for v in (
                        report.hit_rate,
                        report.return_rate,
                        report.mean_rtt,
                        report.landing_mean[0],
                        report.landing_mean[1],
                        cov[0, 0],
                        cov[0, 1],
                        cov[1, 1],
                    )
                ]
            )
            + "\n"
        )


# ---------------------------------------------------------------------------
# Toy reach benchmark


def toy_arm_model() -> ArmModel:
    """Two-joint arm (base yaw + shoulder pitch) for the desk-scale check."""
    return ArmModel(
        link_lengths=np.array([0.30, 0.45]),
        joint_axes=np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
        link_dirs=np.array([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0]]),
        base_pos=np.array([0.30, 1.90, 0.05]),
        inertia=np.array([0.06, 0.06]),
        viscous_damping=np.array([0.4, 0.4]),
        pressure_ranges=np.column_stack([np.zeros(4), np.ones(4)]),
        joint_limits=np.array([[-1.2, 1.2], [-1.2, 1.2]]),
        initial_posture=np.array([0.0, 0.0]),
    )


class ToyReachEnv:
    """Terminal-reward reaching task: put the racket at a fixed point.

    Observations are the normalized robot state only; the reward at the
    final step is the negated distance between racket center and target.
    """

    def __init__(self, target=(-0.30, 1.60, 0.45), steps: int = 40, dt: float = 0.01):
        self.model = toy_arm_model()
        self.target = np.asarray(target, dtype=np.float64)
        self.steps = steps
        self.dt = dt
        limits = np.asarray(self.model.joint_limits)
        n = self.model.n_joints
        self.norm = NormalizationSpec(
            offset=np.concatenate(
                [0.5 * (limits[:, 0] + limits[:, 1]), np.zeros(n), np.full(2 * n, 0.5)]
            ),
            scale=np.concatenate(
                [0.5 * (limits[:, 1] - limits[:, 0]), np.full(n, 10.0), np.full(2 * n, 0.5)]
            ),
        )
        self.obs_dim = self.norm.dim
        self.act_dim = self.model.n_muscles
        self.act_scale = self.model.dp_max
        self._plant = SurrogatePlant(self.model)

    def rollout(self, params: nn.PolicyParams, rng, deterministic: bool = False) -> EpisodeRollout:
        from .arm import Action

        self._plant.reset()
        obs_list, act_list, pre_list, logp_list, val_list = [], [], [], [], []
        for _ in range(self.steps):
            state = self._plant.read()
            raw = np.concatenate([state.q, state.qdot, state.p])
            obs = self.norm.normalize(raw)
            out = nn.policy_forward(params, obs)
            if deterministic:
                pre = out.pre_mean
                action = nn.deterministic_action(out)
                logp = float(nn.action_log_prob(params, pre, out.pre_mean))
            else:
                action, pre, logp = nn.sample_action(out, params, rng)
            obs_list.append(obs)
            act_list.append(action)
            pre_list.append(pre)
            logp_list.append(logp)
            val_list.append(out.value)
            self._plant.apply(Action(action), self.dt)

        final_dist = float(
            np.linalg.norm(forward_kinematics(self._plant.read().q, self.model).center - self.target)
        )
        outcome = StrokeOutcome(hit=False, min_ball_racket_distance=final_dist)
        rewards = np.zeros(self.steps)
        rewards[-1] = -final_dist
        n_steps = self.steps
        zeros3 = np.zeros((n_steps, 3))
        return EpisodeRollout(
            obs=np.asarray(obs_list),
            actions=np.asarray(act_list),
            pre_actions=np.asarray(pre_list),
            log_probs=np.asarray(logp_list),
            values=np.asarray(val_list),
            rewards=rewards,
            outcome=outcome,
            traj_id=-1,
            q=np.zeros((n_steps, self.model.n_joints)),
            qdot=np.zeros((n_steps, self.model.n_joints)),
            p=np.zeros((n_steps, self.model.n_muscles)),
            p_des=np.zeros((n_steps, self.model.n_muscles)),
            ball_pos=zeros3,
            ball_vel=zeros3,
            hit_flags=np.zeros(n_steps, dtype=bool),
        )


def toy_hyper(total_updates: int = 51) -> "PpoHyper":
    """Desk-scale hyperparameters for the reach benchmark."""
    from .ppo import PpoHyper

    return PpoHyper(
        nsteps=2048,
        hidden=64,
        total_timesteps=total_updates * 2048,
    )


def toy_reach_benchmark(hyper=None, seed: int = 7, workers: int = 1):
    """Train on the reach task; returns the per-update log rows."""
    from .ppo import train

    hyper = hyper or toy_hyper()
    _, logs = train(ToyReachEnv, hyper, seed, workers=workers)
    return logs
