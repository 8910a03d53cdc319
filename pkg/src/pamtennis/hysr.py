"""Replay-then-simulate episodes.

Each episode replays one recorded ball trajectory on the control grid
while the (surrogate) robot moves under the policy. The ball follows the
recording verbatim until the racket first touches it; from that moment it
is handed to the flight simulator, which supplies the landing point,
net faults, and the running maximum speed that the terminal reward needs.

The robot is accessed through a small plant seam (reset/read/apply) so a
hardware plant could replace the surrogate without touching the episode
logic; with the surrogate, copying the plant state into the episode is the
identity.
"""

from dataclasses import dataclass, field

import numpy as np

from . import nn
from .arm import Action, ArmModel, apply_action, forward_kinematics, racket_velocity, reset_robot, step_robot
from .ball import (
    AeroParams,
    BallFlight,
    BallState,
    RacketPose,
    TableGeometry,
    point_disc_distance,
    racket_rebound,
)
from .dataset import Dataset, RecordedTrajectory, resample, sample_trajectory
from .rewards import RewardConfig, StrokeOutcome, episode_reward
from .validation import PamTennisError

OBS_LAYOUT = "q qdot p ball_pos ball_vel"


@dataclass(frozen=True)
class HysrConfig:
    """Episode mechanics: timing, contact, and termination rules."""

    dt: float = 0.01
    max_steps: int = 150
    steps_after_landing: int = 20
    eps_r: float = 0.78
    contact_margin: float = 0.005
    contact_sweep: int = 10
    flight_substep: float = 1e-3
    lost_radius: float = 3.0


@dataclass(frozen=True)
class NormalizationSpec:
    """Static per-dimension affine map applied to observations.

    Fixed at configuration time (not running statistics) so that training
    and evaluation see identical inputs for identical states.
    """

    offset: np.ndarray
    scale: np.ndarray

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        return (raw - self.offset) / self.scale

    def denormalize(self, normed: np.ndarray) -> np.ndarray:
        return normed * self.scale + self.offset

    @classmethod
    def identity(cls, dim: int) -> "NormalizationSpec":
        return cls(offset=np.zeros(dim), scale=np.ones(dim))

    @classmethod
    def for_env(cls, model: ArmModel, table: TableGeometry) -> "NormalizationSpec":
        """Joint angles by range, velocities by 10, pressures to [-1, 1],
        ball positions by half-extent + 1 m, ball velocities by 10."""
        limits = np.asarray(model.joint_limits)
        n = model.n_joints
        offset = np.concatenate(
            [
                0.5 * (limits[:, 0] + limits[:, 1]),
                np.zeros(n),
                np.full(2 * n, 0.5),
                np.zeros(3),
                np.zeros(3),
            ]
        )
        scale = np.concatenate(
            [
                0.5 * (limits[:, 1] - limits[:, 0]),
                np.full(n, 10.0),
                np.full(2 * n, 0.5),
                np.array([table.width_x / 2 + 1.0, table.length_y / 2 + 1.0, 1.0]),
                np.full(3, 10.0),
            ]
        )
        return cls(offset=offset, scale=scale)

    @property
    def dim(self) -> int:
        return len(self.offset)


def compose_observation(robot, ball: BallState, norm: NormalizationSpec) -> np.ndarray:
    """Flat normalized state vector in OBS_LAYOUT order."""
    raw = np.concatenate([robot.q, robot.qdot, robot.p, ball.pos, ball.vel])
    return norm.normalize(raw)


class SurrogatePlant:
    """Simulated stand-in for the real arm behind the plant seam."""

    def __init__(self, model: ArmModel):
        self.model = model
        self.state = reset_robot(model)

    def reset(self):
        self.state = reset_robot(self.model)
        return self.state

    def read(self):
        return self.state

    def apply(self, action: Action, dt: float):
        self.state = step_robot(apply_action(self.state, action, self.model), self.model, dt)


@dataclass
class EpisodeRollout:
    """Per-step training data plus the plant/ball logs behind the trace CSVs."""

    obs: np.ndarray
    actions: np.ndarray
    pre_actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    outcome: StrokeOutcome
    traj_id: int
    seed: int | None = None
    q: np.ndarray = field(default=None, repr=False)
    qdot: np.ndarray = field(default=None, repr=False)
    p: np.ndarray = field(default=None, repr=False)
    p_des: np.ndarray = field(default=None, repr=False)
    ball_pos: np.ndarray = field(default=None, repr=False)
    ball_vel: np.ndarray = field(default=None, repr=False)
    hit_flags: np.ndarray = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.rewards)

    @property
    def total_reward(self) -> float:
        return float(self.rewards[-1])


def _sweep_contact(prev: BallState, curr: BallState, racket: RacketPose, capture: float, n_points: int):
    """First fraction of the segment prev->curr within capture distance, or None."""
    for j in range(1, n_points + 1):
        lam = j / n_points
        point = prev.pos + lam * (curr.pos - prev.pos)
        if point_disc_distance(point, racket.center, racket.normal, racket.radius) <= capture:
            return lam
    return None


def run_episode(
    params: nn.PolicyParams,
    plant,
    traj: RecordedTrajectory,
    norm: NormalizationSpec,
    reward_cfg: RewardConfig,
    cfg: HysrConfig | None = None,
    table: TableGeometry | None = None,
    aero: AeroParams | None = None,
    rng: np.random.Generator | None = None,
    deterministic: bool = False,
    replay: list | None = None,
) -> EpisodeRollout:
    """One full episode; see module docstring for the phase structure.

    ``replay`` may carry a pre-resampled trajectory to avoid repeating the
    interpolation when the same recording is replayed many times.
    """
    cfg = cfg or HysrConfig()
    table = table or TableGeometry()
    aero = aero or AeroParams()
    if rng is None and not deterministic:
        raise PamTennisError("stochastic episodes need an rng")
    robot_state = plant.reset()
    model = plant.model
    if replay is None:
        replay = resample(traj, cfg.dt)

    capture = aero.radius + cfg.contact_margin
    flight: BallFlight | None = None
    racket_touched = False
    t_hit = None
    min_dist = np.inf
    landing_step = None

    obs_list, act_list, pre_list, logp_list, val_list = [], [], [], [], []
    q_log, qd_log, p_log, pdes_log, bpos_log, bvel_log, hit_log = [], [], [], [], [], [], []

    prev_ball: BallState | None = None
    for t in range(cfg.max_steps):
        robot_state = plant.read()
        racket = forward_kinematics(robot_state.q, model)

        if not racket_touched:
            if t >= len(replay):
                break
            ball = replay[t]
            lam = None
            if prev_ball is not None:
                lam = _sweep_contact(prev_ball, ball, racket, capture, cfg.contact_sweep)
            elif point_disc_distance(ball.pos, racket.center, racket.normal, racket.radius) <= capture:
                lam = 1.0
            if lam is not None:
                racket_touched = True
                t_hit = (t - 1 + lam) * cfg.dt if prev_ball is not None else 0.0
                contact_pos = (
                    prev_ball.pos + lam * (ball.pos - prev_ball.pos) if prev_ball is not None else ball.pos
                )
                contact_vel = (
                    prev_ball.vel + lam * (ball.vel - prev_ball.vel) if prev_ball is not None else ball.vel
                )
                moving_racket = RacketPose(
                    center=racket.center,
                    normal=racket.normal,
                    velocity=racket_velocity(robot_state.q, robot_state.qdot, model),
                    radius=racket.radius,
                )
                v_out = racket_rebound(contact_vel, moving_racket, cfg.eps_r)
                flight = BallFlight(
                    BallState(pos=contact_pos, vel=v_out), table, aero, substep=cfg.flight_substep
                )
                remaining = (1.0 - lam) * cfg.dt
                if remaining > 0:
                    flight.advance(remaining)
                ball = flight.state
        else:
            ball = flight.advance(cfg.dt)

        min_dist = min(min_dist, float(np.linalg.norm(ball.pos - racket.center)))

        obs = compose_observation(robot_state, ball, norm)
        out = nn.policy_forward(params, obs)
        if deterministic:
            pre_action = out.pre_mean
            action = nn.deterministic_action(out)
            log_prob = float(nn.action_log_prob(params, pre_action, out.pre_mean))
        else:
            action, pre_action, log_prob = nn.sample_action(out, params, rng)

        obs_list.append(obs)
        act_list.append(action)
        pre_list.append(pre_action)
        logp_list.append(log_prob)
        val_list.append(out.value)
        q_log.append(robot_state.q)
        qd_log.append(robot_state.qdot)
        p_log.append(robot_state.p)
        pdes_log.append(robot_state.p_des)
        bpos_log.append(ball.pos)
        bvel_log.append(ball.vel)
        hit_log.append(racket_touched)

        plant.apply(Action(action), cfg.dt)
        prev_ball = ball

        if racket_touched:
            if flight.net_fault or flight.lost:
                break
            if flight.landing is not None:
                if landing_step is None:
                    landing_step = t
                if t - landing_step >= cfg.steps_after_landing:
                    break
        else:
            horiz = float(np.hypot(ball.pos[0], ball.pos[1]))
            if horiz > cfg.lost_radius or ball.pos[2] < table.surface_z - 0.5:
                break

    if racket_touched:
        outcome = StrokeOutcome(
            hit=True,
            min_ball_racket_distance=float(min_dist),
            t_hit=t_hit,
            landing=flight.landing,
            max_speed_after_hit=flight.max_speed,
            net_fault=flight.net_fault,
        )
    else:
        outcome = StrokeOutcome(hit=False, min_ball_racket_distance=float(min_dist))

    rewards = np.zeros(len(obs_list))
    rewards[-1] = episode_reward(outcome, reward_cfg)

    return EpisodeRollout(
        obs=np.asarray(obs_list),
        actions=np.asarray(act_list),
        pre_actions=np.asarray(pre_list),
        log_probs=np.asarray(logp_list),
        values=np.asarray(val_list),
        rewards=rewards,
        outcome=outcome,
        traj_id=traj.id,
        q=np.asarray(q_log),
        qdot=np.asarray(qd_log),
        p=np.asarray(p_log),
        p_des=np.asarray(pdes_log),
        ball_pos=np.asarray(bpos_log),
        ball_vel=np.asarray(bvel_log),
        hit_flags=np.asarray(hit_log),
    )


class HysrEnv:
    """Episode factory over a recorded dataset; the trainer's environment.

    Picklable (holds only plain config and data), so rollout collection
    can fan out across worker processes.
    """

    def __init__(
        self,
        dataset: Dataset,
        model: ArmModel | None = None,
        table: TableGeometry | None = None,
        aero: AeroParams | None = None,
        hysr_cfg: HysrConfig | None = None,
        reward_cfg: RewardConfig | None = None,
    ):
        self.dataset = dataset
        self.model = model or ArmModel()
        self.table = table or TableGeometry()
        self.aero = aero or AeroParams()
        self.hysr_cfg = hysr_cfg or HysrConfig()
        self.reward_cfg = reward_cfg or RewardConfig.for_arm(self.model)
        self.norm = NormalizationSpec.for_env(self.model, self.table)
        self.obs_dim = self.norm.dim
        self.act_dim = self.model.n_muscles
        self.act_scale = self.model.dp_max
        self._replay_cache: dict[int, list] = {}
        self._plant = SurrogatePlant(self.model)

    def _replay(self, traj: RecordedTrajectory) -> list:
        cached = self._replay_cache.get(traj.id)
        if cached is None:
            cached = resample(traj, self.hysr_cfg.dt)
            self._replay_cache[traj.id] = cached
        return cached

    def rollout(self, params: nn.PolicyParams, rng: np.random.Generator, deterministic: bool = False):
        traj = sample_trajectory(self.dataset, rng)
        return self.run_on(params, traj, rng, deterministic)

    def run_on(self, params, traj: RecordedTrajectory, rng, deterministic: bool = False):
        return run_episode(
            params,
            self._plant,
            traj,
            self.norm,
            self.reward_cfg,
            cfg=self.hysr_cfg,
            table=self.table,
            aero=self.aero,
            rng=rng,
            deterministic=deterministic,
            replay=self._replay(traj),
        )


def _muscle_names(n_joints: int) -> list[str]:
    return [f"{i + 1}{side}" for i in range(n_joints) for side in ("a", "b")]


def write_rollout_csv(rollout: EpisodeRollout, path, dt: float = 0.01) -> None:
    """Per-step trace: time, joints, pressures, ball, actions, hit flag, reward."""
    n = rollout.q.shape[1]
    muscles = _muscle_names(n)
    cols = (
        ["t"]
        + [f"q{i + 1}" for i in range(n)]
        + [f"qd{i + 1}" for i in range(n)]
        + [f"p_{m}" for m in muscles]
        + [f"pdes_{m}" for m in muscles]
        + ["ball_x", "ball_y", "ball_z", "ball_vx", "ball_vy", "ball_vz"]
        + [f"a_{m}" for m in muscles]
        + ["hit", "reward"]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for t in range(len(rollout)):
            row = [t * dt]
            row.extend(rollout.q[t])
            row.extend(rollout.qdot[t])
            row.extend(rollout.p[t])
            row.extend(rollout.p_des[t])
            row.extend(rollout.ball_pos[t])
            row.extend(rollout.ball_vel[t])
            row.extend(rollout.actions[t])
            row.append(int(rollout.hit_flags[t]))
            row.append(rollout.rewards[t])
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
