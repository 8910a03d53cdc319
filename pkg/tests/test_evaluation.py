import numpy as np
import pytest

from pamtennis import nn, ppo
from pamtennis.arm import ArmModel, forward_kinematics
from pamtennis.dataset import Dataset, RecordedTrajectory
from pamtennis.evaluation import (
    EmptyInputError,
    ToyReachEnv,
    evaluate_policy,
    learning_curve,
    speed_histogram,
    toy_hyper,
    toy_reach_benchmark,
    write_eval_csvs,
)
from pamtennis.hysr import HysrEnv
from pamtennis.launcher import LauncherConfig, generate_dataset
from pamtennis.rng import substream


def straight_traj(target, vel, t_flight=0.7, duration=0.9, traj_id=0):
    vel = np.asarray(vel, float)
    start = np.asarray(target, float) - vel * t_flight
    t = np.arange(0.0, duration, 1 / 180)
    pos = start[None, :] + t[:, None] * vel[None, :]
    return RecordedTrajectory(id=traj_id, samples=np.column_stack([t, pos]), sample_rate_hz=180.0)


def zero_params(env, hidden=8):
    return nn.init_params(env.obs_dim, env.act_dim, hidden, substream(0, 4, 0), act_scale=env.act_scale)


class TestEvaluatePolicy:
    def test_static_policy_on_far_balls(self):
        model = ArmModel()
        trajs = tuple(
            straight_traj((1.2, 0.5, 1.5), (0.0, 4.0, -0.3), traj_id=i) for i in range(3)
        )
        env = HysrEnv(Dataset(trajectories=trajs), model=model)
        report = evaluate_policy(zero_params(env), env, n=10, seed=0, deterministic=True)
        assert report.hit_rate == 0.0
        assert report.return_rate == 0.0
        assert report.speed_samples.size == 0
        assert report.landing_points.shape == (0, 2)

    def test_scripted_intercepts_hit_every_time(self):
        model = ArmModel()
        pose = forward_kinematics(np.asarray(model.initial_posture), model)
        vel = np.array([0.0, 4.5, -1.0])
        vel = 6.0 * vel / np.linalg.norm(vel)
        trajs = tuple(straight_traj(pose.center, vel, traj_id=i) for i in range(4))
        env = HysrEnv(Dataset(trajectories=trajs), model=model)
        report = evaluate_policy(zero_params(env), env, n=20, seed=1, deterministic=True)
        assert report.hit_rate == 1.0
        assert report.return_rate == 1.0
        assert report.landing_points.shape[0] == 20
        # Gaussian fit reproduces the sample mean exactly
        assert np.allclose(report.landing_mean, report.landing_points.mean(axis=0), atol=1e-15)
        eigs = np.linalg.eigvalsh(report.landing_cov)
        assert np.all(eigs >= -1e-18)

    def test_return_rate_never_exceeds_hit_rate(self):
        data = generate_dataset(LauncherConfig(), n=20, seed=3)
        env = HysrEnv(data)
        rng = np.random.default_rng(0)
        params = zero_params(env).with_arrays(
            {"w2": 0.3 * rng.standard_normal((env.act_dim, 8))}
        )
        report = evaluate_policy(params, env, n=30, seed=2, deterministic=False)
        assert report.return_rate <= report.hit_rate

    def test_same_seed_same_report(self):
        data = generate_dataset(LauncherConfig(), n=10, seed=4)
        env = HysrEnv(data)
        params = zero_params(env)
        a = evaluate_policy(params, env, n=15, seed=9, deterministic=False)
        b = evaluate_policy(params, env, n=15, seed=9, deterministic=False)
        assert a.hit_rate == b.hit_rate
        assert a.mean_rtt == b.mean_rtt
        assert np.array_equal(a.episode_rewards, b.episode_rewards)

    def test_csv_outputs(self, tmp_path):
        model = ArmModel()
        pose = forward_kinematics(np.asarray(model.initial_posture), model)
        vel = np.array([0.0, 4.5, -1.0])
        vel = 6.0 * vel / np.linalg.norm(vel)
        env = HysrEnv(Dataset(trajectories=(straight_traj(pose.center, vel),)), model=model)
        report = evaluate_policy(zero_params(env), env, n=5, seed=0, deterministic=True)
        write_eval_csvs(report, tmp_path)
        assert (tmp_path / "landing_points.csv").read_text().splitlines()[0] == "x,y"
        assert (tmp_path / "speeds.csv").read_text().splitlines()[0] == "speed"
        summary = (tmp_path / "summary.csv").read_text().splitlines()
        assert summary[0].startswith("n_episodes,n_hits,n_returns,hit_rate,return_rate")
        assert len(summary) == 2
        values = summary[1].split(",")
        assert int(values[1]) == round(float(values[3]) * int(values[0]))


class TestSpeedHistogram:
    def test_single_sample(self):
        counts, probs, edges = speed_histogram([4.2], bin_width=1.0)
        assert counts.sum() == 1
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert len(counts) == 5
        assert counts[4] == 1

    def test_uniform_at_bin_centers(self):
        speeds = [0.5, 1.5, 2.5, 3.5]
        counts, probs, _ = speed_histogram(speeds, bin_width=1.0)
        assert np.all(counts == 1)
        assert np.allclose(probs, 0.25, atol=1e-15)

    def test_counts_sum_to_n(self):
        rng = np.random.default_rng(5)
        speeds = rng.uniform(0, 14, 137)
        counts, probs, edges = speed_histogram(speeds, bin_width=0.5)
        assert counts.sum() == 137
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert edges[-1] >= speeds.max()

    def test_empty_input(self):
        with pytest.raises(EmptyInputError):
            speed_histogram([], bin_width=1.0)


class TestLearningCurve:
    def test_constant_rewards_zero_std(self):
        rows = learning_curve([(0, [0.5, 0.5, 0.5]), (1, [0.5])])
        assert rows == [(0, 0.5, 0.0), (1, 0.5, 0.0)]

    def test_two_point_std(self):
        rows = learning_curve([(0, [0.0, 1.0])])
        assert rows[0][1] == pytest.approx(0.5)
        assert rows[0][2] == pytest.approx(np.sqrt(0.5), abs=1e-12)

    def test_matches_spreadsheet_recomputation(self):
        rng = np.random.default_rng(6)
        logs = [(u, rng.standard_normal(rng.integers(2, 9)).tolist()) for u in range(10)]
        rows = learning_curve(logs)
        for (u, rewards), (u2, mean, std) in zip(logs, rows):
            assert u == u2
            n = len(rewards)
            m = sum(rewards) / n
            var = sum((r - m) ** 2 for r in rewards) / (n - 1)
            assert mean == pytest.approx(m, abs=1e-12)
            assert std == pytest.approx(var**0.5, abs=1e-12)


class TestToyReach:
    def test_env_shapes(self):
        env = ToyReachEnv()
        assert env.obs_dim == 8 and env.act_dim == 4
        params = zero_params(env)
        rollout = env.rollout(params, substream(0, 2, 0))
        assert len(rollout) == env.steps
        assert np.all(rollout.rewards[:-1] == 0)
        assert rollout.total_reward == -rollout.outcome.min_ball_racket_distance

    def test_static_arm_baseline_distance(self):
        env = ToyReachEnv()
        rollout = env.rollout(zero_params(env), None, deterministic=True)
        start = forward_kinematics(np.asarray(env.model.initial_posture), env.model).center
        assert rollout.total_reward == pytest.approx(-np.linalg.norm(start - env.target), abs=1e-9)

    def test_benchmark_deterministic(self):
        hyper = toy_hyper(total_updates=2)
        logs1 = toy_reach_benchmark(hyper, seed=7)
        logs2 = toy_reach_benchmark(hyper, seed=7)
        assert logs1 == logs2
        assert len(logs1) == 2
