"""Regenerate the fixture CSVs from the primary package.

Every fixture is a genuine output of the trainer/eval pipeline so the
figure suite exercises the real schemas. Requires `pamtennis` installed.

    python3 scripts/make_fixtures.py test/fixtures
"""

import pathlib
import sys

import numpy as np

from pamtennis import nn, ppo
from pamtennis.arm import ArmModel, forward_kinematics
from pamtennis.dataset import Dataset, RecordedTrajectory, variability_stats, write_variability_csv
from pamtennis.evaluation import evaluate_policy, write_eval_csvs
from pamtennis.hysr import HysrEnv, write_rollout_csv
from pamtennis.launcher import LauncherConfig, generate_dataset
from pamtennis.rng import NS_EPISODE, substream


def straight_traj(target, vel, t_flight=0.7, duration=0.9, traj_id=0):
    vel = np.asarray(vel, float)
    start = np.asarray(target, float) - vel * t_flight
    t = np.arange(0.0, duration, 1 / 180)
    pos = start[None, :] + t[:, None] * vel[None, :]
    return RecordedTrajectory(id=traj_id, samples=np.column_stack([t, pos]), sample_rate_hz=180.0)


def intercept_dataset(model, speed, n=6, seed=0, t_flight=0.7):
    pose = forward_kinematics(np.asarray(model.initial_posture), model)
    trajs = []
    rng = np.random.default_rng(seed)
    for i in range(n):
        aim = pose.center + np.concatenate([rng.uniform(-0.01, 0.01, 2), [0.0]])
        vel = np.array([0.0, 4.5, -1.0]) + rng.uniform(-0.1, 0.1, 3)
        vel = speed * vel / np.linalg.norm(vel)
        trajs.append(straight_traj(aim, vel, t_flight=t_flight, traj_id=i))
    return Dataset(trajectories=tuple(trajs))


def main(out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = ArmModel()

    # learning curve: a short real training run on launcher data
    data = generate_dataset(LauncherConfig(), n=20, seed=1)
    hyper = ppo.PpoHyper(nsteps=512, nminibatches=4, noptepochs=2, hidden=32, total_timesteps=6 * 512)
    params, logs = ppo.train(lambda: HysrEnv(data), hyper, seed=7)
    ppo.write_learning_log(logs, out / "learning_curve.csv")

    # landing points and return speeds: evaluation on intercept balls,
    # which the untrained mean policy returns reliably
    env = HysrEnv(intercept_dataset(model, speed=6.0))
    zero = nn.init_params(env.obs_dim, env.act_dim, 16, substream(0, 4, 0), act_scale=env.act_scale)
    report = evaluate_policy(zero, env, n=40, seed=2, deterministic=True)
    write_eval_csvs(report, out)

    # a second speed population from faster incoming balls
    env_fast = HysrEnv(intercept_dataset(model, speed=7.5, seed=1, t_flight=0.5))
    fast = evaluate_policy(zero, env_fast, n=40, seed=3, deterministic=True)
    with open(out / "speeds_smash.csv", "w", encoding="utf-8") as fh:
        fh.write("speed\n")
        for s in fast.speed_samples:
            fh.write(f"{float(s)!r}\n")

    # dataset variability
    write_variability_csv(variability_stats(generate_dataset(LauncherConfig(), n=200, seed=5)), out / "variability.csv")

    # per-step trace of one stochastic episode that ends in a hit. The
    # zero-head policy's actions are pure exploration noise independent of
    # the observations, so replaying the same episode substream reproduces
    # the arm's path exactly; aim the ball through the racket's recorded
    # position at 0.7 s and the noisy episode connects.
    far = straight_traj((1.2, 0.4, 1.5), (0.0, 4.0, -0.3), duration=0.9)
    probe_env = HysrEnv(Dataset(trajectories=(far,)), model=model)
    probe = probe_env.rollout(zero, substream(1, NS_EPISODE, 0))
    k_hit = min(70, len(probe) - 1)
    racket_then = forward_kinematics(probe.q[k_hit], model).center
    vel = np.array([0.0, 4.5, -1.0])
    vel = 6.0 * vel / np.linalg.norm(vel)
    meet = straight_traj(racket_then, vel, t_flight=k_hit * probe_env.hysr_cfg.dt, duration=0.9)
    env_meet = HysrEnv(Dataset(trajectories=(meet,)), model=model)
    rollout = env_meet.rollout(zero, substream(1, NS_EPISODE, 0))
    assert rollout.outcome.hit, "fixture episode must contain a racket contact"
    write_rollout_csv(rollout, out / "replay.csv", dt=env_meet.hysr_cfg.dt)

    for f in sorted(out.iterdir()):
        print(f)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "test/fixtures")
