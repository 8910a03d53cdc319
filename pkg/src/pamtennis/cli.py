"""Batch command line: data generation, stats, training, evaluation, replay.

Exit codes: 0 success, 1 usage error, 2 data/config error. Every run that
writes files also writes a run manifest (config digest, seed, version)
next to its primary output.
"""

import argparse
import os
import sys

from . import config as cfgmod
from . import evaluation, hysr, ppo
from .dataset import load_dataset, save_dataset, variability_stats, write_variability_csv
from .launcher import generate_dataset
from .rng import NS_EVAL, NS_EVAL_DATA, substream
from .validation import PamTennisError

USAGE_ERROR = 1
DATA_ERROR = 2


def _load_cfg(path):
    if path is None:
        return cfgmod.Config()
    return cfgmod.load_config(path)


def _build_env(cfg, dataset, task=None):
    model = cfgmod.arm_model(cfg)
    return hysr.HysrEnv(
        dataset,
        model=model,
        table=cfgmod.table_geometry(cfg),
        aero=cfgmod.aero_params(cfg),
        hysr_cfg=cfgmod.hysr_config(cfg),
        reward_cfg=cfgmod.reward_config(cfg, model, task=task),
    )


def _adopt_checkpoint_norm(env, norm):
    """Evaluate with the normalization the policy was trained under."""
    if norm is None:
        return
    if norm.dim != env.obs_dim:
        raise PamTennisError(
            f"checkpoint normalization has {norm.dim} dims, environment expects {env.obs_dim}"
        )
    env.norm = norm


def cmd_gen_data(args) -> int:
    cfg = _load_cfg(args.config)
    data = generate_dataset(
        cfgmod.launcher_config(cfg),
        n=args.n,
        seed=args.seed,
        table=cfgmod.table_geometry(cfg),
        aero=cfgmod.aero_params(cfg),
        meta={"config_digest": cfg.digest(), "seed": args.seed},
    )
    save_dataset(data, args.out)
    cfgmod.write_run_manifest(args.out + ".manifest.json", cfg, args.seed, "gen-data", {"n": args.n})
    print(f"wrote {len(data)} trajectories to {args.out}")
    return 0


def cmd_stats(args) -> int:
    data = load_dataset(args.data)
    report = variability_stats(data, time_bin=args.time_bin, y_bin=args.y_bin)
    write_variability_csv(report, args.out)
    cfgmod.write_run_manifest(args.out + ".manifest.json", cfgmod.Config(), 0, "stats")
    print(
        f"{len(data)} trajectories; first-bounce y std "
        f"{report.bounce_std_y:.3f} m over {report.n_bounces} bounces"
    )
    return 0


def cmd_train(args) -> int:
    cfg = _load_cfg(args.config)
    dataset = load_dataset(args.data)
    hyper = cfgmod.ppo_hyper(cfg, total_timesteps=args.total_timesteps)

    def env_factory():
        return _build_env(cfg, dataset, task=args.task)

    params, logs = ppo.train(env_factory, hyper, args.seed, workers=args.workers)
    env = env_factory()
    ppo.save_checkpoint(args.out, params, norm=env.norm, config_digest=cfg.digest())
    if args.log:
        ppo.write_learning_log(logs, args.log)
    cfgmod.write_run_manifest(
        args.out + ".manifest.json", cfg, args.seed, "train", {"task": args.task, "data": args.data}
    )
    final = logs[-1]
    print(
        f"trained {final['timesteps']} steps over {len(logs)} updates; "
        f"final mean reward {final['mean_rtt']:.3f}, hit rate {final['hit_rate']:.2f}"
    )
    return 0


def cmd_eval(args) -> int:
    cfg = _load_cfg(args.config)
    params, ckpt_norm, _ = ppo.load_checkpoint(args.ckpt)
    eval_data = generate_dataset(
        cfgmod.launcher_config(cfg),
        n=args.n,
        seed=int(substream(args.seed, NS_EVAL_DATA, 0).integers(2**31)),
        table=cfgmod.table_geometry(cfg),
        aero=cfgmod.aero_params(cfg),
    )
    env = _build_env(cfg, eval_data, task=args.task)
    _adopt_checkpoint_norm(env, ckpt_norm)
    report = evaluation.evaluate_policy(
        params, env, n=args.n, seed=args.seed, deterministic=args.deterministic
    )
    os.makedirs(args.out, exist_ok=True)
    evaluation.write_eval_csvs(report, args.out)
    cfgmod.write_run_manifest(
        os.path.join(args.out, "run_manifest.json"), cfg, args.seed, "eval", {"ckpt": args.ckpt}
    )
    print(
        f"{report.n_episodes} episodes: hit rate {report.hit_rate:.3f}, "
        f"return rate {report.return_rate:.3f}, mean reward {report.mean_rtt:.3f}"
    )
    return 0


def cmd_replay(args) -> int:
    cfg = _load_cfg(args.config)
    params, ckpt_norm, _ = ppo.load_checkpoint(args.ckpt)
    dataset = load_dataset(args.data)
    by_id = {t.id: t for t in dataset.trajectories}
    if args.traj not in by_id:
        raise PamTennisError(f"trajectory id {args.traj} not in {args.data}")
    env = _build_env(cfg, dataset)
    _adopt_checkpoint_norm(env, ckpt_norm)
    rollout = env.run_on(
        params,
        by_id[args.traj],
        substream(args.seed, NS_EVAL, args.traj),
        deterministic=args.deterministic,
    )
    hysr.write_rollout_csv(rollout, args.out, dt=env.hysr_cfg.dt)
    cfgmod.write_run_manifest(args.out + ".manifest.json", cfg, args.seed, "replay")
    print(
        f"episode on trajectory {args.traj}: {len(rollout)} steps, "
        f"hit={rollout.outcome.hit}, reward {rollout.total_reward:.3f}"
    )
    return 0


def cmd_bench_toy(args) -> int:
    hyper = evaluation.toy_hyper(total_updates=args.updates)
    logs = evaluation.toy_reach_benchmark(hyper, seed=args.seed)
    if args.out:
        ppo.write_learning_log(logs, args.out)
        cfgmod.write_run_manifest(args.out + ".manifest.json", cfgmod.Config(), args.seed, "bench-toy")
    first, last = logs[0], logs[-1]
    print(
        f"toy reach: update 0 mean reward {first['mean_rtt']:.3f}, "
        f"update {last['update']} mean reward {last['mean_rtt']:.3f}, "
        f"improvement {last['mean_rtt'] - first['mean_rtt']:.3f}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pamtennis", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic recorded-ball dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("stats", help="variability statistics of a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--time-bin", type=float, default=0.05)
    p.add_argument("--y-bin", type=float, default=0.1)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a policy on a recorded dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--task", choices=["return", "smash"], default="return")
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--total-timesteps", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on fresh balls")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--task", choices=["return", "smash"], default="return")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay", help="per-step trace of one episode")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--traj", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("bench-toy", help="seeded toy reach benchmark")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--updates", type=int, default=51)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench_toy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else USAGE_ERROR
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return DATA_ERROR
    except PamTennisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


def console_main() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    console_main()
