"""Clipped-surrogate policy optimization over episode streams.

The trainer collects whole episodes back-to-back into fixed-size step
batches (episodes may straddle batch boundaries; the carried tail keeps
its recorded log-probs and values, so importance ratios stay exact),
estimates advantages with GAE, and runs several epochs of minibatch
updates with Adam under a linearly decaying learning rate.

Everything is deterministic given the master seed: episode RNG substreams
are keyed by a global episode counter, minibatch shuffles come from a
dedicated trainer stream, and worker processes only precompute episodes
that the serial order would run anyway.
"""

import json
import multiprocessing
import struct
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import nn
from .hysr import NormalizationSpec
from .rng import NS_EPISODE, NS_INIT, substream
from .validation import PamTennisError

CHECKPOINT_MAGIC = b"PTCP"
CHECKPOINT_VERSION = 1


class LengthMismatchError(PamTennisError):
    pass


class NonFiniteLossError(PamTennisError):
    pass


@dataclass(frozen=True)
class PpoHyper:
    """Optimization hyperparameters; defaults follow the training recipe."""

    nsteps: int = 4096
    ent_coef: float = 0.001
    lr_init: float = 1e-3
    vf_coef: float = 0.66023
    max_grad_norm: float = 0.05
    gamma: float = 0.9999
    lam: float = 0.98438
    nminibatches: int = 8
    noptepochs: int = 32
    cliprange: float = 0.4
    total_timesteps: int = 1_500_000
    hidden: int = 512
    log_std_init: float = nn.LOG_STD_INIT

    def __post_init__(self):
        if min(self.nsteps, self.nminibatches, self.noptepochs, self.total_timesteps) <= 0:
            raise PamTennisError("counts must be positive")
        if not 0 < self.cliprange < 1:
            raise PamTennisError("cliprange must be in (0, 1)")
        if self.nsteps % self.nminibatches != 0:
            raise PamTennisError("nsteps must be divisible by nminibatches")
        if self.total_timesteps < self.nsteps:
            raise PamTennisError("total_timesteps must cover at least one batch")

    @property
    def n_updates(self) -> int:
        return self.total_timesteps // self.nsteps

    def lr(self, update_index: int) -> float:
        return self.lr_init * (1.0 - update_index / self.n_updates)


def gae(rewards, values, terminals, gamma: float, lam: float):
    """Generalized advantage estimates over a packed step stream.

    ``values`` must carry one bootstrap entry beyond the rewards; terminal
    flags cut both the TD target and the advantage recursion at episode
    ends. Returns (advantages, returns) with returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    terminals = np.asarray(terminals, dtype=bool)
    n = len(rewards)
    if len(values) != n + 1 or len(terminals) != n:
        raise LengthMismatchError(
            f"expected values of length {n + 1} and terminals of length {n}, "
            f"got {len(values)} and {len(terminals)}"
        )
    advantages = np.zeros(n)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        nonterminal = 0.0 if terminals[t] else 1.0
        delta = rewards[t] + gamma * values[t + 1] * nonterminal - values[t]
        acc = delta + gamma * lam * nonterminal * acc
        advantages[t] = acc
    return advantages, advantages + values[:n]


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    mean = advantages.mean()
    std = advantages.std()
    return (advantages - mean) / (std if std > 1e-12 else 1.0)


@dataclass
class Batch:
    """Exactly nsteps of packed experience plus episode summaries."""

    obs: np.ndarray
    pre_actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    terminals: np.ndarray
    bootstrap_value: float
    episode_rewards: list = field(default_factory=list)
    episode_hits: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rewards)


@dataclass
class UpdateStats:
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    lr: float


def ppo_update(
    params: nn.PolicyParams,
    batch: Batch,
    hyper: PpoHyper,
    update_index: int,
    adam_state: nn.AdamState,
    rng: np.random.Generator,
):
    """One full optimization pass: noptepochs x nminibatches Adam steps."""
    n = len(batch)
    if n != hyper.nsteps:
        raise PamTennisError(f"batch size {n} != nsteps {hyper.nsteps}")
    values_ext = np.append(batch.values, batch.bootstrap_value)
    advantages, returns = gae(batch.rewards, values_ext, batch.terminals, hyper.gamma, hyper.lam)
    advantages = normalize_advantages(advantages)

    lr = hyper.lr(update_index)
    mb_size = n // hyper.nminibatches
    stats_acc = np.zeros(4)
    count = 0
    for epoch in range(hyper.noptepochs):
        perm = rng.permutation(n)
        for mb in range(hyper.nminibatches):
            idx = perm[mb * mb_size : (mb + 1) * mb_size]
            stats, grads = nn.ppo_loss_and_grads(
                params,
                batch.obs[idx],
                batch.pre_actions[idx],
                batch.log_probs[idx],
                advantages[idx],
                returns[idx],
                hyper.cliprange,
                hyper.vf_coef,
                hyper.ent_coef,
            )
            if not np.isfinite(stats.total):
                raise NonFiniteLossError(
                    f"non-finite loss at update {update_index}, epoch {epoch}, minibatch {mb}"
                )
            grads = nn.clip_grads(grads, hyper.max_grad_norm)
            params = nn.adam_step(params, grads, adam_state, lr)
            stats_acc += (stats.policy_loss, stats.value_loss, stats.entropy, stats.clip_fraction)
            count += 1
    mean = stats_acc / count
    return params, UpdateStats(
        policy_loss=float(mean[0]),
        value_loss=float(mean[1]),
        entropy=float(mean[2]),
        clip_fraction=float(mean[3]),
        lr=lr,
    )


# ---------------------------------------------------------------------------
# Episode collection

_WORKER_FACTORY = None
_WORKER_ENV = None


def _worker_run(task):
    """Runs in a forked worker; builds its env once from the inherited factory."""
    global _WORKER_ENV
    if _WORKER_ENV is None:
        _WORKER_ENV = _WORKER_FACTORY()
    arrays, act_scale, episode_index, seed = task
    params = nn.PolicyParams(act_scale=act_scale, **arrays)
    rollout = _WORKER_ENV.rollout(params, substream(seed, NS_EPISODE, episode_index))
    return rollout


class RolloutCollector:
    """Streams episodes into fixed-size batches.

    Episode ``k`` always runs under substream (seed, episode, k) with the
    parameters current when it starts, so batches are identical no matter
    how many worker processes precompute them; workers only ever compute
    episodes the serial schedule would run next, and speculative results
    beyond the batch cut are discarded and recomputed under fresh
    parameters.
    """

    def __init__(self, env_factory, seed: int, workers: int = 1):
        self.env = env_factory()
        self.seed = seed
        self.workers = workers
        self.episode_index = 0
        self._chunks: list = []
        self._buffered = 0
        self._pool = None
        if workers > 1:
            global _WORKER_FACTORY
            _WORKER_FACTORY = env_factory
            ctx = multiprocessing.get_context("fork")
            self._pool = ctx.Pool(processes=workers)

    def close(self):
        if self._pool is not None:
            self._pool.terminate()
            self._pool.join()
            self._pool = None

    def _push(self, rollout):
        self._chunks.append(rollout)
        self._buffered += len(rollout)

    def _run_serial(self, params):
        rng = substream(self.seed, NS_EPISODE, self.episode_index)
        try:
            rollout = self.env.rollout(params, rng)
        except PamTennisError as exc:
            raise PamTennisError(
                f"episode {self.episode_index} (seed {self.seed}) failed: {exc}"
            ) from exc
        rollout.seed = self.episode_index
        self.episode_index += 1
        self._push(rollout)

    def _run_parallel(self, params, needed):
        tasks = [
            (params.arrays(), params.act_scale, self.episode_index + k, self.seed)
            for k in range(self.workers)
        ]
        results = self._pool.map(_worker_run, tasks)
        for rollout in results:
            if self._buffered < needed:
                rollout.seed = self.episode_index
                self._push(rollout)
                self.episode_index += 1
            else:
                break  # speculative episode: discard, recompute later

    def collect(self, params: nn.PolicyParams, nsteps: int) -> Batch:
        while self._buffered < nsteps:
            if self._pool is None:
                self._run_serial(params)
            else:
                self._run_parallel(params, nsteps)

        fields = {
            "obs": [],
            "pre_actions": [],
            "log_probs": [],
            "values": [],
            "rewards": [],
        }
        terminals = []
        episode_rewards = []
        episode_hits = []
        taken = 0
        bootstrap = 0.0
        while taken < nsteps:
            chunk = self._chunks[0]
            n = len(chunk)
            take = min(n, nsteps - taken)
            fields["obs"].append(chunk.obs[:take])
            fields["pre_actions"].append(chunk.pre_actions[:take])
            fields["log_probs"].append(chunk.log_probs[:take])
            fields["values"].append(chunk.values[:take])
            fields["rewards"].append(chunk.rewards[:take])
            term = np.zeros(take, dtype=bool)
            if take == n:
                term[-1] = True
                episode_rewards.append(chunk.total_reward)
                episode_hits.append(chunk.outcome.hit)
                self._chunks.pop(0)
            else:
                remainder = _slice_rollout(chunk, take)
                bootstrap = float(remainder.values[0])
                self._chunks[0] = remainder
            terminals.append(term)
            taken += take
        self._buffered -= nsteps
        return Batch(
            obs=np.concatenate(fields["obs"]),
            pre_actions=np.concatenate(fields["pre_actions"]),
            log_probs=np.concatenate(fields["log_probs"]),
            values=np.concatenate(fields["values"]),
            rewards=np.concatenate(fields["rewards"]),
            terminals=np.concatenate(terminals),
            bootstrap_value=bootstrap,
            episode_rewards=episode_rewards,
            episode_hits=episode_hits,
        )


def _slice_rollout(rollout, start: int):
    """Tail view of a rollout from ``start`` on (training fields only)."""
    from dataclasses import replace

    return replace(
        rollout,
        obs=rollout.obs[start:],
        actions=rollout.actions[start:],
        pre_actions=rollout.pre_actions[start:],
        log_probs=rollout.log_probs[start:],
        values=rollout.values[start:],
        rewards=rollout.rewards[start:],
    )


# ---------------------------------------------------------------------------
# Training loop


def train(
    env_factory,
    hyper: PpoHyper,
    seed: int,
    callbacks=None,
    workers: int = 1,
    norm: NormalizationSpec | None = None,
):
    """Full training run; returns (params, per-update log rows).

    The per-update log carries the mean/std of the terminal rewards of
    episodes completed within each batch, the hit rate, loss terms, and
    the learning rate.
    """
    collector = RolloutCollector(env_factory, seed, workers=workers)
    try:
        env = collector.env
        init_rng = substream(seed, NS_INIT, 0)
        params = nn.init_params(
            env.obs_dim,
            env.act_dim,
            hyper.hidden,
            init_rng,
            act_scale=env.act_scale,
            log_std_init=hyper.log_std_init,
        )
        update_rng = substream(seed, NS_INIT, 1)
        adam_state = nn.AdamState.for_params(params)
        logs = []
        timesteps = 0
        for update in range(hyper.n_updates):
            batch = collector.collect(params, hyper.nsteps)
            timesteps += hyper.nsteps
            params, stats = ppo_update(params, batch, hyper, update, adam_state, update_rng)
            rewards = np.asarray(batch.episode_rewards)
            row = {
                "update": update,
                "timesteps": timesteps,
                "n_episodes": len(rewards),
                "mean_rtt": float(rewards.mean()) if rewards.size else float("nan"),
                "std_rtt": float(rewards.std(ddof=1)) if rewards.size > 1 else 0.0,
                "hit_rate": float(np.mean(batch.episode_hits)) if rewards.size else float("nan"),
                "policy_loss": stats.policy_loss,
                "value_loss": stats.value_loss,
                "entropy": stats.entropy,
                "clip_fraction": stats.clip_fraction,
                "lr": stats.lr,
            }
            logs.append(row)
            for cb in callbacks or ():
                cb(update, row, params)
        return params, logs
    finally:
        collector.close()


LOG_COLUMNS = (
    "update",
    "timesteps",
    "n_episodes",
    "mean_rtt",
    "std_rtt",
    "hit_rate",
    "policy_loss",
    "value_loss",
    "entropy",
    "clip_fraction",
    "lr",
)


def write_learning_log(logs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(LOG_COLUMNS) + "\n")
        for row in logs:
            fh.write(
                ",".join(
                    str(row[c]) if isinstance(row[c], int) else repr(float(row[c]))
                    for c in LOG_COLUMNS
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(
    path,
    params: nn.PolicyParams,
    norm: NormalizationSpec | None = None,
    config_digest: str | None = None,
) -> None:
    """Versioned binary blob: header JSON with shapes, then raw float64 data."""
    arrays = params.arrays()
    header = {
        "arrays": [
            {"name": name, "shape": list(arr.shape)} for name, arr in arrays.items()
        ],
        "act_scale": params.act_scale,
        "norm": None
        if norm is None
        else {"offset": [float(v) for v in norm.offset], "scale": [float(v) for v in norm.scale]},
        "config_digest": config_digest,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for name, arr in arrays.items():
            fh.write(np.ascontiguousarray(arr, dtype=np.float64).tobytes())


def load_checkpoint(path):
    """Returns (params, norm_or_None, config_digest_or_None)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise PamTennisError(f"{path}: not a checkpoint file")
        version, header_len = struct.unpack("<IQ", fh.read(12))
        if version != CHECKPOINT_VERSION:
            raise PamTennisError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(count * 8), dtype=np.float64).reshape(shape)
            arrays[entry["name"]] = data.copy()
    params = nn.PolicyParams(act_scale=header["act_scale"], **arrays)
    norm = None
    if header.get("norm"):
        norm = NormalizationSpec(
            offset=np.asarray(header["norm"]["offset"]),
            scale=np.asarray(header["norm"]["scale"]),
        )
    return params, norm, header.get("config_digest")


class PPOTrainer(BaseEstimator):
    """Estimator-style front end: configure, ``fit`` an environment factory,
    then ``predict`` actions from observations.

    Hyperparameters mirror PpoHyper; ``fit`` stores the trained parameters
    on ``params_`` and the per-update log on ``log_``.
    """

    def __init__(
        self,
        nsteps: int = 4096,
        ent_coef: float = 0.001,
        lr_init: float = 1e-3,
        vf_coef: float = 0.66023,
        max_grad_norm: float = 0.05,
        gamma: float = 0.9999,
        lam: float = 0.98438,
        nminibatches: int = 8,
        noptepochs: int = 32,
        cliprange: float = 0.4,
        total_timesteps: int = 200_000,
        hidden: int = 512,
        seed: int = 0,
        workers: int = 1,
    ):
        self.nsteps = nsteps
        self.ent_coef = ent_coef
        self.lr_init = lr_init
        self.vf_coef = vf_coef
        self.max_grad_norm = max_grad_norm
        self.gamma = gamma
        self.lam = lam
        self.nminibatches = nminibatches
        self.noptepochs = noptepochs
        self.cliprange = cliprange
        self.total_timesteps = total_timesteps
        self.hidden = hidden
        self.seed = seed
        self.workers = workers

    def hyper(self) -> PpoHyper:
        return PpoHyper(
            nsteps=self.nsteps,
            ent_coef=self.ent_coef,
            lr_init=self.lr_init,
            vf_coef=self.vf_coef,
            max_grad_norm=self.max_grad_norm,
            gamma=self.gamma,
            lam=self.lam,
            nminibatches=self.nminibatches,
            noptepochs=self.noptepochs,
            cliprange=self.cliprange,
            total_timesteps=self.total_timesteps,
            hidden=self.hidden,
        )

    def fit(self, env_factory, callbacks=None):
        self.params_, self.log_ = train(
            env_factory, self.hyper(), self.seed, callbacks=callbacks, workers=self.workers
        )
        return self

    def predict(self, obs, deterministic: bool = True, rng=None):
        if not hasattr(self, "params_"):
            raise PamTennisError("trainer is not fitted; call fit first")
        out = nn.policy_forward(self.params_, np.asarray(obs, dtype=np.float64))
        if deterministic:
            return nn.deterministic_action(out)
        action, _, _ = nn.sample_action(out, self.params_, rng)
        return action
