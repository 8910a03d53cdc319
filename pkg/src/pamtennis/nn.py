"""Gaussian MLP policy and value function with hand-written backprop.

Both networks are one-hidden-layer tanh MLPs. The policy head outputs a
pre-squash action mean; actions are sampled in the pre-squash space from a
diagonal Gaussian with a global learned log-std, then squashed through
tanh and scaled to the actuation bound. Log-densities carry the exact
tanh change-of-variables correction.

Keeping the gradients explicit (rather than using an autodiff framework)
keeps training bitwise reproducible and lets the test suite verify every
parameter block against finite differences.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .validation import ShapeMismatchError

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
LOG_STD_INIT = float(np.log(0.4))

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class PolicyParams:
    """All trainable arrays plus the fixed action squash scale."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    v1: np.ndarray
    c1: np.ndarray
    v2: np.ndarray
    c2: np.ndarray
    log_std: np.ndarray
    act_scale: float = 0.3

    TRAINABLE = ("w1", "b1", "w2", "b2", "v1", "c1", "v2", "c2", "log_std")

    @property
    def obs_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def act_dim(self) -> int:
        return self.w2.shape[0]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    def arrays(self) -> dict:
        return {name: getattr(self, name) for name in self.TRAINABLE}

    def with_arrays(self, arrays: dict) -> "PolicyParams":
        return replace(self, **arrays)


def orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float) -> np.ndarray:
    """Orthogonal init via QR with deterministic sign fix."""
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def init_params(
    obs_dim: int,
    act_dim: int,
    hidden: int,
    rng: np.random.Generator,
    act_scale: float = 0.3,
    log_std_init: float = LOG_STD_INIT,
) -> PolicyParams:
    """Random hidden layers (orthogonal, unit gain), zeroed output heads."""
    return PolicyParams(
        w1=orthogonal(rng, hidden, obs_dim, gain=1.0),
        b1=np.zeros(hidden),
        w2=np.zeros((act_dim, hidden)),
        b2=np.zeros(act_dim),
        v1=orthogonal(rng, hidden, obs_dim, gain=1.0),
        c1=np.zeros(hidden),
        v2=np.zeros((1, hidden)),
        c2=np.zeros(1),
        log_std=np.full(act_dim, float(np.clip(log_std_init, LOG_STD_MIN, LOG_STD_MAX))),
        act_scale=act_scale,
    )


@dataclass(frozen=True)
class PolicyOutput:
    """Squashed mean action, pre-squash mean, std, and state value."""

    mean: np.ndarray
    pre_mean: np.ndarray
    std: np.ndarray
    value: float


def policy_forward(params: PolicyParams, obs: np.ndarray) -> PolicyOutput:
    """Evaluate policy and value nets for one observation."""
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (params.obs_dim,):
        raise ShapeMismatchError(f"obs must have shape ({params.obs_dim},), got {obs.shape}")
    h1 = np.tanh(params.w1 @ obs + params.b1)
    pre_mean = params.w2 @ h1 + params.b2
    hv = np.tanh(params.v1 @ obs + params.c1)
    value = float((params.v2 @ hv + params.c2)[0])
    std = np.exp(params.log_std)
    return PolicyOutput(
        mean=params.act_scale * np.tanh(pre_mean),
        pre_mean=pre_mean,
        std=std,
        value=value,
    )


def _squash_log_det(pre_action: np.ndarray, act_scale: float) -> np.ndarray:
    """log |d squash / d u| summed over action dims, numerically stable.

    log(s * (1 - tanh(u)^2)) = log s + 2*(log 2 - u - softplus(-2u))
    """
    u = pre_action
    per_dim = np.log(act_scale) + 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))
    return per_dim.sum(axis=-1)


def gaussian_log_prob(pre_action: np.ndarray, pre_mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    diff = (pre_action - pre_mean) / np.exp(log_std)
    return -0.5 * (diff**2).sum(axis=-1) - log_std.sum() - pre_action.shape[-1] * _HALF_LOG_2PI


def action_log_prob(params: PolicyParams, pre_action: np.ndarray, pre_mean: np.ndarray) -> np.ndarray:
    """Exact log-density of the squashed action identified by its pre-squash value."""
    return gaussian_log_prob(pre_action, pre_mean, params.log_std) - _squash_log_det(
        pre_action, params.act_scale
    )


def sample_action(out: PolicyOutput, params: PolicyParams, rng: np.random.Generator):
    """Draw a squashed action; returns (action, pre_action, log_prob)."""
    pre_action = out.pre_mean + out.std * rng.standard_normal(out.pre_mean.shape)
    action = params.act_scale * np.tanh(pre_action)
    log_prob = float(action_log_prob(params, pre_action, out.pre_mean))
    return action, pre_action, log_prob


def deterministic_action(out: PolicyOutput) -> np.ndarray:
    """Mean action without touching any RNG."""
    return out.mean.copy()


def entropy(log_std: np.ndarray) -> float:
    """Closed-form entropy of the pre-squash diagonal Gaussian."""
    return float(np.sum(log_std + 0.5 * np.log(2.0 * np.pi * np.e)))


@dataclass
class LossStats:
    policy_loss: float
    value_loss: float
    entropy: float
    total: float
    clip_fraction: float


def ppo_loss_and_grads(
    params: PolicyParams,
    obs: np.ndarray,
    pre_actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    clip_range: float,
    vf_coef: float,
    ent_coef: float,
):
    """Clipped-surrogate loss and gradients for one minibatch.

    Returns (LossStats, grads) with one gradient array per trainable
    parameter. The tanh squash correction depends only on the stored
    pre-squash actions, so it is constant w.r.t. parameters and affects
    ratios through old_log_probs alone.
    """
    batch = obs.shape[0]
    sigma = np.exp(params.log_std)

    z1 = obs @ params.w1.T + params.b1
    h1 = np.tanh(z1)
    mu = h1 @ params.w2.T + params.b2

    zv = obs @ params.v1.T + params.c1
    hv = np.tanh(zv)
    values = (hv @ params.v2.T + params.c2)[:, 0]

    diff = (pre_actions - mu) / sigma
    log_probs = (
        -0.5 * (diff**2).sum(axis=1)
        - params.log_std.sum()
        - params.act_dim * _HALF_LOG_2PI
        - _squash_log_det(pre_actions, params.act_scale)
    )
    ratio = np.exp(log_probs - old_log_probs)
    clipped_ratio = np.clip(ratio, 1.0 - clip_range, 1.0 + clip_range)
    surr1 = ratio * advantages
    surr2 = clipped_ratio * advantages
    policy_loss = -np.minimum(surr1, surr2).mean()

    value_err = values - returns
    value_loss = float((value_err**2).mean())
    ent = entropy(params.log_std)
    total = float(policy_loss + vf_coef * value_loss - ent_coef * ent)

    # d policy_loss / d log_prob: active only where the unclipped branch
    # is selected (ties resolve to unclipped; both branches agree there).
    use_unclipped = surr1 <= surr2
    dlogp = np.where(use_unclipped, -ratio * advantages / batch, 0.0)

    g_mu = dlogp[:, None] * (diff / sigma)
    grad_w2 = g_mu.T @ h1
    grad_b2 = g_mu.sum(axis=0)
    g_h1 = g_mu @ params.w2
    g_z1 = g_h1 * (1.0 - h1**2)
    grad_w1 = g_z1.T @ obs
    grad_b1 = g_z1.sum(axis=0)
    grad_log_std = (dlogp[:, None] * (diff**2 - 1.0)).sum(axis=0) - ent_coef

    dv = (2.0 * vf_coef / batch) * value_err
    grad_v2 = (dv[None, :] @ hv).reshape(params.v2.shape)
    grad_c2 = np.array([dv.sum()])
    g_hv = dv[:, None] * params.v2[0][None, :]
    g_zv = g_hv * (1.0 - hv**2)
    grad_v1 = g_zv.T @ obs
    grad_c1 = g_zv.sum(axis=0)

    grads = {
        "w1": grad_w1,
        "b1": grad_b1,
        "w2": grad_w2,
        "b2": grad_b2,
        "v1": grad_v1,
        "c1": grad_c1,
        "v2": grad_v2,
        "c2": grad_c2,
        "log_std": grad_log_std,
    }
    stats = LossStats(
        policy_loss=float(policy_loss),
        value_loss=value_loss,
        entropy=ent,
        total=total,
        clip_fraction=float(np.mean(np.abs(ratio - 1.0) > clip_range)),
    )
    return stats, grads


def global_norm(grads: dict) -> float:
    return float(np.sqrt(sum(float((g**2).sum()) for g in grads.values())))


def clip_grads(grads: dict, max_norm: float) -> dict:
    norm = global_norm(grads)
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        return {k: g * scale for k, g in grads.items()}
    return grads


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_params(cls, params: PolicyParams) -> "AdamState":
        arrays = params.arrays()
        return cls(
            m={k: np.zeros_like(a) for k, a in arrays.items()},
            v={k: np.zeros_like(a) for k, a in arrays.items()},
            t=0,
        )


def adam_step(
    params: PolicyParams,
    grads: dict,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-5,
) -> PolicyParams:
    """One Adam update over all trainable arrays; clamps log_std after."""
    state.t += 1
    bias1 = 1.0 - beta1**state.t
    bias2 = 1.0 - beta2**state.t
    new = {}
    for name, grad in grads.items():
        array = getattr(params, name)
        state.m[name] = beta1 * state.m[name] + (1.0 - beta1) * grad
        state.v[name] = beta2 * state.v[name] + (1.0 - beta2) * grad**2
        m_hat = state.m[name] / bias1
        v_hat = state.v[name] / bias2
        new[name] = array - lr * m_hat / (np.sqrt(v_hat) + eps)
    if "log_std" in new:
        new["log_std"] = np.clip(new["log_std"], LOG_STD_MIN, LOG_STD_MAX)
    return params.with_arrays(new)
