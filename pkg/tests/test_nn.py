import numpy as np
import pytest

from pamtennis import nn
from pamtennis.validation import ShapeMismatchError

OBS_DIM, ACT_DIM, HIDDEN = 6, 3, 4


@pytest.fixture
def params():
    rng = np.random.default_rng(0)
    p = nn.init_params(OBS_DIM, ACT_DIM, HIDDEN, rng, act_scale=0.3)
    # randomize heads too so the nets are non-trivial
    arrays = p.arrays()
    rng2 = np.random.default_rng(1)
    for name in ("w2", "b2", "v2", "c2", "b1", "c1"):
        arrays[name] = 0.5 * rng2.standard_normal(arrays[name].shape)
    arrays["log_std"] = rng2.uniform(-1.2, -0.5, ACT_DIM)
    return p.with_arrays(arrays)


class TestForward:
    def test_zero_init_heads(self):
        rng = np.random.default_rng(2)
        p = nn.init_params(OBS_DIM, ACT_DIM, HIDDEN, rng)
        out = nn.policy_forward(p, np.zeros(OBS_DIM))
        assert np.all(out.mean == 0) and np.all(out.pre_mean == 0)
        assert out.value == 0.0
        assert np.allclose(out.std, 0.4)

    def test_mean_bounded_by_act_scale(self, params):
        rng = np.random.default_rng(3)
        for _ in range(50):
            out = nn.policy_forward(params, rng.uniform(-5, 5, OBS_DIM))
            assert np.all(np.abs(out.mean) <= params.act_scale)

    def test_matches_independent_dense_oracle(self, params):
        rng = np.random.default_rng(4)
        obs = rng.uniform(-1, 1, OBS_DIM)
        out = nn.policy_forward(params, obs)

        # element-by-element reimplementation
        h = np.empty(HIDDEN)
        for i in range(HIDDEN):
            acc = params.b1[i]
            for j in range(OBS_DIM):
                acc += params.w1[i, j] * obs[j]
            h[i] = np.tanh(acc)
        mean = np.empty(ACT_DIM)
        for k in range(ACT_DIM):
            acc = params.b2[k]
            for i in range(HIDDEN):
                acc += params.w2[k, i] * h[i]
            mean[k] = acc
        hv = np.empty(HIDDEN)
        for i in range(HIDDEN):
            acc = params.c1[i]
            for j in range(OBS_DIM):
                acc += params.v1[i, j] * obs[j]
            hv[i] = np.tanh(acc)
        value = params.c2[0]
        for i in range(HIDDEN):
            value += params.v2[0, i] * hv[i]

        assert np.allclose(out.pre_mean, mean, atol=1e-12)
        assert np.allclose(out.mean, params.act_scale * np.tanh(mean), atol=1e-12)
        assert out.value == pytest.approx(value, abs=1e-12)

    def test_shape_mismatch(self, params):
        with pytest.raises(ShapeMismatchError):
            nn.policy_forward(params, np.zeros(OBS_DIM + 1))


class TestDistribution:
    def test_log_prob_at_mode_with_unit_std(self):
        rng = np.random.default_rng(5)
        p = nn.init_params(8, 8, 4, rng, act_scale=0.3, log_std_init=0.0)
        pre_mean = np.zeros(8)
        logp = float(nn.action_log_prob(p, pre_mean, pre_mean))
        expected = -(8 / 2) * np.log(2 * np.pi) - 8 * np.log(0.3)
        assert logp == pytest.approx(expected, abs=1e-12)

    def test_sampling_consistent_with_log_prob(self, params):
        out = nn.policy_forward(params, np.zeros(OBS_DIM))
        rng = np.random.default_rng(6)
        action, pre_action, logp = nn.sample_action(out, params, rng)
        assert np.allclose(action, params.act_scale * np.tanh(pre_action), atol=1e-15)
        recomputed = float(nn.action_log_prob(params, pre_action, out.pre_mean))
        assert logp == pytest.approx(recomputed, abs=1e-12)

    def test_deterministic_action_no_rng(self, params):
        out = nn.policy_forward(params, np.ones(OBS_DIM))
        action = nn.deterministic_action(out)
        assert np.allclose(action, params.act_scale * np.tanh(out.pre_mean), atol=1e-15)

    def test_density_integrates_to_one_in_action_space(self):
        # 1-D quadrature over the squashed action: the tanh log-det makes
        # the density integrate to 1 in action coordinates.
        rng = np.random.default_rng(7)
        p = nn.init_params(2, 1, 4, rng, act_scale=0.3, log_std_init=np.log(0.8))
        pre_mean = np.array([0.4])
        scale = p.act_scale
        actions = np.linspace(-scale + 1e-6, scale - 1e-6, 200_001)
        u = np.arctanh(actions / scale)
        dens = np.exp([nn.action_log_prob(p, np.array([ui]), pre_mean) for ui in u])
        integral = np.trapezoid(dens, actions)
        assert integral == pytest.approx(1.0, abs=1e-2)

    def test_entropy_closed_form_matches_monte_carlo(self):
        log_std = np.array([-0.5, 0.2])
        closed = nn.entropy(log_std)
        rng = np.random.default_rng(8)
        sigma = np.exp(log_std)
        draws = rng.standard_normal((200_000, 2)) * sigma
        logp = (
            -0.5 * ((draws / sigma) ** 2).sum(axis=1)
            - log_std.sum()
            - np.log(2 * np.pi)
        )
        assert closed == pytest.approx(-logp.mean(), abs=5e-3)


class TestGradients:
    def make_batch(self, params, n=12):
        rng = np.random.default_rng(9)
        obs = rng.uniform(-1, 1, (n, OBS_DIM))
        pre_actions = rng.uniform(-0.8, 0.8, (n, ACT_DIM))
        mus = np.vstack([nn.policy_forward(params, o).pre_mean for o in obs])
        old_logp = nn.action_log_prob(params, pre_actions, mus) + rng.uniform(-0.2, 0.2, n)
        advantages = rng.standard_normal(n)
        returns = rng.standard_normal(n)
        return obs, pre_actions, old_logp, advantages, returns

    def test_matches_central_differences(self, params):
        batch = self.make_batch(params)

        def loss_of(p):
            stats, _ = nn.ppo_loss_and_grads(p, *batch, clip_range=0.4, vf_coef=0.66023, ent_coef=0.001)
            return stats.total

        _, grads = nn.ppo_loss_and_grads(params, *batch, clip_range=0.4, vf_coef=0.66023, ent_coef=0.001)
        h = 1e-5
        worst = 0.0
        for name in nn.PolicyParams.TRAINABLE:
            array = getattr(params, name)
            grad = grads[name]
            flat = array.reshape(-1)
            numeric = np.zeros_like(flat)
            for i in range(flat.size):
                bumped = array.copy().reshape(-1)
                bumped[i] += h
                plus = loss_of(params.with_arrays({name: bumped.reshape(array.shape)}))
                bumped[i] -= 2 * h
                minus = loss_of(params.with_arrays({name: bumped.reshape(array.shape)}))
                numeric[i] = (plus - minus) / (2 * h)
            denom = max(np.abs(numeric).max(), 1e-8)
            rel = np.abs(grad.reshape(-1) - numeric).max() / denom
            worst = max(worst, rel)
            assert rel < 1e-4, f"{name}: rel err {rel:.2e}"
        assert worst < 1e-4

    def test_clip_grads_bounds_global_norm(self, params):
        batch = self.make_batch(params)
        _, grads = nn.ppo_loss_and_grads(params, *batch, clip_range=0.4, vf_coef=0.66023, ent_coef=0.001)
        clipped = nn.clip_grads(grads, 0.05)
        assert nn.global_norm(clipped) <= 0.05 + 1e-9

    def test_clip_grads_noop_when_small(self):
        grads = {"a": np.array([3e-3, 4e-3])}
        out = nn.clip_grads(grads, 0.05)
        assert out["a"] is grads["a"]


class TestAdam:
    def test_first_step_is_sign_scaled(self):
        rng = np.random.default_rng(10)
        p = nn.init_params(2, 1, 2, rng)
        grads = {name: np.full_like(arr, 0.5) for name, arr in p.arrays().items()}
        state = nn.AdamState.for_params(p)
        updated = nn.adam_step(p, grads, state, lr=1e-3, eps=1e-5)
        # bias-corrected first step: m_hat = g, v_hat = g^2
        expected_delta = -1e-3 * 0.5 / (0.5 + 1e-5)
        for name in p.TRAINABLE:
            if name == "log_std":
                continue
            delta = getattr(updated, name) - getattr(p, name)
            assert np.allclose(delta, expected_delta, atol=1e-12)

    def test_log_std_clamped(self):
        rng = np.random.default_rng(11)
        p = nn.init_params(2, 2, 2, rng, log_std_init=-4.9)
        grads = {name: np.zeros_like(arr) for name, arr in p.arrays().items()}
        grads["log_std"] = np.full(2, 1e6)
        state = nn.AdamState.for_params(p)
        updated = nn.adam_step(p, grads, state, lr=1.0)
        assert np.all(updated.log_std >= nn.LOG_STD_MIN)
