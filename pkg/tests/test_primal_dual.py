import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ckbandit import (
    CKB,
    GPUCB,
    BanditEnv,
    Domain,
    InvalidInputError,
    KernelSpec,
    NoiseSpec,
    default_params,
    generate_synthetic,
    run_doubling,
)
from ckbandit.primal_dual import dual_update, select_action


def dual_telescoping_gap(records, phi, V, epsilon=0.0):
    """rhs - lhs of the telescoped dual inequality; non-negative when it holds."""
    g = np.array([r.g_bar for r in records]) + epsilon
    phis = np.array([r.dual for r in records])
    lhs = np.sum(g * (phi - phis))
    rhs = 0.5 * V * phi**2 + np.sum(g**2) / (2 * V)
    return rhs - lhs


@pytest.fixture(scope="module")
def small_env():
    return generate_synthetic(n_domain=30, p=30, seed=3)


# -- closed-form pieces --------------------------------------------------


def test_default_params_examples():
    assert default_params(1, 1, 1, 100) == pytest.approx((4.0, 2.5))
    assert default_params(2, 1, 0.5, 10)[0] == pytest.approx(16.0)
    for delta in (0, -0.1, 1.5):
        with pytest.raises(InvalidInputError):
            default_params(1, 1, delta, 10)


def test_select_action_examples():
    assert select_action([1, 0], [0, 0], 5) == 0
    assert select_action([1, 1], [1, -1], 1) == 1
    assert select_action([1, 1], [0, 0], 3.7) == 0
    with pytest.raises(InvalidInputError):
        select_action([], [], 0)
    with pytest.raises(InvalidInputError):
        select_action([1, 2], [1], 0)


def test_dual_update_examples():
    assert dual_update(0.5, 0.2, rho=4, V=10) == pytest.approx(0.52)
    assert dual_update(4, 1.0, rho=4, V=10) == 4
    assert dual_update(0, -1.0, rho=4, V=10) == 0
    assert dual_update(0.5, 0.2, rho=4, V=10, epsilon=0.3) == pytest.approx(0.55)


@given(
    st.lists(st.floats(-5, 5), min_size=1, max_size=15),
    st.floats(0, 10),
    st.floats(-100, 100),
    st.data(),
)
def test_select_action_shift_invariant(f, phi, shift, data):
    g = data.draw(st.lists(st.floats(-5, 5), min_size=len(f), max_size=len(f)))
    z = np.asarray(f) - phi * np.asarray(g)
    # a shift can only change the argmax if it merges near-ties through rounding
    if np.sort(z)[-1] - np.sort(z)[-2 if len(z) > 1 else -1] > 1e-9 or len(z) == 1:
        assert select_action(np.asarray(f) + shift, g, phi) == select_action(f, g, phi)


@given(st.floats(0, 4), st.floats(-3, 3), st.floats(0.01, 10), st.floats(0, 0.5))
def test_dual_update_in_box(phi, g, V, eps):
    assert 0.0 <= dual_update(phi, g, 4.0, V, eps) <= 4.0


# -- hand-executed trace -------------------------------------------------


def _reference_trace(f, g, T, B, G, rho, V, lam):
    """Algorithm loop on an identity kernel, written with per-arm closed forms."""
    n = len(f)
    counts = np.zeros(n)
    f_sum = np.zeros(n)
    g_sum = np.zeros(n)
    phi = 0.0
    out = []
    for _ in range(T):
        mean_f = f_sum / (counts + lam)
        mean_g = g_sum / (counts + lam)
        std = np.sqrt(lam / (counts + lam))
        f_bar = np.clip(mean_f + B * std, -B, B)  # R = 0 so beta = B
        g_bar = np.clip(mean_g - G * std, -G, G)
        a = int(np.argmax(f_bar - phi * g_bar))
        out.append((a, phi, f_bar[a], g_bar[a]))
        phi = min(max(phi + g_bar[a] / V, 0.0), rho)
        counts[a] += 1
        f_sum[a] += f[a]
        g_sum[a] += g[a]
    return out


def test_three_round_hand_trace():
    f, g = [0.2, 1.0], [-1.0, 0.8]
    env = BanditEnv(Domain.indices(2), f, g, f_kernel=KernelSpec.from_matrix(np.eye(2)))
    learner = CKB(horizon=3, rho=2.0, V=0.25, noise=1.0, B=3.0, G=2.0)
    records = learner.run(env, seed=0)
    expected = _reference_trace(f, g, 3, 3.0, 2.0, 2.0, 0.25, 1.0)
    # round 1: both estimates constant so the tie goes to index 0
    assert records[0].action == 0 and records[0].dual == 0.0
    for rec, (a, phi, fb, gb) in zip(records, expected):
        assert rec.action == a
        assert rec.dual == pytest.approx(phi, abs=1e-12)
        assert rec.f_bar == pytest.approx(fb, abs=1e-12)
        assert rec.g_bar == pytest.approx(gb, abs=1e-12)
    assert [r.t for r in records] == [1, 2, 3]


def test_longer_trace_matches_reference():
    f, g = [0.2, 1.0, -0.3], [-1.0, 0.8, 0.1]
    env = BanditEnv(Domain.indices(3), f, g, f_kernel=KernelSpec.from_matrix(np.eye(3)))
    records = CKB(horizon=40, rho=3.0, V=0.5, noise=0.7, B=1.5, G=1.2).run(env, seed=1)
    expected = _reference_trace(f, g, 40, 1.5, 1.2, 3.0, 0.5, 0.7)
    assert [r.action for r in records] == [e[0] for e in expected]
    np.testing.assert_allclose([r.dual for r in records], [e[1] for e in expected], atol=1e-10)
    assert any(r.dual > 0 for r in records)


# -- run-level behaviour -------------------------------------------------


def test_zero_horizon(small_env):
    assert CKB(horizon=0).run(small_env, seed=0) == []


def test_same_seed_same_trace(small_env):
    for exploration in ("ucb", "ts", "rand-gauss"):
        a = CKB(horizon=60, exploration=exploration).run(small_env, seed=5)
        b = CKB(horizon=60, exploration=exploration).run(small_env, seed=5)
        assert [r.action for r in a] == [r.action for r in b]
        assert [r.dual for r in a] == [r.dual for r in b]


def test_dual_stays_in_box(small_env):
    for exploration in ("ucb", "ts", "rand-uniform:5"):
        learner = CKB(horizon=200, exploration=exploration, slack="zero-violation")
        records = learner.run(small_env, seed=2)
        rho = learner.config_.rho
        assert all(0.0 <= r.dual <= rho and 0.0 <= r.dual_next <= rho for r in records)


def test_dual_update_uses_truncated_estimate(small_env):
    learner = CKB(horizon=80, slack=0.01)
    records = learner.run(small_env, seed=4)
    cfg = learner.config_
    for rec in records:
        assert rec.dual_next == dual_update(rec.dual, rec.g_bar, cfg.rho, cfg.V, cfg.epsilon)
    assert any(
        dual_update(r.dual, r.cost, cfg.rho, cfg.V, cfg.epsilon) != r.dual_next for r in records
    )


def test_never_binding_matches_gpucb():
    base = generate_synthetic(n_domain=40, p=40, seed=8)
    env = BanditEnv(
        base.domain,
        base.f_values,
        np.full(40, -1.0),
        reward_noise=NoiseSpec("gaussian", 0.1),
        f_kernel=base.f_kernel,
    )
    ckb = CKB(horizon=150).run(env, seed=11)
    ucb = GPUCB(horizon=150).run(env, seed=11)
    assert all(r.dual == 0.0 for r in ckb)
    assert [r.action for r in ckb] == [r.action for r in ucb]


def test_slack_resolution(small_env):
    T = 400
    cfg = CKB(horizon=T, slack="zero-violation").resolve(small_env)
    delta = small_env.slater_margin()
    assert cfg.epsilon == pytest.approx(min(delta / 2, 2 * small_env.G / np.sqrt(T)))
    assert CKB(horizon=T).resolve(small_env).epsilon == 0.0
    with pytest.raises(InvalidInputError):
        CKB(horizon=T, slack=delta).resolve(small_env)
    with pytest.raises(InvalidInputError):
        CKB(horizon=T, slack="lots").resolve(small_env)


def test_rho_override_rescales_v(small_env):
    cfg = CKB(horizon=100, rho=10.0).resolve(small_env)
    assert cfg.V == pytest.approx(small_env.G * 10 / 10.0)


@pytest.mark.parametrize("seed", range(4))
def test_dual_telescoping_inequality(small_env, seed):
    learner = CKB(horizon=150, exploration="ucb")
    records = learner.run(small_env, seed=seed)
    cfg = learner.config_
    for phi in (0.0, cfg.rho):
        assert dual_telescoping_gap(records, phi, cfg.V, cfg.epsilon) >= -1e-6


def test_step_past_horizon(small_env):
    learner = CKB(horizon=1)
    cfg = learner.resolve(small_env)
    state = learner.init_state(small_env, cfg, seed=0)
    learner.step(state, cfg, small_env)
    with pytest.raises(InvalidInputError):
        learner.step(state, cfg, small_env)


def test_keep_estimates(small_env):
    records = CKB(horizon=5, keep_estimates=True).run(small_env, seed=0)
    rec = records[-1]
    assert rec.f_bar_all.shape == (30,)
    assert rec.g_bar_all[rec.action] == rec.g_bar
    assert np.all(np.abs(rec.f_bar_all) <= small_env.B)


def test_doubling_restarts(small_env):
    records = run_doubling(CKB(), small_env, horizon=10, seed=0)
    assert [r.t for r in records] == list(range(1, 11))
    # epochs of length 1, 2, 4, 8 start with a fresh multiplier
    assert [records[i].dual for i in (0, 1, 3, 7)] == [0.0] * 4
    with pytest.raises(InvalidInputError):
        run_doubling(CKB(), small_env, horizon=5, initial=0)


def test_sklearn_params():
    learner = CKB(horizon=10, exploration="ts")
    assert learner.get_params()["exploration"] == "ts"
    assert learner.set_params(horizon=20).horizon == 20
    assert not learner.unanalyzed
