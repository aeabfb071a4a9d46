"""Policy tests: genome layouts, forward passes, action selection, checkpoints.

Covers:
    - layout sizes and genome validation
    - the all-zero gridworld genome giving the exact uniform distribution
    - forward passes vs an independent dense-matrix pipeline oracle
    - precomputed policies vs the plain gate-by-gate pipelines
    - act() vs select_action() stream equality
    - select_action sampling (frozen sequence), argmax ties, NaN handling
    - genome save/load round-trips
"""

import math

import numpy as np
import pytest

from metaqrl.encoders import feature_map, mps_param_count
from metaqrl.envs import MiniGridState, background_obs, encode_minigrid_obs, make_env
from metaqrl.policy import (
    CARTPOLE_LAYOUT,
    MINIGRID_LAYOUT,
    ActionDistribution,
    CartPolePolicy,
    Genome,
    Layout,
    MiniGridPolicy,
    forward_cartpole,
    forward_minigrid,
    init_genome,
    load_genome,
    make_policy,
    save_genome,
    select_action,
    softmax,
)

# =============================================================================
# Independent dense-matrix oracle (no metaqrl.qsim involved)
# =============================================================================

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)
H2 = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def ref_ry(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def ref_rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def ref_rot(a, b, g):
    return ref_rz(g) @ ref_ry(b) @ ref_rz(a)


def embed(n, ops):
    m = np.array([[1.0 + 0j]])
    for q in range(n):
        m = np.kron(m, ops.get(q, I2))
    return m


def cnot_matrix(n, c, t):
    return embed(n, {c: P0}) + embed(n, {c: P1, t: X})


def mps_oracle(tensors, feats, out_site):
    reduced = []
    last = len(tensors) - 1
    for j, t in enumerate(tensors):
        if j == 0:
            reduced.append(np.einsum("p,pr->r", feats[j], t))
        elif j == last:
            reduced.append(np.einsum("lp,p->l", t, feats[j]))
        elif j == out_site:
            reduced.append(np.einsum("lpor,p->lor", t, feats[j]))
        else:
            reduced.append(np.einsum("lpr,p->lr", t, feats[j]))
    acc = reduced[0]
    for j in range(1, len(tensors)):
        acc = np.tensordot(acc, reduced[j], axes=(acc.ndim - 1, 0))
    return acc


def oracle_minigrid_probs(genome, obs):
    """Full 256-dim matrix pipeline, reusing nothing from the package."""
    chi = genome.layout.bond_dim
    n_mps = mps_param_count(bond_dim=chi)
    mps_params, angles = genome.values[:n_mps], genome.values[n_mps:].reshape(8, 3)

    shapes = []
    for j in range(75):
        if j == 0:
            shapes.append((2, chi))
        elif j == 74:
            shapes.append((chi, 2))
        elif j == 38:
            shapes.append((chi, 2, 8, chi))
        else:
            shapes.append((chi, 2, chi))
    tensors, pos = [], 0
    for s in shapes:
        k = int(np.prod(s))
        tensors.append(mps_params[pos : pos + k].reshape(s))
        pos += k
    x = mps_oracle(tensors, feature_map(obs), 38)

    psi = np.zeros(256, dtype=complex)
    psi[0] = 1.0
    for q in range(8):
        psi = embed(8, {q: H2}) @ psi
    for q in range(8):
        u = ref_rz(math.atan(x[q] ** 2)) @ ref_ry(math.atan(x[q]))
        psi = embed(8, {q: u}) @ psi
    for c, t in [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0)]:
        psi = cnot_matrix(8, c, t) @ psi
    for q in range(8):
        psi = embed(8, {q: ref_rot(*angles[q])}) @ psi

    p = np.abs(psi) ** 2
    z = np.empty(6)
    for i in range(6):
        signs = np.where((np.arange(256) >> (7 - i)) & 1, -1.0, 1.0)
        z[i] = signs @ p
    e = np.exp(z - z.max())
    return e / e.sum()


def oracle_cartpole_scores(genome, obs):
    angles = genome.values.reshape(4, 2, 3)
    x = np.asarray(obs, dtype=float)
    norm = np.linalg.norm(x)
    psi = np.full(4, 0.5, dtype=complex) if norm < 1e-12 else (x / norm).astype(complex)
    for layer in range(4):
        psi = cnot_matrix(2, 0, 1) @ psi
        psi = embed(2, {0: ref_rot(*angles[layer, 0])}) @ psi
        psi = embed(2, {1: ref_rot(*angles[layer, 1])}) @ psi
    p = np.abs(psi) ** 2
    return np.array([p[0] + p[1] - p[2] - p[3], p[0] - p[1] + p[2] - p[3]])


def scaled_genome(layout, seed, scale):
    base = init_genome(layout, rng_seed=seed)
    bump = np.random.default_rng(seed + 999).standard_normal(base.values.size) * scale
    return Genome(base.values + bump, layout)


def sample_observations():
    obs = [background_obs()]
    for pos in [(1, 1), (2, 2), (3, 1), (3, 3)]:
        for d in range(4):
            obs.append(encode_minigrid_obs(MiniGridState(pos, d, 0, False)))
    return obs


# =============================================================================
# Layouts and genomes
# =============================================================================


def test_layout_sizes():
    assert MINIGRID_LAYOUT.n_params == 672
    assert MINIGRID_LAYOUT.n_mps_params == 648
    assert CARTPOLE_LAYOUT.n_params == 24
    assert CARTPOLE_LAYOUT.n_mps_params == 0
    assert Layout("minigrid5x5", bond_dim=4).n_params == mps_param_count(bond_dim=4) + 24


def test_layout_rejects_unknown_env():
    with pytest.raises(ValueError):
        Layout("mountaincar")


def test_genome_validates_length_and_finiteness():
    with pytest.raises(ValueError):
        Genome(np.zeros(10), MINIGRID_LAYOUT)
    bad = np.zeros(24)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        Genome(bad, CARTPOLE_LAYOUT)


def test_init_genome_deterministic_and_small():
    a = init_genome(MINIGRID_LAYOUT, rng_seed=42)
    b = init_genome(MINIGRID_LAYOUT, rng_seed=42)
    c = init_genome(MINIGRID_LAYOUT, rng_seed=43)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert np.std(a.values) == pytest.approx(0.01, rel=0.25)


# =============================================================================
# Action selection
# =============================================================================


def test_select_action_frozen_sampling_sequence():
    dist = ActionDistribution(probs=np.array([0.1, 0.2, 0.3, 0.4]))
    rng = np.random.default_rng(2024)
    drawn = [select_action(dist, rng) for _ in range(12)]
    assert drawn == [3, 1, 2, 3, 3, 1, 0, 1, 2, 1, 2, 3]


def test_select_action_scores_argmax_ties_to_zero():
    assert select_action(ActionDistribution(scores=np.array([0.3, 0.7]))) == 1
    assert select_action(ActionDistribution(scores=np.array([0.5, 0.5]))) == 0


def test_select_action_rejects_nan_and_missing_rng():
    with pytest.raises(ValueError):
        select_action(ActionDistribution(scores=np.array([np.nan, 0.1])))
    with pytest.raises(ValueError):
        select_action(ActionDistribution(probs=np.full(6, 1 / 6)))


def test_action_distribution_requires_exactly_one_field():
    with pytest.raises(ValueError):
        ActionDistribution()
    with pytest.raises(ValueError):
        ActionDistribution(probs=np.ones(2) / 2, scores=np.zeros(2))


def test_softmax_handles_large_logits():
    out = softmax(np.array([1000.0, 1000.0, 999.0]))
    assert np.all(np.isfinite(out))
    assert out.sum() == pytest.approx(1.0)


# =============================================================================
# Gridworld forward pass
# =============================================================================


def test_zero_genome_gives_exact_uniform_distribution():
    genome = Genome(np.zeros(672), MINIGRID_LAYOUT)
    obs = background_obs()
    probs = forward_minigrid(genome, obs).probs
    np.testing.assert_allclose(probs, np.full(6, 1 / 6), atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_forward_minigrid_matches_dense_oracle(seed):
    genome = scaled_genome(MINIGRID_LAYOUT, seed, scale=0.4)
    for obs in sample_observations()[:6]:
        got = forward_minigrid(genome, obs).probs
        want = oracle_minigrid_probs(genome, obs)
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_minigrid_policy_matches_plain_pipeline():
    genome = scaled_genome(MINIGRID_LAYOUT, 5, scale=0.4)
    with_base = MiniGridPolicy(genome, base_obs=background_obs())
    without_base = MiniGridPolicy(genome)
    for obs in sample_observations():
        want = forward_minigrid(genome, obs).probs
        np.testing.assert_allclose(with_base.action_probs(obs), want, atol=1e-12)
        np.testing.assert_allclose(without_base.action_probs(obs), want, atol=1e-12)


def test_minigrid_policy_handles_multi_cell_deviations():
    # base-relative splicing must fall back cleanly when two cells differ
    genome = scaled_genome(MINIGRID_LAYOUT, 9, scale=0.4)
    policy = MiniGridPolicy(genome, base_obs=background_obs())
    obs = background_obs().copy()
    obs[6 * 3] = 1.0  # agent in one cell
    obs[12 * 3 + 2] = 2 / 3  # stray edit in another
    want = forward_minigrid(genome, obs).probs
    np.testing.assert_allclose(policy.action_probs(obs), want, atol=1e-12)


def test_minigrid_act_matches_select_action_stream():
    genome = scaled_genome(MINIGRID_LAYOUT, 3, scale=0.3)
    fast = MiniGridPolicy(genome, base_obs=background_obs())
    slow = MiniGridPolicy(genome)
    env = make_env("minigrid5x5")
    rng_a = np.random.default_rng(77)
    rng_b = np.random.default_rng(77)
    obs = env.reset()
    for step in range(300):
        a = fast.act(obs, rng_a)
        b = select_action(slow.distribution(obs), rng_b)
        assert a == b
        obs, _, done = env.step(a)
        if done:
            obs = env.reset()


def test_minigrid_policy_rejects_cartpole_genome():
    with pytest.raises(ValueError):
        MiniGridPolicy(init_genome(CARTPOLE_LAYOUT, 0))


# =============================================================================
# Cart-pole forward pass
# =============================================================================


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_forward_cartpole_matches_dense_oracle(seed):
    genome = scaled_genome(CARTPOLE_LAYOUT, seed, scale=0.8)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        obs = rng.uniform(-1.5, 1.5, size=4)
        got = forward_cartpole(genome, obs).scores
        want = oracle_cartpole_scores(genome, obs)
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_cartpole_policy_matches_plain_pipeline():
    genome = scaled_genome(CARTPOLE_LAYOUT, 4, scale=0.8)
    policy = CartPolePolicy(genome)
    rng = np.random.default_rng(0)
    for _ in range(20):
        obs = rng.uniform(-2, 2, size=4)
        np.testing.assert_allclose(
            policy.scores(obs), forward_cartpole(genome, obs).scores, atol=1e-12
        )


def test_cartpole_act_is_greedy_on_scores():
    genome = scaled_genome(CARTPOLE_LAYOUT, 4, scale=0.8)
    policy = CartPolePolicy(genome)
    rng = np.random.default_rng(1)
    for _ in range(50):
        obs = rng.uniform(-2, 2, size=4)
        assert policy.act(obs, rng) == select_action(policy.distribution(obs))


# =============================================================================
# Dispatch and checkpoints
# =============================================================================


def test_make_policy_dispatches_on_layout():
    assert isinstance(make_policy(init_genome(MINIGRID_LAYOUT, 0)), MiniGridPolicy)
    assert isinstance(make_policy(init_genome(CARTPOLE_LAYOUT, 0)), CartPolePolicy)


def test_genome_checkpoint_round_trip(tmp_path):
    genome = init_genome(MINIGRID_LAYOUT, rng_seed=11)
    path = tmp_path / "best.npz"
    save_genome(genome, path)
    loaded = load_genome(path)
    np.testing.assert_array_equal(loaded.values, genome.values)
    assert loaded.layout == genome.layout


def test_genome_checkpoint_cartpole_round_trip(tmp_path):
    genome = init_genome(CARTPOLE_LAYOUT, rng_seed=12)
    path = tmp_path / "best_cp.npz"
    save_genome(genome, path)
    loaded = load_genome(path)
    np.testing.assert_array_equal(loaded.values, genome.values)
    assert loaded.layout.env == "cartpole"
