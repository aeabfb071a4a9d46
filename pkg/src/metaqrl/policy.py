"""Circuit policies: genome layout, forward passes, action selection.

Two policies are defined, one per environment:

- Gridworld (8 qubits): feature_map -> MPS compression -> Hadamard layer
  -> arctan variational encoding -> CNOT ring (0->1, ..., 6->7, 7->0)
  -> one trainable ROT per qubit -> softmax over <Z_0>..<Z_5>. Action
  selection samples from the six probabilities.
- Cart-pole (2 qubits): amplitude encoding -> four repetitions of
  [CNOT(0->1); ROT on qubit 0; ROT on qubit 1] -> scores (<Z_0>, <Z_1>).
  Action selection is greedy argmax, ties toward index 0 (push left).

Genome layouts (fixed so checkpoints are portable):

- gridworld: [all MPS tensors in site order, row-major per tensor] ++
  [qubit-0 (alpha, beta, gamma), ..., qubit-7 (alpha, beta, gamma)];
  length 648 + 24 = 672 at bond dimension 2.
- cart-pole: [layer-0 qubit-0 (alpha, beta, gamma), layer-0 qubit-1, ...,
  layer-3 qubit-1]; length 4*2*3 = 24.

``forward_minigrid`` / ``forward_cartpole`` are the plain pipelines built
gate by gate. ``MiniGridPolicy`` / ``CartPolePolicy`` produce identical
outputs but precompute the genome-dependent circuit unitary once and, for
the gridworld, memoize per-observation results; rollouts revisit the same
few dozen observations, so this is where nearly all runtime goes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import qsim
from .encoders import (
    MpsCompressor,
    SplicedMpsContractor,
    amplitude_encode,
    feature_map,
    mps_compress,
    mps_param_count,
    variational_encode,
)
from .qsim import Gate, apply_1q_kernel, apply_cnot_kernel, rot_matrix

MINIGRID_ENV = "minigrid5x5"
CARTPOLE_ENV = "cartpole"

N_QUBITS_MINIGRID = 8
N_ACTIONS_MINIGRID = 6
N_QUBITS_CARTPOLE = 2
N_LAYERS_CARTPOLE = 4

# CNOT ring of Fig-style chain order: descending 0->1->...->7, then 7->0.
RING_PAIRS = tuple((i, i + 1) for i in range(N_QUBITS_MINIGRID - 1)) + (
    (N_QUBITS_MINIGRID - 1, 0),
)


@dataclass(frozen=True)
class Layout:
    """Which circuit a genome parameterizes, and its MPS bond dimension."""

    env: str
    bond_dim: int = 2

    def __post_init__(self):
        if self.env not in (MINIGRID_ENV, CARTPOLE_ENV):
            raise ValueError(f"unknown layout env {self.env!r}")
        if self.bond_dim < 1:
            raise ValueError("bond_dim must be >= 1")

    @property
    def n_params(self) -> int:
        if self.env == MINIGRID_ENV:
            return mps_param_count(bond_dim=self.bond_dim) + N_QUBITS_MINIGRID * 3
        return N_LAYERS_CARTPOLE * N_QUBITS_CARTPOLE * 3

    @property
    def n_mps_params(self) -> int:
        if self.env == MINIGRID_ENV:
            return mps_param_count(bond_dim=self.bond_dim)
        return 0


MINIGRID_LAYOUT = Layout(MINIGRID_ENV)
CARTPOLE_LAYOUT = Layout(CARTPOLE_ENV)


@dataclass(frozen=True)
class Genome:
    """Flat parameter vector plus the layout that gives it meaning."""

    values: np.ndarray
    layout: Layout

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.layout.n_params,):
            raise ValueError(
                f"layout {self.layout} needs {self.layout.n_params} values, "
                f"got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("genome contains non-finite entries")


def init_genome(layout: Layout, rng_seed: int) -> Genome:
    """Standard-normal entries scaled by 0.01, deterministic per seed."""
    rng = np.random.default_rng(rng_seed)
    return Genome(rng.standard_normal(layout.n_params) * 0.01, layout)


@dataclass(frozen=True)
class ActionDistribution:
    """Either softmax probabilities (gridworld) or raw scores (cart-pole)."""

    probs: np.ndarray | None = None
    scores: np.ndarray | None = None

    def __post_init__(self):
        if (self.probs is None) == (self.scores is None):
            raise ValueError("exactly one of probs/scores must be set")


def select_action(dist: ActionDistribution, rng: np.random.Generator | None = None) -> int:
    """Sample from probs (needs an rng) or take the argmax of scores."""
    if dist.probs is not None:
        p = dist.probs
        if np.any(np.isnan(p)):
            raise ValueError("NaN in action probabilities")
        if rng is None:
            raise ValueError("sampling from probabilities requires an rng")
        # inverse-CDF sampling; clip guards the u == 1.0 - eps edge
        idx = int(np.searchsorted(np.cumsum(p), rng.random()))
        return min(idx, len(p) - 1)
    s = dist.scores
    if np.any(np.isnan(s)):
        raise ValueError("NaN in action scores")
    return int(np.argmax(s))


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


def _z_expectations(probs: np.ndarray, n_qubits: int, k: int) -> np.ndarray:
    """<Z_i> for qubits 0..k-1 from a basis probability vector."""
    out = np.empty(k)
    for i in range(k):
        p = probs.reshape(1 << i, 2, -1)
        out[i] = p[:, 0, :].sum() - p[:, 1, :].sum()
    return out


# ---------------------------------------------------------------------------
# plain gate-by-gate pipelines
# ---------------------------------------------------------------------------


def _require_layout(genome: Genome, env: str) -> None:
    if genome.layout.env != env:
        raise ValueError(
            f"genome has layout {genome.layout.env!r}, expected {env!r}"
        )


def _split_minigrid(genome: Genome):
    n_mps = genome.layout.n_mps_params
    mps_params = genome.values[:n_mps]
    angles = genome.values[n_mps:].reshape(N_QUBITS_MINIGRID, 3)
    return mps_params, angles


def forward_minigrid(genome: Genome, obs: np.ndarray) -> ActionDistribution:
    """Full gridworld pipeline from a 75-feature observation."""
    _require_layout(genome, MINIGRID_ENV)
    mps_params, angles = _split_minigrid(genome)
    compressor = MpsCompressor.from_params(mps_params, bond_dim=genome.layout.bond_dim)
    x = mps_compress(compressor, feature_map(obs))

    state = qsim.init_zero(N_QUBITS_MINIGRID)
    for q in range(N_QUBITS_MINIGRID):
        state = qsim.apply_gate(state, Gate.h(q))
    state = variational_encode(state, x)
    for c, t in RING_PAIRS:
        state = qsim.apply_gate(state, Gate.cnot(c, t))
    for q in range(N_QUBITS_MINIGRID):
        state = qsim.apply_rot(state, q, *angles[q])

    z = np.array([qsim.expect_z(state, q) for q in range(N_ACTIONS_MINIGRID)])
    return ActionDistribution(probs=softmax(z))


def _split_cartpole(genome: Genome) -> np.ndarray:
    return genome.values.reshape(N_LAYERS_CARTPOLE, N_QUBITS_CARTPOLE, 3)


def forward_cartpole(genome: Genome, obs: np.ndarray) -> ActionDistribution:
    """Full cart-pole pipeline from a 4-feature observation."""
    _require_layout(genome, CARTPOLE_ENV)
    angles = _split_cartpole(genome)
    state = amplitude_encode(obs)
    for layer in range(N_LAYERS_CARTPOLE):
        state = qsim.apply_gate(state, Gate.cnot(0, 1))
        state = qsim.apply_rot(state, 0, *angles[layer, 0])
        state = qsim.apply_rot(state, 1, *angles[layer, 1])
    z = _z_expectations(state.probabilities(), 2, 2)
    return ActionDistribution(scores=z)


# ---------------------------------------------------------------------------
# per-genome fast paths used by rollouts
# ---------------------------------------------------------------------------

_RING_SOURCE: np.ndarray | None = None
_HADAMARD_COL = np.full(2, 1.0 / math.sqrt(2.0), dtype=complex)  # H|0>


def _ring_source_indices() -> np.ndarray:
    """The CNOT ring as a basis permutation: out[i] = psi[src[i]].

    CNOTs only permute computational basis states, so the whole ring is a
    single fancy-index lookup. Built once per process by pushing the
    identity matrix through the gate kernels.
    """
    global _RING_SOURCE
    if _RING_SOURCE is None:
        u = np.eye(1 << N_QUBITS_MINIGRID)
        for c, t in RING_PAIRS:
            u = apply_cnot_kernel(u, N_QUBITS_MINIGRID, c, t)
        _RING_SOURCE = np.argmax(u, axis=1)
    return _RING_SOURCE


def _z_sign_matrix(n_qubits: int, k: int) -> np.ndarray:
    """Rows of +-1 such that signs @ probabilities = (<Z_0>..<Z_{k-1}>)."""
    basis = np.arange(1 << n_qubits)
    rows = [
        np.where((basis >> (n_qubits - 1 - i)) & 1, -1.0, 1.0) for i in range(k)
    ]
    return np.array(rows)


_Z_SIGNS_MINIGRID = _z_sign_matrix(N_QUBITS_MINIGRID, N_ACTIONS_MINIGRID)


class MiniGridPolicy:
    """Gridworld forward pass with the genome-fixed circuit precomputed.

    Per genome, the ROT layer's eight 2x2 matrices and the MPS chain's
    prefix/suffix boundaries (against the agent-free background grid) are
    built once. Per observation, the pipeline is: splice the agent cell
    into the MPS contraction, build the encoded product state, permute it
    through the CNOT ring, apply the eight ROTs, and read out the softmax.
    Results are memoized by observation bytes; one episode batch touches
    at most the 36 reachable (position, direction) combinations.

    ``base_obs`` enables the splice shortcut for observations that differ
    from it in exactly one cell (as environment observations do); anything
    else falls back to the full 75-site contraction.
    """

    def __init__(self, genome: Genome, base_obs: np.ndarray | None = None):
        _require_layout(genome, MINIGRID_ENV)
        mps_params, angles = _split_minigrid(genome)
        self._compressor = MpsCompressor.from_params(
            mps_params, bond_dim=genome.layout.bond_dim
        )
        self._rot_mats = [rot_matrix(*angles[q]) for q in range(N_QUBITS_MINIGRID)]
        self._ring_src = _ring_source_indices()
        self._base_obs = None
        self._splicer = None
        if base_obs is not None:
            self._base_obs = np.asarray(base_obs, dtype=float)
            self._splicer = SplicedMpsContractor(
                self._compressor, feature_map(self._base_obs)
            )
        self._cache: dict = {}

    def _mps_output(self, obs: np.ndarray) -> np.ndarray:
        if self._splicer is not None:
            changed = np.flatnonzero(obs != self._base_obs)
            if changed.size == 0:
                return self._splicer.compress_base()
            cell = changed[0] // 3
            if changed[-1] // 3 == cell:
                start = cell * 3
                return self._splicer.compress_block(
                    start, feature_map(obs[start : start + 3])
                )
        return mps_compress(self._compressor, feature_map(obs))

    def _probs_and_cdf(self, obs: np.ndarray):
        key = obs.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        x = self._mps_output(obs)
        psi = np.ones(1, dtype=complex)
        for xi in x:
            u2 = qsim.rz_matrix(math.atan(xi * xi)) @ qsim.ry_matrix(math.atan(xi))
            vec = u2 @ _HADAMARD_COL
            psi = (psi[:, None] * vec).reshape(-1)
        psi = psi[self._ring_src]
        for q in range(N_QUBITS_MINIGRID):
            psi = apply_1q_kernel(psi, N_QUBITS_MINIGRID, q, self._rot_mats[q])
        p = psi.real**2 + psi.imag**2
        probs = softmax(_Z_SIGNS_MINIGRID @ p)
        entry = (probs, np.cumsum(probs))
        self._cache[key] = entry
        return entry

    def action_probs(self, obs: np.ndarray) -> np.ndarray:
        return self._probs_and_cdf(obs)[0]

    def act(self, obs: np.ndarray, rng: np.random.Generator) -> int:
        """Sample an action; draw-for-draw identical to select_action."""
        cdf = self._probs_and_cdf(obs)[1]
        idx = int(np.searchsorted(cdf, rng.random()))
        return min(idx, N_ACTIONS_MINIGRID - 1)

    def distribution(self, obs: np.ndarray) -> ActionDistribution:
        return ActionDistribution(probs=self.action_probs(obs))


class CartPolePolicy:
    """Cart-pole forward pass with the 4x4 circuit unitary precomputed."""

    def __init__(self, genome: Genome):
        _require_layout(genome, CARTPOLE_ENV)
        angles = _split_cartpole(genome)
        eye2 = np.eye(2, dtype=complex)
        cnot = Gate.cnot(0, 1).matrix()
        u = np.eye(4, dtype=complex)
        for layer in range(N_LAYERS_CARTPOLE):
            u = cnot @ u
            u = np.kron(rot_matrix(*angles[layer, 0]), eye2) @ u
            u = np.kron(eye2, rot_matrix(*angles[layer, 1])) @ u
        self._unitary = u

    def scores(self, obs: np.ndarray) -> np.ndarray:
        psi = self._unitary @ amplitude_encode(obs).amplitudes
        p = np.abs(psi) ** 2
        return np.array([p[0] + p[1] - p[2] - p[3], p[0] - p[1] + p[2] - p[3]])

    def act(self, obs: np.ndarray, rng: np.random.Generator) -> int:
        """Greedy action on the score pair; ties resolve to action 0."""
        s = self.scores(obs)
        return int(np.argmax(s))

    def distribution(self, obs: np.ndarray) -> ActionDistribution:
        return ActionDistribution(scores=self.scores(obs))


def make_policy(genome: Genome, base_obs: np.ndarray | None = None):
    if genome.layout.env == MINIGRID_ENV:
        return MiniGridPolicy(genome, base_obs=base_obs)
    return CartPolePolicy(genome)


# ---------------------------------------------------------------------------
# genome checkpoints
# ---------------------------------------------------------------------------


def save_genome(genome: Genome, path) -> None:
    """Write an npz checkpoint: JSON header + float64 value array."""
    meta = json.dumps(
        {
            "env": genome.layout.env,
            "bond_dim": genome.layout.bond_dim,
            "length": int(genome.values.size),
        }
    )
    np.savez(path, meta=np.array(meta), values=genome.values)


def load_genome(path) -> Genome:
    """Inverse of :func:`save_genome`; round-trips bit-identically."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        values = np.array(data["values"], dtype=float)
    if meta["length"] != values.size:
        raise ValueError("checkpoint header length does not match data")
    return Genome(values, Layout(meta["env"], bond_dim=meta["bond_dim"]))
