"""Classical-to-quantum input pipelines.

Three encodings feed the circuit policies:

- ``feature_map``: the d=2 lift v_j -> (1 - v_j, v_j) applied per feature.
- ``mps_compress``: a trainable matrix product state that contracts the 75
  lifted gridworld features down to an 8-vector (one value per qubit).
- ``variational_encode``: turns an 8-vector into RY/RZ angles via arctan
  and applies them to an already-superposed 8-qubit state.
- ``amplitude_encode``: writes a normalized 4-vector directly into the
  amplitudes of a 2-qubit state.

The MPS is a chain of 75 small tensors: boundary tensors of shape
(2, chi) and (chi, 2), interior tensors (chi, 2, chi), and one tensor in
the middle of the chain carrying an extra output leg, shape
(chi, 2, 8, chi). Contraction runs left to right, absorbing one feature
pair per site; the free output leg survives as the result. The tensor
entries are plain trainable parameters and live inside the policy genome.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .qsim import StateVector, apply_1q_kernel, ry_matrix, rz_matrix

logger = logging.getLogger(__name__)

N_SITES = 75
PHYS_DIM = 2
OUT_DIM = 8
OUT_SITE = 38  # center of the 75-site chain


def feature_map(v: np.ndarray) -> np.ndarray:
    """Lift each feature v_j in [0,1] to the pair (1 - v_j, v_j).

    Returns an (N, 2) array. Out-of-range inputs are clamped with a logged
    warning; the environments emit normalized observations, so clamping
    only guards against upstream bugs.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("feature_map expects a nonempty 1-d vector")
    if np.any(v < 0.0) or np.any(v > 1.0):
        logger.warning("feature values outside [0,1]; clamping")
        v = np.clip(v, 0.0, 1.0)
    return np.stack([1.0 - v, v], axis=1)


def mps_param_count(
    n_sites: int = N_SITES, bond_dim: int = 2, out_dim: int = OUT_DIM
) -> int:
    """Number of scalar parameters in the compressor for a given chain.

    Two boundary tensors (2*chi each), one output-leg tensor
    (chi*2*out_dim*chi) and n_sites - 3 plain interior tensors
    (2*chi^2 each). For the default chain (75 sites, chi=2, out 8):
    4 + 4 + 72*8 + 64 = 648.
    """
    chi = bond_dim
    interior = n_sites - 3
    return 2 * (2 * chi) + interior * (2 * chi * chi) + chi * 2 * out_dim * chi


@dataclass(frozen=True)
class MpsCompressor:
    """Immutable MPS chain mapping 75 feature pairs to an 8-vector.

    ``tensors[j]`` is the site-j tensor; shapes are validated at
    construction. Build one with :meth:`from_params` to read the tensors
    out of a flat parameter vector (row-major per tensor, site order).
    """

    bond_dim: int
    tensors: tuple = field(repr=False)
    n_sites: int = N_SITES
    out_dim: int = OUT_DIM
    out_site: int = OUT_SITE
    phys_dim: int = PHYS_DIM

    def __post_init__(self):
        chi, d, m = self.bond_dim, self.phys_dim, self.out_dim
        if not 1 <= self.out_site <= self.n_sites - 2:
            raise ValueError("out_site must be an interior site")
        if len(self.tensors) != self.n_sites:
            raise ValueError(
                f"expected {self.n_sites} tensors, got {len(self.tensors)}"
            )
        for j, t in enumerate(self.tensors):
            if t.shape != self._site_shape(j, chi, d, m):
                raise ValueError(
                    f"site {j} tensor has shape {t.shape}, "
                    f"expected {self._site_shape(j, chi, d, m)}"
                )

    def _site_shape(self, j: int, chi: int, d: int, m: int) -> tuple:
        if j == 0:
            return (d, chi)
        if j == self.n_sites - 1:
            return (chi, d)
        if j == self.out_site:
            return (chi, d, m, chi)
        return (chi, d, chi)

    @property
    def param_count(self) -> int:
        return mps_param_count(self.n_sites, self.bond_dim, self.out_dim)

    @classmethod
    def from_params(
        cls,
        params: np.ndarray,
        bond_dim: int = 2,
        n_sites: int = N_SITES,
        out_dim: int = OUT_DIM,
        out_site: int = OUT_SITE,
    ) -> "MpsCompressor":
        """Slice a flat vector into site tensors (row-major, site order)."""
        params = np.asarray(params, dtype=float)
        expected = mps_param_count(n_sites, bond_dim, out_dim)
        if params.shape != (expected,):
            raise ValueError(
                f"expected {expected} parameters for chi={bond_dim}, "
                f"got shape {params.shape}"
            )
        chi, d = bond_dim, PHYS_DIM
        tensors = []
        pos = 0
        for j in range(n_sites):
            if j == 0:
                shape = (d, chi)
            elif j == n_sites - 1:
                shape = (chi, d)
            elif j == out_site:
                shape = (chi, d, out_dim, chi)
            else:
                shape = (chi, d, chi)
            size = math.prod(shape)
            tensors.append(params[pos : pos + size].reshape(shape))
            pos += size
        return cls(
            bond_dim=bond_dim,
            tensors=tuple(tensors),
            n_sites=n_sites,
            out_dim=out_dim,
            out_site=out_site,
        )


def mps_compress(compressor: MpsCompressor, features: np.ndarray) -> np.ndarray:
    """Contract the feature pairs through the chain; returns the 8-vector.

    Left-to-right sweep: each site tensor is first reduced over its
    physical leg with that site's feature pair, leaving a chi x chi
    transfer matrix (or a chi x out x chi tensor at the output site), then
    absorbed into the running boundary vector.
    """
    features = np.asarray(features, dtype=float)
    if features.shape != (compressor.n_sites, 2):
        raise ValueError(
            f"expected {compressor.n_sites} feature pairs, got {features.shape}"
        )
    last = compressor.n_sites - 1
    # left boundary: (2,) . (2, chi) -> (chi,)
    left = features[0] @ compressor.tensors[0]
    for j in range(1, last):
        t = compressor.tensors[j]
        w0, w1 = features[j]
        if j == compressor.out_site:
            # (chi, 2, out, chi) -> (chi, out, chi), then absorb the boundary
            reduced = w0 * t[:, 0, :, :] + w1 * t[:, 1, :, :]
            left = np.tensordot(left, reduced, axes=(-1, 0))
        else:
            transfer = w0 * t[:, 0, :] + w1 * t[:, 1, :]
            left = left @ transfer
    right = compressor.tensors[last] @ features[last]
    out = left @ right
    if out.shape != (compressor.out_dim,):
        raise ValueError("contraction did not pass through the output site")
    return out


class SplicedMpsContractor:
    """Incremental contraction for inputs that mostly equal a fixed base.

    Precomputes, for a reference feature sequence, the left boundary after
    every site and the right closure from every site. An input that
    differs from the reference only inside one contiguous block of sites
    then costs three site absorptions instead of a 75-site sweep. The
    gridworld observation is exactly this shape: the static grid plus one
    agent cell (three consecutive sites).

    Results match :func:`mps_compress` up to floating-point reassociation
    (well below 1e-12 at genome scale).
    """

    def __init__(self, compressor: MpsCompressor, base_features: np.ndarray):
        base_features = np.asarray(base_features, dtype=float)
        if base_features.shape != (compressor.n_sites, 2):
            raise ValueError("base_features must be one pair per site")
        self.compressor = compressor
        self.base_features = base_features
        n, out = compressor.n_sites, compressor.out_site

        prefix = [None] * n  # prefix[j]: boundary after absorbing sites 0..j
        left = base_features[0] @ compressor.tensors[0]
        prefix[0] = left
        for j in range(1, n - 1):
            left = self._absorb(left, j, base_features[j])
            prefix[j] = left
        self._prefix = prefix

        suffix = [None] * n  # suffix[j]: closure of sites j..n-1
        right = compressor.tensors[n - 1] @ base_features[n - 1]
        suffix[n - 1] = right
        for j in range(n - 2, 0, -1):
            t = compressor.tensors[j]
            w0, w1 = base_features[j]
            if j == out:
                reduced = w0 * t[:, 0, :, :] + w1 * t[:, 1, :, :]
                right = np.tensordot(reduced, right, axes=(2, 0))  # (chi, out)
            else:
                right = (w0 * t[:, 0, :] + w1 * t[:, 1, :]) @ right
            suffix[j] = right
        self._suffix = suffix

    def _absorb(self, boundary: np.ndarray, site: int, pair) -> np.ndarray:
        t = self.compressor.tensors[site]
        w0, w1 = pair
        if site == self.compressor.out_site:
            reduced = w0 * t[:, 0, :, :] + w1 * t[:, 1, :, :]
            return np.tensordot(boundary, reduced, axes=(0, 0))  # -> (out, chi)
        return boundary @ (w0 * t[:, 0, :] + w1 * t[:, 1, :])

    def compress_block(self, start: int, block: np.ndarray) -> np.ndarray:
        """Contract with sites start..start+len(block)-1 replaced by block.

        The block must sit strictly inside the chain (boundary tensors
        excluded); use :func:`mps_compress` for anything else.
        """
        m = len(block)
        if not 1 <= start <= self.compressor.n_sites - 1 - m:
            raise ValueError("block must lie strictly inside the chain")
        left = self._prefix[start - 1]
        for offset in range(m):
            left = self._absorb(left, start + offset, block[offset])
        # exactly one factor carries the output leg; both orientations
        # reduce to a plain matrix-vector product ending in shape (out,)
        return left @ self._suffix[start + m]

    def compress_base(self) -> np.ndarray:
        """Output for the unmodified reference features."""
        return self._prefix[self.compressor.out_site] @ self._suffix[
            self.compressor.out_site + 1
        ]


def variational_encode(state: StateVector, x: np.ndarray) -> StateVector:
    """Write the compressed vector into rotation angles, one qubit each.

    Qubit i receives RY(arctan(x_i)) followed by RZ(arctan(x_i^2)).
    arctan keeps all angles inside (-pi/2, pi/2) regardless of the scale
    of x, so the compressor output is used unnormalized.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (state.n_qubits,):
        raise ValueError(
            f"need one value per qubit: got {x.shape} for {state.n_qubits} qubits"
        )
    amps = state.amplitudes
    for i, xi in enumerate(x):
        u = rz_matrix(math.atan(xi * xi)) @ ry_matrix(math.atan(xi))
        amps = apply_1q_kernel(amps, state.n_qubits, i, u)
    return StateVector(state.n_qubits, amps)


def amplitude_encode(x: np.ndarray) -> StateVector:
    """Normalize a 4-vector into the amplitudes of a 2-qubit state.

    Basis order |00>, |01>, |10>, |11>. A (near-)zero input maps to the
    uniform state so the policy stays defined on degenerate observations.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise ValueError(f"amplitude_encode expects a 4-vector, got {x.shape}")
    norm = np.linalg.norm(x)
    if norm < 1e-12:
        amps = np.full(4, 0.5, dtype=complex)
    else:
        amps = (x / norm).astype(complex)
    return StateVector(2, amps)
