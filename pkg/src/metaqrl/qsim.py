"""Minimal dense statevector simulator.

Supports exactly the gates the two circuit policies need (H, RY, RZ, a
general three-angle rotation, CNOT) plus Pauli-Z expectation readout.

Conventions, fixed once and used everywhere:

- Qubit 0 is the most significant bit of the basis index, i.e. the top
  wire of a circuit diagram. For ``n`` qubits, basis state ``|b_0 b_1 ...
  b_{n-1}>`` lives at index ``sum(b_q << (n-1-q))``.
- ``RY(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]`` (real-valued).
- ``RZ(t) = diag(e^{-it/2}, e^{+it/2})``.
- The general rotation is ``ROT(a, b, g) = RZ(g) @ RY(b) @ RZ(a)`` with
  ``RZ(a)`` acting first. Global phase is never observable here (only
  ``|amp|^2`` is read out), so phase conventions are cosmetic.

States are immutable from the caller's perspective: every gate application
returns a fresh ``StateVector``. The low-level kernels operate on raw
amplitude buffers and are shared with the policy fast path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_QUBITS = 12

_SQRT2_INV = 1.0 / math.sqrt(2.0)
_H_MATRIX = np.array([[_SQRT2_INV, _SQRT2_INV], [_SQRT2_INV, -_SQRT2_INV]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]], dtype=complex
    )


def rot_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """General rotation RZ(gamma) @ RY(beta) @ RZ(alpha), RZ(alpha) first."""
    return rz_matrix(gamma) @ ry_matrix(beta) @ rz_matrix(alpha)


@dataclass(frozen=True)
class Gate:
    """One circuit operation: a kind tag, qubit indices and angles.

    ``kind`` is one of ``"h"``, ``"ry"``, ``"rz"``, ``"rot"``, ``"cnot"``.
    Single-qubit gates use ``target``; CNOT uses ``control`` and ``target``.
    """

    kind: str
    target: int
    control: int = -1
    params: tuple = ()

    @classmethod
    def h(cls, qubit: int) -> "Gate":
        return cls("h", qubit)

    @classmethod
    def ry(cls, qubit: int, theta: float) -> "Gate":
        return cls("ry", qubit, params=(theta,))

    @classmethod
    def rz(cls, qubit: int, theta: float) -> "Gate":
        return cls("rz", qubit, params=(theta,))

    @classmethod
    def rot(cls, qubit: int, alpha: float, beta: float, gamma: float) -> "Gate":
        return cls("rot", qubit, params=(alpha, beta, gamma))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        if control == target:
            raise ValueError("CNOT control and target must differ")
        return cls("cnot", target, control=control)

    def matrix(self) -> np.ndarray:
        """The gate's unitary: 2x2 for single-qubit kinds, 4x4 for CNOT."""
        if self.kind == "h":
            return _H_MATRIX.copy()
        if self.kind == "ry":
            return ry_matrix(*self.params)
        if self.kind == "rz":
            return rz_matrix(*self.params)
        if self.kind == "rot":
            return rot_matrix(*self.params)
        if self.kind == "cnot":
            return np.array(
                [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                dtype=complex,
            )
        raise ValueError(f"unknown gate kind {self.kind!r}")


@dataclass
class StateVector:
    """Dense complex amplitudes over ``2**n_qubits`` basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def init_zero(n_qubits: int) -> StateVector:
    """|0...0> on ``n_qubits`` qubits."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(
            f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}"
        )
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def _check_qubit(n_qubits: int, qubit: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"qubit index {qubit} out of range for {n_qubits} qubits")


def apply_1q_kernel(amps: np.ndarray, n_qubits: int, qubit: int, u: np.ndarray) -> np.ndarray:
    """Apply a 2x2 unitary on one qubit of a flat amplitude buffer.

    The buffer's leading ``2**n_qubits`` factor is the basis index (qubit 0
    most significant); any trailing batch dimension may be folded into the
    flat buffer, which lets the same kernel act column-wise on matrices.
    """
    a = amps.reshape(1 << qubit, 2, -1)
    a0, a1 = a[:, 0, :], a[:, 1, :]
    out = np.empty_like(a)
    out[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    out[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    return out.reshape(amps.shape)


def apply_cnot_kernel(
    amps: np.ndarray, n_qubits: int, control: int, target: int
) -> np.ndarray:
    """Apply CNOT on a flat amplitude buffer (batch-folding as above)."""
    a = amps.reshape([2] * n_qubits + [-1])
    out = a.copy()
    idx: list = [slice(None)] * (n_qubits + 1)
    idx[control] = 1
    # After fixing the control axis, the target axis index shifts down by one.
    t_axis = target if target < control else target - 1
    out[tuple(idx)] = np.flip(a[tuple(idx)], axis=t_axis)
    return out.reshape(amps.shape)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return the new state with ``gate`` applied. Norm is preserved."""
    n = state.n_qubits
    _check_qubit(n, gate.target)
    if gate.kind == "cnot":
        _check_qubit(n, gate.control)
        amps = apply_cnot_kernel(state.amplitudes, n, gate.control, gate.target)
    else:
        amps = apply_1q_kernel(state.amplitudes, n, gate.target, gate.matrix())
    return StateVector(n, amps)


def apply_rot(
    state: StateVector, qubit: int, alpha: float, beta: float, gamma: float
) -> StateVector:
    """Apply ROT(alpha, beta, gamma) = RZ(gamma) @ RY(beta) @ RZ(alpha)."""
    return apply_gate(state, Gate.rot(qubit, alpha, beta, gamma))


def apply_circuit(state: StateVector, gates) -> StateVector:
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def expect_z(state: StateVector, qubit: int) -> float:
    """<Z> on one qubit: sum of |amp|^2 weighted +1 (bit 0) / -1 (bit 1)."""
    _check_qubit(state.n_qubits, qubit)
    p = state.probabilities().reshape(1 << qubit, 2, -1)
    return float(p[:, 0, :].sum() - p[:, 1, :].sum())
