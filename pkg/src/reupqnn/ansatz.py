"""Data re-uploading ansatz: layout, simulation, and dense unitaries.

A circuit interleaves L+1 trainable blocks with L identical encoding
blocks:

    block(1), encode(x), block(2), encode(x), ..., encode(x), block(L+1)

A trainable block is R sublayers, each one Ry(theta) on every qubit
followed by a CX chain (control i, target i+1).  An encoding block is
ceil(D / N) columns of Ry(x) rotations with the D features laid out
row-major over (column, qubit) slots; slots past the last feature are
Ry(0) fillers so every encoding block has the same shape.

The trainable parameter vector has K = (L + 1) * R * N entries ordered by
(layer, sublayer, qubit).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import (
    CapacityError,
    NumericalIntegrityError,
    Observable,
    QuantumState,
    apply_gate,
    embed_gate,
    rotation_gate,
)

__all__ = [
    "CX",
    "ReuploadCircuit",
    "build_circuit",
    "iter_gates",
    "forward",
    "forward_many",
    "trainable_block_unitary",
    "encoding_unitary",
    "circuit_unitary",
]

# CNOT with the control on the more significant qubit.
CX = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)

_MAX_QUBITS = 14
_MAX_UNITARY_QUBITS = 8


@dataclass(frozen=True)
class ReuploadCircuit:
    """Static description of a re-uploading circuit (no angles bound)."""

    n_qubits: int
    layers: int
    data_dim: int
    sublayers: int

    def __post_init__(self):
        if self.n_qubits < 1 or self.layers < 1 or self.data_dim < 1 or self.sublayers < 1:
            raise ValueError(
                "n_qubits, layers, data_dim and sublayers must all be >= 1"
            )
        if self.n_qubits > _MAX_QUBITS:
            raise CapacityError(
                f"{self.n_qubits} qubits exceeds the supported maximum {_MAX_QUBITS}"
            )

    @property
    def n_params(self) -> int:
        """K = (L + 1) * R * N."""
        return (self.layers + 1) * self.sublayers * self.n_qubits

    @property
    def encode_columns(self) -> int:
        """Ry columns per encoding block, ceil(D / N)."""
        return -(-self.data_dim // self.n_qubits)

    def param_index(self, layer: int, sublayer: int, qubit: int) -> int:
        """Flat index of the parameter at (layer, sublayer, qubit).

        ``layer`` runs from 1 to L + 1, ``sublayer`` from 0 to R - 1.
        """
        if not (1 <= layer <= self.layers + 1):
            raise ValueError(f"layer {layer} out of range")
        if not (0 <= sublayer < self.sublayers):
            raise ValueError(f"sublayer {sublayer} out of range")
        if not (0 <= qubit < self.n_qubits):
            raise ValueError(f"qubit {qubit} out of range")
        return ((layer - 1) * self.sublayers + sublayer) * self.n_qubits + qubit

    def param_layout(self) -> list[tuple[int, int, int]]:
        """(layer, sublayer, qubit) for every flat parameter index."""
        return [
            (l, r, q)
            for l in range(1, self.layers + 2)
            for r in range(self.sublayers)
            for q in range(self.n_qubits)
        ]

    def encode_layout(self) -> list[tuple[int, int]]:
        """(column, qubit) slot for every data feature, row-major."""
        return [(d // self.n_qubits, d % self.n_qubits) for d in range(self.data_dim)]

    def layer_slice(self, layer: int) -> slice:
        """Slice of the flat parameter vector belonging to one block."""
        width = self.sublayers * self.n_qubits
        return slice((layer - 1) * width, layer * width)


def build_circuit(n_qubits: int, layers: int, data_dim: int, sublayers: int) -> ReuploadCircuit:
    """Construct the circuit description; see the module docstring for layout."""
    return ReuploadCircuit(n_qubits, layers, data_dim, sublayers)


def _check_theta(circuit: ReuploadCircuit, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise ValueError(
            f"theta has shape {theta.shape}, expected ({circuit.n_params},)"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite entries")
    return theta


def _check_x(circuit: ReuploadCircuit, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (circuit.data_dim,):
        raise ValueError(f"x has shape {x.shape}, expected ({circuit.data_dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite entries")
    return x


def _iter_trainable_gates(circuit: ReuploadCircuit, theta: np.ndarray, layer: int):
    n = circuit.n_qubits
    for r in range(circuit.sublayers):
        for q in range(n):
            yield rotation_gate("y", theta[circuit.param_index(layer, r, q)]), (q,)
        for q in range(n - 1):
            yield CX, (q, q + 1)


def _iter_encode_gates(circuit: ReuploadCircuit, x: np.ndarray):
    n = circuit.n_qubits
    for c in range(circuit.encode_columns):
        for q in range(n):
            d = c * n + q
            angle = x[d] if d < circuit.data_dim else 0.0
            yield rotation_gate("y", angle), (q,)


def iter_gates(circuit: ReuploadCircuit, theta, x):
    """Yield (gate, targets) over the whole circuit in application order."""
    theta = _check_theta(circuit, theta)
    x = _check_x(circuit, x)
    for layer in range(1, circuit.layers + 1):
        yield from _iter_trainable_gates(circuit, theta, layer)
        yield from _iter_encode_gates(circuit, x)
    yield from _iter_trainable_gates(circuit, theta, circuit.layers + 1)


def forward(circuit: ReuploadCircuit, theta, x, obs: Observable) -> float:
    """<0...0| U(theta, x)^dagger M U(theta, x) |0...0> by statevector simulation."""
    if obs.matrix.shape[0] != (1 << circuit.n_qubits):
        raise ValueError("observable dimension does not match the circuit")
    state = QuantumState.zero(circuit.n_qubits)
    for gate, targets in iter_gates(circuit, theta, x):
        state = apply_gate(state, gate, targets)
    value = np.vdot(state.data, obs.matrix @ state.data)
    if abs(value.imag) > 1e-8:
        raise NumericalIntegrityError(
            f"expectation has imaginary residue {value.imag!r} above 1e-8"
        )
    return float(value.real)


# --- batched engine -------------------------------------------------------
#
# The training loop evaluates many (theta, x) rows against the same circuit
# (all parameter-shift offsets of one step, or a whole dataset); doing so
# row-parallel inside numpy is the difference between seconds and hours.
# The math is identical to `forward`; a consistency test pins the two paths
# against each other.


def _apply_ry_rows(states: np.ndarray, n: int, qubit: int, angles: np.ndarray) -> None:
    half = 0.5 * angles
    c = np.cos(half)[:, None, None]
    s = np.sin(half)[:, None, None]
    view = states.reshape(states.shape[0], 1 << qubit, 2, -1)
    a = view[:, :, 0, :]
    b = view[:, :, 1, :]
    new_a = c * a - s * b
    new_b = s * a + c * b
    view[:, :, 0, :] = new_a
    view[:, :, 1, :] = new_b


def _apply_cx_rows(states: np.ndarray, n: int, control: int, target: int) -> None:
    # control < target by construction of the chain; pure index permutation.
    mid = 1 << (target - control - 1)
    view = states.reshape(
        states.shape[0], 1 << control, 2, mid, 2, -1
    )
    tmp = view[:, :, 1, :, 0, :].copy()
    view[:, :, 1, :, 0, :] = view[:, :, 1, :, 1, :]
    view[:, :, 1, :, 1, :] = tmp


def _simulate_rows(circuit: ReuploadCircuit, thetas: np.ndarray, xs: np.ndarray) -> np.ndarray:
    n = circuit.n_qubits
    rows = thetas.shape[0]
    states = np.zeros((rows, 1 << n), dtype=complex)
    states[:, 0] = 1.0

    def trainable_block(layer: int) -> None:
        for r in range(circuit.sublayers):
            base = ((layer - 1) * circuit.sublayers + r) * n
            for q in range(n):
                _apply_ry_rows(states, n, q, thetas[:, base + q])
            for q in range(n - 1):
                _apply_cx_rows(states, n, q, q + 1)

    def encode_block() -> None:
        for c in range(circuit.encode_columns):
            for q in range(n):
                d = c * n + q
                if d < circuit.data_dim:
                    _apply_ry_rows(states, n, q, xs[:, d])
                # Ry(0) filler slots are exact no-ops here.

    for layer in range(1, circuit.layers + 1):
        trainable_block(layer)
        encode_block()
    trainable_block(circuit.layers + 1)
    return states


def forward_many(circuit: ReuploadCircuit, thetas, xs, obs: Observable) -> np.ndarray:
    """Vectorized `forward` over rows of (theta, x) pairs.

    ``thetas`` is (rows, K) or (K,) broadcast to all rows; ``xs`` is
    (rows, D) or (D,).  Returns the (rows,) vector of expectations.
    """
    thetas = np.asarray(thetas, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas[None, :]
    if xs.ndim == 1:
        xs = xs[None, :]
    if thetas.shape[0] == 1 and xs.shape[0] > 1:
        thetas = np.broadcast_to(thetas, (xs.shape[0], thetas.shape[1]))
    if xs.shape[0] == 1 and thetas.shape[0] > 1:
        xs = np.broadcast_to(xs, (thetas.shape[0], xs.shape[1]))
    if thetas.shape[0] != xs.shape[0]:
        raise ValueError("thetas and xs row counts do not match")
    if thetas.shape[1] != circuit.n_params:
        raise ValueError(
            f"thetas have {thetas.shape[1]} columns, expected {circuit.n_params}"
        )
    if xs.shape[1] != circuit.data_dim:
        raise ValueError(f"xs have {xs.shape[1]} columns, expected {circuit.data_dim}")
    if not (np.all(np.isfinite(thetas)) and np.all(np.isfinite(xs))):
        raise ValueError("thetas or xs contain non-finite entries")
    if obs.matrix.shape[0] != (1 << circuit.n_qubits):
        raise ValueError("observable dimension does not match the circuit")
    states = _simulate_rows(circuit, np.ascontiguousarray(thetas), np.ascontiguousarray(xs))
    values = np.einsum("bi,ij,bj->b", states.conj(), obs.matrix, states)
    residue = np.max(np.abs(values.imag)) if values.size else 0.0
    if residue > 1e-8:
        raise NumericalIntegrityError(
            f"expectation has imaginary residue {residue!r} above 1e-8"
        )
    return values.real.copy()


# --- dense unitaries ------------------------------------------------------


def _require_unitary_scale(circuit: ReuploadCircuit) -> None:
    if circuit.n_qubits > _MAX_UNITARY_QUBITS:
        raise CapacityError(
            f"dense unitaries are limited to {_MAX_UNITARY_QUBITS} qubits, "
            f"got {circuit.n_qubits}"
        )


def trainable_block_unitary(circuit: ReuploadCircuit, theta, layer: int) -> np.ndarray:
    """Dense unitary of trainable block ``layer`` (1-based, up to L + 1)."""
    _require_unitary_scale(circuit)
    theta = _check_theta(circuit, theta)
    if not (1 <= layer <= circuit.layers + 1):
        raise ValueError(f"layer {layer} out of range")
    n = circuit.n_qubits
    u = np.eye(1 << n, dtype=complex)
    for gate, targets in _iter_trainable_gates(circuit, theta, layer):
        u = embed_gate(gate, targets, n) @ u
    return u


def encoding_unitary(circuit: ReuploadCircuit, x) -> np.ndarray:
    """Dense unitary of one encoding block for the feature vector ``x``."""
    _require_unitary_scale(circuit)
    x = _check_x(circuit, x)
    n = circuit.n_qubits
    u = np.eye(1 << n, dtype=complex)
    for gate, targets in _iter_encode_gates(circuit, x):
        u = embed_gate(gate, targets, n) @ u
    return u


def circuit_unitary(circuit: ReuploadCircuit, theta, x) -> np.ndarray:
    """Dense unitary of the whole circuit, final block leftmost."""
    _require_unitary_scale(circuit)
    theta = _check_theta(circuit, theta)
    x = _check_x(circuit, x)
    enc = encoding_unitary(circuit, x)
    u = np.eye(1 << circuit.n_qubits, dtype=complex)
    for layer in range(1, circuit.layers + 1):
        u = trainable_block_unitary(circuit, theta, layer) @ u
        u = enc @ u
    return trainable_block_unitary(circuit, theta, circuit.layers + 1) @ u
