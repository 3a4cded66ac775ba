"""Dense quantum state and operator primitives.

Everything downstream (circuit simulation, Choi-operator algebra, noise
channels) is built on the small set of utilities in this module:

* Pauli matrices and single-qubit rotation gates exp(-i * angle * P / 2).
* Kronecker composition with the big-endian qubit convention: qubit 0 is
  the most significant bit of the basis index, so ``kron(A, B)`` acts with
  A on qubit 0.
* Pure-state and density-matrix containers with validity checks.
* Gate application on arbitrary target qubits, expectation values, and a
  power-iteration spectral norm.

All arrays are numpy ``complex128``; sizes stay at desk scale (a handful
of qubits), so the implementations favor clarity over asymptotics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CapacityError",
    "NumericalIntegrityError",
    "I2",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "rotation_gate",
    "kron",
    "kron_all",
    "embed_gate",
    "QuantumState",
    "apply_gate",
    "Observable",
    "z_observable",
    "expectation",
    "spectral_norm",
]


class CapacityError(Exception):
    """Requested object exceeds the supported desk-scale dimensions."""


class NumericalIntegrityError(Exception):
    """A numerical invariant (residue, convergence, trace) was violated."""


I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

_PAULI_BY_AXIS = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}

# Largest admissible matrix dimension for kron results; beyond this the
# dense representation stops being desk scale.
_MAX_KRON_DIM = 1 << 13

_UNITARY_ATOL = 1e-10
_STATE_NORM_ATOL = 1e-12
_DENSITY_EIG_FLOOR = -1e-10
_RESIDUE_ATOL = 1e-8


def rotation_gate(axis: str, angle: float) -> np.ndarray:
    """Single-qubit rotation exp(-i * angle * P_axis / 2) as a 2x2 matrix.

    Args:
        axis: one of ``"x"``, ``"y"``, ``"z"``.
        angle: rotation angle in radians; must be finite.
    """
    if axis not in _PAULI_BY_AXIS:
        raise ValueError(f"unknown rotation axis {axis!r}; expected 'x', 'y' or 'z'")
    if not np.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle!r}")
    pauli = _PAULI_BY_AXIS[axis]
    half = 0.5 * angle
    return np.cos(half) * I2 - 1.0j * np.sin(half) * pauli


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with a acting on the more significant subsystem."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("kron expects 2-d operands")
    if min(a.shape + b.shape) == 0:
        raise ValueError("kron operands must be non-empty")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows > _MAX_KRON_DIM or cols > _MAX_KRON_DIM:
        raise CapacityError(
            f"kron result {rows}x{cols} exceeds the supported maximum "
            f"dimension {_MAX_KRON_DIM}"
        )
    return np.kron(a, b)


def kron_all(factors) -> np.ndarray:
    """Left-to-right kron of a non-empty sequence (index 0 most significant)."""
    factors = list(factors)
    if not factors:
        raise ValueError("kron_all needs at least one factor")
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = kron(out, f)
    return out


def _require_unitary(gate: np.ndarray) -> None:
    dim = gate.shape[0]
    residual = gate @ gate.conj().T - np.eye(dim)
    if np.max(np.abs(residual)) > _UNITARY_ATOL:
        raise ValueError("gate is not unitary within 1e-10")


def embed_gate(gate: np.ndarray, targets: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Dense 2^n x 2^n matrix acting with ``gate`` on ``targets``.

    The first target qubit lines up with the most significant axis of the
    gate.  Targets may appear in any order and need not be adjacent.
    """
    targets = tuple(int(t) for t in targets)
    _check_targets(gate, targets, n_qubits)
    rest = [q for q in range(n_qubits) if q not in targets]
    full = kron(np.asarray(gate, dtype=complex), np.eye(1 << len(rest), dtype=complex))
    order = list(targets) + rest  # qubit owning each axis of `full`
    perm = [order.index(q) for q in range(n_qubits)]
    tensor = full.reshape((2,) * (2 * n_qubits))
    tensor = tensor.transpose(perm + [n_qubits + p for p in perm])
    dim = 1 << n_qubits
    return np.ascontiguousarray(tensor.reshape(dim, dim))


def _check_targets(gate: np.ndarray, targets: tuple[int, ...], n_qubits: int) -> None:
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits {targets}")
    if any(t < 0 or t >= n_qubits for t in targets):
        raise ValueError(f"targets {targets} out of range for {n_qubits} qubits")
    k = len(targets)
    if gate.shape != (1 << k, 1 << k):
        raise ValueError(
            f"gate shape {gate.shape} does not match {k} target qubit(s)"
        )


@dataclass(frozen=True)
class QuantumState:
    """A pure statevector or a density matrix on ``n_qubits`` qubits.

    Invariants are checked at construction: unit norm for pure states;
    Hermiticity, unit trace and an eigenvalue floor of -1e-10 for density
    matrices.
    """

    data: np.ndarray
    kind: str  # "pure" | "density"
    n_qubits: int = field(init=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "data", data)
        if self.kind == "pure":
            if data.ndim != 1:
                raise ValueError("pure state must be a 1-d vector")
            n = _qubit_count(data.shape[0])
            norm = np.linalg.norm(data)
            if abs(norm - 1.0) > _STATE_NORM_ATOL:
                raise NumericalIntegrityError(
                    f"statevector norm {norm!r} deviates from 1 beyond 1e-12"
                )
        elif self.kind == "density":
            if data.ndim != 2 or data.shape[0] != data.shape[1]:
                raise ValueError("density matrix must be square")
            n = _qubit_count(data.shape[0])
            if np.max(np.abs(data - data.conj().T)) > _UNITARY_ATOL:
                raise NumericalIntegrityError("density matrix is not Hermitian")
            trace = np.trace(data)
            if abs(trace - 1.0) > _STATE_NORM_ATOL:
                raise NumericalIntegrityError(
                    f"density trace {trace!r} deviates from 1 beyond 1e-12"
                )
            if np.min(np.linalg.eigvalsh(data)) < _DENSITY_EIG_FLOOR:
                raise NumericalIntegrityError(
                    "density matrix has an eigenvalue below -1e-10"
                )
        else:
            raise ValueError(f"unknown state kind {self.kind!r}")
        object.__setattr__(self, "n_qubits", n)

    @classmethod
    def zero(cls, n_qubits: int) -> "QuantumState":
        """|0...0> on ``n_qubits`` qubits."""
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        vec = np.zeros(1 << n_qubits, dtype=complex)
        vec[0] = 1.0
        return cls(vec, "pure")

    @classmethod
    def zero_density(cls, n_qubits: int) -> "QuantumState":
        """|0...0><0...0| on ``n_qubits`` qubits."""
        dim = 1 << n_qubits
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        mat = np.zeros((dim, dim), dtype=complex)
        mat[0, 0] = 1.0
        return cls(mat, "density")

    def to_density(self) -> "QuantumState":
        if self.kind == "density":
            return self
        vec = self.data
        return QuantumState(np.outer(vec, vec.conj()), "density")


def _qubit_count(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def apply_gate(state: QuantumState, gate: np.ndarray, targets) -> QuantumState:
    """Apply a unitary ``gate`` to ``targets`` of ``state``.

    Pure states transform as U|psi>, density matrices as U rho U^dagger.
    The gate must be unitary within 1e-10 and its dimension must match the
    number of distinct target qubits.
    """
    gate = np.asarray(gate, dtype=complex)
    targets = tuple(int(t) for t in targets)
    _check_targets(gate, targets, state.n_qubits)
    _require_unitary(gate)
    n = state.n_qubits
    k = len(targets)
    gate_tensor = gate.reshape((2,) * (2 * k))
    if state.kind == "pure":
        psi = state.data.reshape((2,) * n)
        psi = np.tensordot(gate_tensor, psi, axes=(range(k, 2 * k), targets))
        psi = np.moveaxis(psi, range(k), targets)
        return QuantumState(psi.reshape(-1), "pure")
    rho = state.data.reshape((2,) * (2 * n))
    rho = np.tensordot(gate_tensor, rho, axes=(range(k, 2 * k), targets))
    rho = np.moveaxis(rho, range(k), targets)
    col_targets = [n + t for t in targets]
    rho = np.tensordot(rho, gate_tensor.conj(), axes=(col_targets, range(k, 2 * k)))
    rho = np.moveaxis(rho, range(2 * n - k, 2 * n), col_targets)
    dim = 1 << n
    return QuantumState(rho.reshape(dim, dim), "density")


@dataclass(frozen=True)
class Observable:
    """Hermitian measurement operator with its spectral norm cached."""

    matrix: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("observable must be a square matrix")
        _qubit_count(mat.shape[0])
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise ValueError("observable is not Hermitian within 1e-12")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "norm", spectral_norm(mat))


def z_observable(n_qubits: int) -> Observable:
    """Pauli-Z on qubit 0, identity elsewhere."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    return Observable(kron_all([PAULI_Z] + [I2] * (n_qubits - 1)))


def expectation(state: QuantumState, observable) -> float:
    """Real expectation value <M> in ``state``.

    Accepts an :class:`Observable` or a raw Hermitian matrix.  The
    imaginary residue must stay below 1e-8; it is then discarded.
    """
    mat = observable.matrix if isinstance(observable, Observable) else np.asarray(observable)
    if mat.shape[0] != state.data.shape[0]:
        raise ValueError(
            f"observable dimension {mat.shape[0]} does not match state "
            f"dimension {state.data.shape[0]}"
        )
    if state.kind == "pure":
        value = np.vdot(state.data, mat @ state.data)
    else:
        value = np.trace(mat @ state.data)
    if abs(value.imag) > _RESIDUE_ATOL:
        raise NumericalIntegrityError(
            f"expectation has imaginary residue {value.imag!r} above 1e-8"
        )
    return float(value.real)


def spectral_norm(m: np.ndarray, rel_tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value of ``m`` by power iteration on M^dagger M.

    Iterates until the dominant-eigenvalue estimate is stable to
    ``rel_tol`` on two consecutive steps; raises
    :class:`NumericalIntegrityError` if ``max_iter`` iterations do not
    reach that, reporting the iteration count.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or min(m.shape) == 0:
        raise ValueError("spectral_norm expects a non-empty 2-d matrix")
    scale = np.max(np.abs(m))
    if scale == 0.0:
        return 0.0
    # Work on a rescaled copy so the iteration is insensitive to magnitude.
    a = m / scale
    rng = np.random.Generator(np.random.Philox(key=np.array([0x5EED, m.shape[1]], dtype=np.uint64)))
    vec = rng.normal(size=m.shape[1]) + 1j * rng.normal(size=m.shape[1])
    vec /= np.linalg.norm(vec)
    prev = -1.0
    stable = 0
    for it in range(1, max_iter + 1):
        w = a.conj().T @ (a @ vec)
        w_norm = np.linalg.norm(w)
        if w_norm == 0.0:
            # vec sits in the kernel; restart from a shifted direction.
            vec = rng.normal(size=m.shape[1]) + 1j * rng.normal(size=m.shape[1])
            vec /= np.linalg.norm(vec)
            prev = -1.0
            stable = 0
            continue
        lam = float(np.real(np.vdot(vec, w)))
        vec = w / w_norm
        if prev >= 0.0 and abs(lam - prev) <= rel_tol * max(lam, 1e-300):
            stable += 1
            if stable >= 2:
                return float(scale * np.sqrt(max(lam, 0.0)))
        else:
            stable = 0
        prev = lam
    raise NumericalIntegrityError(
        f"power iteration did not converge within {max_iter} iterations"
    )
