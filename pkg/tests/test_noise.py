"""Depolarizing channel semantics and the exact damping law.

Oracle: the Kraus form {sqrt(1-3p/4) I, sqrt(p/4) X, sqrt(p/4) Y,
sqrt(p/4) Z}, which equals replacing the marked qubit by I/2 with
probability p.
"""

import numpy as np
import pytest

from reupqnn.ansatz import build_circuit, forward
from reupqnn.noise import depolarize, noisy_forward
from reupqnn.qcore import (
    I2,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    QuantumState,
    embed_gate,
    z_observable,
)


def random_density(rng, n):
    dim = 2 ** n
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    return QuantumState(rho, "density")


def kraus_oracle(rho, p, qubit, n):
    ops = [
        np.sqrt(1 - 0.75 * p) * I2,
        np.sqrt(0.25 * p) * PAULI_X,
        np.sqrt(0.25 * p) * PAULI_Y,
        np.sqrt(0.25 * p) * PAULI_Z,
    ]
    out = np.zeros_like(rho)
    for k in ops:
        # embed_gate insists on unitarity, so build the embedding by hand
        full = np.eye(1, dtype=complex)
        for q in range(n):
            full = np.kron(full, k if q == qubit else I2)
        out += full @ rho @ full.conj().T
    return out


def test_depolarize_p_zero_is_identity():
    rng = np.random.default_rng(61)
    state = random_density(rng, 2)
    out = depolarize(state, 0.0, 1)
    np.testing.assert_array_equal(out.data, state.data)


def test_depolarize_p_one_fully_mixes_one_qubit():
    rng = np.random.default_rng(62)
    state = random_density(rng, 1)
    out = depolarize(state, 1.0, 0)
    np.testing.assert_allclose(out.data, 0.5 * np.eye(2), atol=1e-12)


def test_depolarize_plus_state_half_strength():
    plus = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
    out = depolarize(QuantumState(plus, "density"), 0.5, 0)
    np.testing.assert_allclose(out.data, [[0.5, 0.25], [0.25, 0.5]], atol=1e-14)


def test_depolarize_matches_kraus_oracle():
    rng = np.random.default_rng(63)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        qubit = int(rng.integers(n))
        p = float(rng.uniform(0, 1))
        state = random_density(rng, n)
        got = depolarize(state, p, qubit).data
        want = kraus_oracle(state.data, p, qubit, n)
        assert np.max(np.abs(got - want)) < 1e-10


def test_depolarize_preserves_trace_and_validity():
    rng = np.random.default_rng(64)
    state = random_density(rng, 2)
    out = depolarize(state, 0.37, 0)
    assert np.trace(out.data).real == pytest.approx(1.0, abs=1e-12)
    QuantumState(out.data, "density")  # re-runs the density invariants


def test_depolarize_input_validation():
    with pytest.raises(ValueError):
        depolarize(QuantumState.zero(1), 0.1, 0)  # pure state
    rho = QuantumState.zero_density(1)
    with pytest.raises(ValueError):
        depolarize(rho, 1.5, 0)
    with pytest.raises(ValueError):
        depolarize(rho, 0.1, 3)


def test_noisy_forward_p_zero_matches_clean():
    rng = np.random.default_rng(65)
    for _ in range(10):
        n = int(rng.integers(1, 3))
        c = build_circuit(n, int(rng.integers(1, 3)), n, 1)
        theta = rng.uniform(0, 2 * np.pi, c.n_params)
        x = rng.uniform(0, 2 * np.pi, n)
        obs = z_observable(n)
        assert noisy_forward(c, theta, x, obs, 0.0) == pytest.approx(
            forward(c, theta, x, obs), abs=1e-12
        )


def test_noisy_forward_exact_damping_single_qubit():
    """All gates touch one qubit, so f_noisy = (1-p)^G f exactly."""
    rng = np.random.default_rng(66)
    for p in (0.01, 0.1, 0.5):
        for _ in range(5):
            layers = int(rng.integers(1, 4))
            sublayers = int(rng.integers(1, 3))
            c = build_circuit(1, layers, 1, sublayers)
            theta = rng.uniform(0, 2 * np.pi, c.n_params)
            x = rng.uniform(0, 2 * np.pi, 1)
            obs = z_observable(1)
            g = c.n_params + c.layers * c.encode_columns
            clean = forward(c, theta, x, obs)
            noisy = noisy_forward(c, theta, x, obs, p)
            assert noisy == pytest.approx((1 - p) ** g * clean, abs=1e-12)


def test_noisy_forward_filler_rotations_count_as_gates():
    """Padding rotations with angle zero still pick up a noise factor."""
    rng = np.random.default_rng(67)
    c = build_circuit(1, 2, 1, 1)
    theta = rng.uniform(0, 2 * np.pi, c.n_params)
    x = rng.uniform(0, 2 * np.pi, 1)
    obs = z_observable(1)
    p = 0.25
    g = c.n_params + c.layers  # one encode column per layer
    assert noisy_forward(c, theta, x, obs, p) == pytest.approx(
        (1 - p) ** g * forward(c, theta, x, obs), abs=1e-12
    )


def test_noisy_forward_contracts_toward_zero():
    c = build_circuit(1, 1, 1, 1)
    theta = np.array([0.4, 0.9])
    x = np.array([1.1])
    obs = z_observable(1)
    values = [abs(noisy_forward(c, theta, x, obs, p)) for p in (0.0, 0.1, 0.3, 0.7)]
    assert all(a > b for a, b in zip(values, values[1:]))
