"""Build a small re-uploading circuit and cross-check it against its comb.

The same computation is run two ways: direct statevector simulation, and
contraction of the circuit's Choi-operator comb with the encoded input.
The two numbers agree to machine precision, and the comb passes the
structural validity checks (hermiticity, positivity, causal ordering,
normalization).
"""

import numpy as np

from reupqnn.ansatz import build_circuit, forward
from reupqnn.comb import build_reuploading_comb, reuploading_comb_output, validate_comb
from reupqnn.qcore import z_observable

rng = np.random.default_rng(5)

circuit = build_circuit(n_qubits=1, layers=2, data_dim=2, sublayers=1)
obs = z_observable(circuit.n_qubits)
theta = rng.uniform(0.0, 2.0 * np.pi, circuit.n_params)
x = rng.uniform(0.0, 2.0 * np.pi, circuit.data_dim)

print(f"circuit: {circuit.n_qubits} qubit(s), {circuit.layers} layers, "
      f"{circuit.n_params} trainable angles, {circuit.data_dim} features")

direct = forward(circuit, theta, x, obs)
via_comb = reuploading_comb_output(circuit, theta, x, obs)
print(f"direct simulation   f = {direct:+.15f}")
print(f"comb contraction    f = {via_comb:+.15f}")
print(f"|difference|          = {abs(direct - via_comb):.3e}")

comb, teeth = build_reuploading_comb(circuit, theta)
report = validate_comb(comb, teeth)
print(f"\ncomb on wires {[s.name for s in comb.systems]}, "
      f"teeth {[(a, b) for a, b in teeth]}")
print(f"validate_comb: is_comb = {report.is_comb}, violations = {report.violations}")

# A scaled matrix is no longer trace-normalized and must be rejected.
from reupqnn.comb import ChoiOperator

bad = ChoiOperator(comb.systems, 1.5 * comb.matrix)
report = validate_comb(bad, teeth)
print(f"1.5 * comb:    is_comb = {report.is_comb}, violations = {report.violations}")
