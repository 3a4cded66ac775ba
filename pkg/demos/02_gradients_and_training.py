"""Exact gradients by parameter shift, checked against finite differences,
then a short training run on the bundled toy task.
"""

import numpy as np

from reupqnn.ansatz import build_circuit, forward
from reupqnn.data import subsample_split, synthetic_toy
from reupqnn.grad import finite_diff_grad, parameter_shift_grad_f
from reupqnn.qcore import z_observable
from reupqnn.train import TrainConfig, train

rng = np.random.default_rng(12)

circuit = build_circuit(n_qubits=2, layers=2, data_dim=3, sublayers=1)
obs = z_observable(circuit.n_qubits)
theta = rng.uniform(0.0, 2.0 * np.pi, circuit.n_params)
x = rng.uniform(0.0, 2.0 * np.pi, circuit.data_dim)

exact = parameter_shift_grad_f(circuit, theta, x, obs)
approx = finite_diff_grad(lambda t: forward(circuit, t, x, obs), theta, h=1e-5)
print(f"gradient, {circuit.n_params} coordinates")
print(f"  parameter shift, first 4: {np.array2string(exact[:4], precision=6)}")
print(f"  finite difference, first 4: {np.array2string(approx[:4], precision=6)}")
print(f"  max |difference| = {np.max(np.abs(exact - approx)):.3e}")

pool = synthetic_toy(300, seed=3)
train_set, test_set = subsample_split(pool, 40, 100, (3, 0))
toy_circuit = build_circuit(n_qubits=1, layers=3, data_dim=1, sublayers=1)
toy_obs = z_observable(1)

config = TrainConfig(learning_rate=0.1, iterations=400, seed=0)
run = train(train_set, toy_circuit, toy_obs, config,
            test_dataset=test_set, eval_interval=100)

print("\ntoy training, one qubit, three layers")
for t, tr, te in zip(run.eval_points, run.train_risks, run.test_risks):
    print(f"  iter {t:4d}  train risk {tr:.4f}  test risk {te:.4f}")
print(f"final generalization gap = {run.test_risks[-1] - run.train_risks[-1]:+.4f}")
