"""Measure algorithmic stability empirically and compare with the
closed-form bound.

Two SGD runs that differ in exactly one training sample are driven in
lockstep; the divergence of their outputs bounds how much any single
sample can sway the learned model.  Averaging the worst probe-loss gap
over replaced indices and seeds gives an empirical beta_hat, which the
closed-form beta must dominate for matching constants.
"""

import numpy as np

from reupqnn.ansatz import build_circuit
from reupqnn.data import synthetic_toy
from reupqnn.qcore import z_observable
from reupqnn.stability import (
    BoundInputs,
    coupled_divergence,
    empirical_beta,
    generalization_bound,
    replacement_for,
    sampled_indices,
    stable_training_margin,
    theoretical_beta,
)
from reupqnn.train import TrainConfig

circuit = build_circuit(n_qubits=1, layers=1, data_dim=1, sublayers=1)
obs = z_observable(1)
pool = synthetic_toy(120, seed=11)
probe_set = pool.subset(range(100, 120))
config = TrainConfig(learning_rate=0.05, iterations=150, seed=0)

index = int(sampled_indices(50, 1)[0])
replacement = replacement_for(index, probe_set)
trace = coupled_divergence(pool.subset(range(50)), index, replacement,
                           circuit, obs, config, probes=probe_set)
print(f"coupled runs, sample {index} replaced, T = {config.iterations}")
for t in (0, 25, 50, 100, 150):
    print(f"  iter {t:3d}  sum|dtheta| = {trace.sum_abs_dtheta[t]:.5f}"
          f"  max probe |f_S - f_Si| = {trace.probe_f_gap[t]:.5f}")

print("\nempirical beta_hat against m (4 indices, 6 seeds each)")
for m in (25, 50, 100):
    beta_hat = empirical_beta(pool.subset(range(m)), probe_set, 4, 6,
                              circuit, obs, config)
    b = BoundInputs(layers=1, data_dim=1, n_params=circuit.n_params, m=m,
                    iterations=config.iterations, eta=config.learning_rate,
                    obs_norm=obs.norm, lipschitz=1.0, smoothness=0.5,
                    loss_bound=1.0, delta=0.05, noise_p=0.0)
    beta = theoretical_beta(b)
    print(f"  m = {m:4d}  beta_hat = {beta_hat:.5f}"
          f"  closed form = {beta:.3e}"
          f"  gen bound (delta 0.05) = {generalization_bound(beta, b):.3e}")

print("\nthe closed form scales exactly as 1/m and the measurement falls"
      "\nwith m as well; the closed form is a worst-case envelope that"
      "\ncompounds geometrically over the 150 iterations, so its absolute"
      "\nscale is pessimistic by design")

low = stable_training_margin(BoundInputs(layers=1, data_dim=1, n_params=2,
                                         m=100, iterations=150, eta=0.05,
                                         obs_norm=1.0, lipschitz=1.0,
                                         smoothness=0.5, loss_bound=1.0,
                                         delta=0.05, noise_p=0.0))
print(f"\nstep-size margin eta*K*||M|| = {low.value}, flagged = {low.flagged}")
