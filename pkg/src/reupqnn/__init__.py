"""Simulator and stability-analysis toolkit for data re-uploading circuits.

Quick example::

    import numpy as np
    from reupqnn import ansatz, qcore, comb

    circuit = ansatz.build_circuit(n_qubits=2, layers=2, data_dim=3, sublayers=1)
    obs = qcore.z_observable(2)
    rng = np.random.default_rng(0)
    theta = rng.uniform(0, 2 * np.pi, circuit.n_params)
    x = rng.uniform(0, 2 * np.pi, circuit.data_dim)

    f_direct = ansatz.forward(circuit, theta, x, obs)
    f_comb = comb.reuploading_comb_output(circuit, theta, x, obs)
    assert abs(f_direct - f_comb) < 1e-9
"""

__version__ = "0.1.0"

from . import ansatz, comb, data, experiments, grad, noise, qcore, stability, train

__all__ = [
    "ansatz",
    "comb",
    "data",
    "experiments",
    "grad",
    "noise",
    "qcore",
    "stability",
    "train",
    "__version__",
]
