"""Uniform stability: coupled measurement and closed-form bounds.

Empirical side.  Two SGD runs are coupled by sharing the seed: identical
initialization and identical per-iteration index draws, differing only in
one training sample (S vs S with sample i replaced).  The coupled
divergence tracks how far the runs drift; the empirical stability
coefficient is

    beta_hat = 1/2 * max over sampled i, probes z of
               | mean_seeds l(A_S, z) - mean_seeds l(A_Si, z) |.

Analytic side.  For K single-Pauli parameters, L re-uploading layers, D
features, m training samples and T iterations of step size eta, the
per-step parameter divergence obeys a linear recursion whose closed form
gives

    beta = C1 ||M|| * (8 pi eta C2 K ||M|| L D / m)
           * sum_{t=1..T} (1 + 2 eta C2 K ||M||)^(t-1),

and the high-probability generalization bound is
2 beta + (4 m beta + M_loss) sqrt(log(1/delta) / (2m)).  Under
depolarizing noise of strength p the same recursion picks up a damping
(1-p)^K on every output-derivative factor and (1-p)^(L D) on the
data-dependent term, which only shrinks the bound; p = 0 reproduces the
noiseless expressions exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import ReuploadCircuit, forward_many
from .data import Dataset, Sample
from .qcore import Observable
from .train import TrainConfig, draw_index, init_params, loss, sgd_step, train

__all__ = [
    "StabilityTrace",
    "coupled_divergence",
    "empirical_beta",
    "BoundInputs",
    "theoretical_beta",
    "noisy_theoretical_beta",
    "generalization_bound",
    "noisy_generalization_bound",
    "MarginReport",
    "stable_training_margin",
]

_INDEX_TAG = np.uint64(0x1D5)
_REPLACEMENT_TAG = np.uint64(0x9E91)


@dataclass(frozen=True)
class StabilityTrace:
    """Per-iteration record of one coupled pair of runs.

    Arrays have length T + 1 (iteration 0 is the shared start).  The
    probe gaps are maxima over the probe set: |f_S - f_Si| at the output
    level and |l_S - l_Si| at the loss level.
    """

    replaced_index: int
    seed: int
    sum_abs_dtheta: np.ndarray
    probe_f_gap: np.ndarray
    probe_loss_gap: np.ndarray


def coupled_divergence(dataset: Dataset, index: int, replacement: Sample,
                       circuit: ReuploadCircuit, obs: Observable, config: TrainConfig,
                       probes: Dataset | None = None) -> StabilityTrace:
    """Train on S and on S with sample ``index`` replaced, in lockstep."""
    m = len(dataset)
    if not (0 <= index < m):
        raise ValueError(f"index {index} out of range for {m} samples")
    if probes is None:
        probes = dataset
    twin = dataset.replace(index, replacement)

    t_total = config.iterations
    theta_a = init_params(circuit, config.seed)
    theta_b = theta_a.copy()
    sum_abs = np.zeros(t_total + 1)
    f_gap = np.zeros(t_total + 1)
    l_gap = np.zeros(t_total + 1)

    def probe_gaps(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
        fa = forward_many(circuit, a, probes.features, obs)
        fb = forward_many(circuit, b, probes.features, obs)
        la = loss(fa, probes.labels, config.loss_kind)
        lb = loss(fb, probes.labels, config.loss_kind)
        return float(np.max(np.abs(fa - fb))), float(np.max(np.abs(la - lb)))

    for t in range(t_total):
        idx = draw_index(config.seed, t, m)
        theta_a = sgd_step(theta_a, dataset.sample(idx), config.learning_rate,
                           circuit, obs, config.loss_kind, config.noise_p)
        theta_b = sgd_step(theta_b, twin.sample(idx), config.learning_rate,
                           circuit, obs, config.loss_kind, config.noise_p)
        sum_abs[t + 1] = float(np.sum(np.abs(theta_a - theta_b)))
        f_gap[t + 1], l_gap[t + 1] = probe_gaps(theta_a, theta_b)

    return StabilityTrace(
        replaced_index=index,
        seed=config.seed,
        sum_abs_dtheta=sum_abs,
        probe_f_gap=f_gap,
        probe_loss_gap=l_gap,
    )


def _philox(*key) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array(key, dtype=np.uint64)))


def sampled_indices(m: int, n_indices: int) -> np.ndarray:
    """Candidate replaced indices, stable across runs (keyed by m only)."""
    n = min(n_indices, m)
    if n < 1:
        raise ValueError("need at least one index")
    return np.sort(_philox(_INDEX_TAG, m).choice(m, size=n, replace=False))


def replacement_for(index: int, probe_set: Dataset) -> Sample:
    """Replacement sample for one index, drawn from the probe pool.

    Keyed by the index alone, never by the training seed, so every seed
    of the ensemble sees the same replaced dataset.
    """
    pick = int(_philox(_REPLACEMENT_TAG, index).integers(0, len(probe_set)))
    return probe_set.sample(pick)


def empirical_beta(dataset: Dataset, probe_set: Dataset, n_indices: int, n_seeds: int,
                   circuit: ReuploadCircuit, obs: Observable, config: TrainConfig) -> float:
    """Monte-Carlo estimate of the uniform-stability coefficient."""
    if n_seeds < 1:
        raise ValueError("need at least one seed")
    if len(probe_set) < 1:
        raise ValueError("probe set is empty")
    seeds = [config.seed + s for s in range(n_seeds)]
    indices = sampled_indices(len(dataset), n_indices)

    def mean_probe_losses(train_set: Dataset) -> np.ndarray:
        acc = np.zeros(len(probe_set))
        for seed in seeds:
            cfg = TrainConfig(config.learning_rate, config.iterations, seed,
                              config.loss_kind, config.noise_p)
            run = train(train_set, circuit, obs, cfg)
            outputs = forward_many(circuit, run.final_theta, probe_set.features, obs)
            acc += loss(outputs, probe_set.labels, config.loss_kind)
        return acc / n_seeds

    base = mean_probe_losses(dataset)
    worst = 0.0
    for index in indices:
        twin = dataset.replace(int(index), replacement_for(int(index), probe_set))
        gap = np.max(np.abs(base - mean_probe_losses(twin)))
        worst = max(worst, float(gap))
    return 0.5 * worst


@dataclass(frozen=True)
class BoundInputs:
    """Constants entering the closed-form stability and generalization bounds."""

    layers: int
    data_dim: int
    n_params: int
    m: int
    iterations: int
    eta: float
    obs_norm: float
    lipschitz: float = 1.0
    smoothness: float = 0.5
    loss_bound: float = 1.0
    delta: float = 0.05
    noise_p: float = 0.0

    def __post_init__(self):
        if self.layers < 1 or self.data_dim < 1 or self.n_params < 1 or self.m < 1:
            raise ValueError("layers, data_dim, n_params and m must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not (np.isfinite(self.eta) and self.eta > 0.0):
            raise ValueError("eta must be finite and > 0")
        for name in ("obs_norm", "lipschitz", "smoothness", "loss_bound"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if not (0.0 < self.delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")
        if not (0.0 <= self.noise_p <= 1.0):
            raise ValueError("noise_p must lie in [0, 1]")


def _beta_closed_form(b: BoundInputs, p: float) -> float:
    damp_params = (1.0 - p) ** b.n_params
    damp_data = (1.0 - p) ** (b.layers * b.data_dim)
    per_step = (
        8.0 * np.pi * b.eta * b.smoothness * b.n_params * b.obs_norm
        * b.layers * b.data_dim * damp_data / b.m
    )
    ratio = 1.0 + 2.0 * b.eta * b.smoothness * b.n_params * b.obs_norm * damp_params
    if b.iterations == 0:
        geometric = 0.0
    elif ratio == 1.0:
        geometric = float(b.iterations)
    else:
        try:
            power = ratio ** b.iterations
        except OverflowError:
            raise OverflowError(
                f"geometric factor {ratio!r} ** {b.iterations} overflows"
            ) from None
        geometric = (power - 1.0) / (ratio - 1.0)
    result = b.lipschitz * b.obs_norm * damp_params * per_step * geometric
    if not np.isfinite(result):
        raise OverflowError(
            f"closed form overflowed: per_step={per_step!r}, geometric={geometric!r}"
        )
    return result


def theoretical_beta(b: BoundInputs) -> float:
    """Closed-form stability coefficient of the noiseless recursion."""
    return _beta_closed_form(b, 0.0)


def noisy_theoretical_beta(b: BoundInputs) -> float:
    """Stability coefficient under depolarizing noise of strength ``b.noise_p``.

    Reduces bit-for-bit to :func:`theoretical_beta` at p = 0 and is
    monotonically non-increasing in p.
    """
    return _beta_closed_form(b, b.noise_p)


def generalization_bound(beta: float, b: BoundInputs) -> float:
    """High-probability gap bound 2 beta + (4 m beta + M) sqrt(log(1/delta) / 2m)."""
    if beta < 0.0:
        raise ValueError("beta must be >= 0")
    tail = float(np.sqrt(np.log(1.0 / b.delta) / (2.0 * b.m)))
    return 2.0 * beta + (4.0 * b.m * beta + b.loss_bound) * tail


def noisy_generalization_bound(b: BoundInputs) -> float:
    """Generalization bound with the noisy closed-form beta plugged in."""
    return generalization_bound(noisy_theoretical_beta(b), b)


@dataclass(frozen=True)
class MarginReport:
    """eta * K * ||M|| with a flag once the stable-step condition fails."""

    value: float
    flagged: bool


def stable_training_margin(b: BoundInputs) -> MarginReport:
    """Step-size stability margin; flagged when eta * K * ||M|| >= 1."""
    value = b.eta * b.n_params * b.obs_norm
    return MarginReport(value=value, flagged=bool(value >= 1.0))
