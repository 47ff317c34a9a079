"""Additive circular Gaussian noise referenced to the scenario-average UE power."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from richris.scenario import SHAPES, PerturberState

INFINITE_SNR = math.inf


@dataclass(frozen=True)
class NoiseModel:
    snr_db: float
    p_ref: float

    def __post_init__(self):
        if not self.p_ref > 0:
            raise ValueError("reference power must be positive")
        if math.isnan(self.snr_db):
            raise ValueError("SNR must not be NaN")

    @property
    def variance(self):
        if self.snr_db == math.inf:
            return 0.0
        return self.p_ref * 10.0 ** (-self.snr_db / 10.0)


def add_awgn(z, noise: NoiseModel, rng):
    """``z`` plus circular complex Gaussian noise of variance ``noise.variance``."""
    z = np.asarray(z, dtype=complex)
    var = noise.variance
    if var == 0.0:
        return z.copy()
    std = math.sqrt(var / 2.0)
    n = rng.standard_normal(z.shape + (2,)) * std
    return z + (n[..., 0] + 1j * n[..., 1])


def sample_states(rng, n, shapes=SHAPES):
    p = rng.uniform(0.0, 1.0, n)
    s = rng.integers(0, len(shapes), n)
    return [PerturberState(float(pi), shapes[int(si)]) for pi, si in zip(p, s)]


def reference_power_samples(engine, n_configs=50, n_states=50, seed=0, configs=None, states=None):
    """|H_UE|^2 on the (config x state) grid, shape (n_configs, n_states)."""
    rng = np.random.default_rng(seed)
    if configs is None:
        if n_configs < 50:
            raise ValueError("reference power needs at least 50 configuration samples")
        configs = rng.integers(0, 2, size=(n_configs, engine.n_pixels), dtype=np.uint8)
    if states is None:
        if n_states < 50:
            raise ValueError("reference power needs at least 50 perturber samples")
        states = sample_states(rng, n_states)
    configs = np.atleast_2d(np.asarray(configs))
    out = np.empty((len(configs), len(states)))
    for i, c in enumerate(configs):
        out[i] = np.abs(engine.channels_at_states(c, states)[:, 0]) ** 2
    return out


def reference_power(engine, n_configs=50, n_states=50, seed=0, configs=None, states=None):
    """Monte-Carlo mean of |H_UE|^2 over random configurations and perturber states."""
    return float(np.mean(reference_power_samples(engine, n_configs, n_states, seed, configs, states)))
