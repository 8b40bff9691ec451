"""BPSK over AWGN with per-trial deterministic random streams.

Gaussian samples come from ``numpy.random.Generator.standard_normal`` on a
PCG64 generator seeded by ``SeedSequence(seed, spawn_key=(trial, ...))``; the
noise of trial ``t`` therefore depends only on the seed and the trial key,
never on how trials are distributed over workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelConfig:
    ebn0_db: float
    rate: float
    seed: int = 0
    noiseless: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must lie in (0, 1], got {self.rate}")
        s2 = self.sigma2
        if not np.isfinite(s2) or s2 <= 0.0:
            raise ValueError(f"noise variance {s2} is not finite and positive")

    @property
    def sigma2(self) -> float:
        """Noise variance per real dimension for unit-energy symbols."""
        return 1.0 / (2.0 * self.rate * 10.0 ** (self.ebn0_db / 10.0))


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one Monte Carlo trial.

    ``stream`` separates otherwise identical trial numbers, e.g. per SNR point.
    """
    key = (trial,) if stream == 0 else (trial, stream)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def modulate_bpsk(x) -> np.ndarray:
    bits = np.asarray(x)
    return 1.0 - 2.0 * bits.astype(np.float64)


def transmit_awgn(symbols, config: ChannelConfig, rng: np.random.Generator) -> np.ndarray:
    """Add Gaussian noise and return LLRs ``2 y / sigma^2`` (positive favours 0)."""
    s = np.asarray(symbols, dtype=np.float64)
    sigma2 = config.sigma2
    if config.noiseless:
        y = s
    else:
        y = s + np.sqrt(sigma2) * rng.standard_normal(s.shape)
    return 2.0 * y / sigma2
