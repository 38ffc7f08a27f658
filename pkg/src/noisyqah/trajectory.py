"""Shared time-series container for spin polarization data."""

from dataclasses import dataclass

import numpy as np

__all__ = ["SpinTrajectory"]


@dataclass
class SpinTrajectory:
    """Sampled 3-vector polarization at one momentum.

    momentum : (kx, ky) tuple
    times : (n,) array, ms, strictly increasing
    polarization : (n, 3) array; a single pure-state trajectory has rows
        of unit norm, an ensemble average has norm <= 1.
    """

    momentum: tuple
    times: np.ndarray
    polarization: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.polarization = np.asarray(self.polarization, dtype=float)
        if self.polarization.shape != (len(self.times), 3):
            raise ValueError("polarization must have shape (len(times), 3)")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)
