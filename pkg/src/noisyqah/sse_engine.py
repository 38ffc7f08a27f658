"""Discretized stochastic Schrodinger evolution of single-qubit states.

One noise configuration per trajectory: each Trotter step applies the
three axis rotations exp(-i eta_x sigma_x tau) exp(-i eta_y sigma_y tau)
exp(-i eta_z sigma_z tau) with eta_i = h_i + sqrt(w_i) N_i / sqrt(tau),
N_i standard normal.  Ensembles reduce to the stochastic averaged
polarization that the Liouvillian route reproduces exactly.

Reproducibility: every configuration owns a counter-based Philox stream
keyed by (master seed, configuration index); draw n, axis i is row n,
column i of that stream.  Averages accumulate in fixed configuration
order over fixed-size chunks, so results are byte-identical no matter
how the surrounding run is parallelized.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidTau
from .liouville import exact_evolution
from .model import NoiseStrengths, QahParams, bloch_vector
from .trajectory import SpinTrajectory

__all__ = [
    "EvolutionSchedule", "noise_draws", "step", "simulate_trajectory",
    "ensemble_average", "discretization_sweep", "uhlmann_fidelity",
]

_CHUNK = 512  # configurations averaged per block; fixed for determinism


@dataclass(frozen=True)
class EvolutionSchedule:
    """Total window, Trotter step count and recording stride.

    tau = t_total / n_steps; samples are recorded every sample_stride
    steps, always including t = 0 and t = t_total.
    """

    t_total: float = 30.0
    n_steps: int = 300
    sample_stride: int = 20

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not (self.t_total > 0 and math.isfinite(self.t_total)):
            raise InvalidTau("t_total must be positive and finite")
        if self.sample_stride < 1 or self.n_steps % self.sample_stride != 0:
            raise ValueError("sample_stride must divide n_steps")

    @property
    def tau(self):
        return self.t_total / self.n_steps

    @property
    def sample_steps(self):
        return np.arange(0, self.n_steps + 1, self.sample_stride)

    @property
    def sample_times(self):
        return self.sample_steps * self.tau

    def with_steps(self, n_steps, target_fraction=None):
        """Same window with a different step count.

        The stride is the divisor of n_steps closest to n_steps *
        target_fraction (default: this schedule's stride fraction), ties
        to the smaller divisor, so sample times stay comparable across
        step counts.
        """
        if target_fraction is None:
            target_fraction = self.sample_stride / self.n_steps
        target = n_steps * target_fraction
        divisors = [d for d in range(1, n_steps + 1) if n_steps % d == 0]
        stride = min(divisors, key=lambda d: (abs(d - target), d))
        return EvolutionSchedule(self.t_total, n_steps, stride)


def noise_draws(seed, config_index, n_steps):
    """The (n_steps, 3) standard-normal table for one configuration.

    Philox keyed by (seed, config_index): reproducible from the key
    alone, independent of execution order.
    """
    bits = np.random.Philox(key=np.array([seed, config_index], dtype=np.uint64))
    return np.random.Generator(bits).standard_normal((n_steps, 3))


def _rotate(a, b, theta_x, theta_y, theta_z):
    """Apply the z, then y, then x rotation to amplitude arrays."""
    phase = np.exp(-1j * theta_z)
    a = a * phase
    b = b * np.conj(phase)
    c, s = np.cos(theta_y), np.sin(theta_y)
    a, b = c * a - s * b, s * a + c * b
    c, s = np.cos(theta_x), np.sin(theta_x)
    a, b = c * a - 1j * s * b, -1j * s * a + c * b
    return a, b


def step(state, h, w: NoiseStrengths, draw, tau):
    """One Trotter step for a single state.

    state : complex 2-vector (basis up, down), unit norm
    h : Bloch vector as a 3-sequence or BlochVector
    draw : 3 standard-normal deviates (N_x, N_y, N_z)
    """
    if tau <= 0:
        raise InvalidTau(f"tau = {tau}")
    h = h.as_array() if hasattr(h, "as_array") else np.asarray(h, dtype=float)
    draw = np.asarray(draw, dtype=float)
    eta = h + np.sqrt(w.as_array()) * draw / math.sqrt(tau)
    a, b = _rotate(state[0], state[1], eta[0] * tau, eta[1] * tau, eta[2] * tau)
    norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    return np.array([a / norm, b / norm])


def _polarization(a, b):
    """Bloch components from amplitude arrays; stacks on the last axis."""
    cross = np.conj(a) * b
    return np.stack(
        [2.0 * cross.real, 2.0 * cross.imag, np.abs(a) ** 2 - np.abs(b) ** 2],
        axis=-1,
    )


def _evolve_block(h, w: NoiseStrengths, sched: EvolutionSchedule, draws):
    """Evolve a block of configurations from |down>; returns the sampled
    polarizations (n_configs, n_samples, 3)."""
    n_conf = draws.shape[0]
    tau = sched.tau
    sqrt_w = np.sqrt(w.as_array())
    a = np.zeros(n_conf, dtype=complex)
    b = np.ones(n_conf, dtype=complex)
    record_at = set(int(n) for n in sched.sample_steps)
    out = np.empty((n_conf, len(sched.sample_steps), 3))
    slot = 0
    if 0 in record_at:
        out[:, slot] = _polarization(a, b)
        slot += 1
    inv_sqrt_tau = 1.0 / math.sqrt(tau)
    for n in range(sched.n_steps):
        eta = h[None, :] + sqrt_w[None, :] * draws[:, n, :] * inv_sqrt_tau
        theta = eta * tau
        a, b = _rotate(a, b, theta[:, 0], theta[:, 1], theta[:, 2])
        norm = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
        a /= norm
        b /= norm
        if (n + 1) in record_at:
            out[:, slot] = _polarization(a, b)
            slot += 1
    return out


def simulate_trajectory(k, p: QahParams, w: NoiseStrengths,
                        sched: EvolutionSchedule, seed, config_index) -> SpinTrajectory:
    """One noise configuration from the fully polarized state |down>."""
    h = bloch_vector(k, p).as_array()
    draws = noise_draws(seed, config_index, sched.n_steps)
    pol = _evolve_block(h, w, sched, draws[None, :, :])[0]
    kx, ky = (k.kx, k.ky) if hasattr(k, "kx") else (float(k[0]), float(k[1]))
    return SpinTrajectory(momentum=(kx, ky), times=sched.sample_times, polarization=pol)


def ensemble_average(k, p: QahParams, w: NoiseStrengths,
                     sched: EvolutionSchedule, seed, n_configs) -> SpinTrajectory:
    """Mean polarization over configurations 0 .. n_configs - 1.

    Deterministic for a given (seed, n_configs, schedule): configuration
    streams are keyed individually and summed in index order.
    """
    if n_configs < 1:
        raise ValueError("n_configs must be >= 1")
    h = bloch_vector(k, p).as_array()
    total = None
    for start in range(0, n_configs, _CHUNK):
        stop = min(start + _CHUNK, n_configs)
        draws = np.stack(
            [noise_draws(seed, c, sched.n_steps) for c in range(start, stop)]
        )
        block = _evolve_block(h, w, sched, draws).sum(axis=0)
        total = block if total is None else total + block
    kx, ky = (k.kx, k.ky) if hasattr(k, "kx") else (float(k[0]), float(k[1]))
    return SpinTrajectory(momentum=(kx, ky), times=sched.sample_times,
                          polarization=total / n_configs)


def uhlmann_fidelity(r, s):
    """Fidelity of the qubit states with Bloch vectors r and s.

    F = (1 + r.s + sqrt((1 - |r|^2)(1 - |s|^2))) / 2, the squared-root
    convention that equals 1 for identical states.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    r2 = min(float(r @ r), 1.0)
    s2 = min(float(s @ s), 1.0)
    return float((1.0 + float(r @ s) + math.sqrt((1.0 - r2) * (1.0 - s2))) / 2.0)


def discretization_sweep(k, p: QahParams, w: NoiseStrengths,
                         sched_base: EvolutionSchedule, m_list, seed, n_configs):
    """Discretization quality versus Trotter step count.

    For each M: the ensemble average on the M-step schedule is compared
    with the exact Liouvillian evolution at the same sample times.
    rss sums the squared polarization deviation over samples and
    components; fidelity averages the per-sample Uhlmann fidelity.
    Returns {M: {"rss": ..., "fidelity": ..., "n_samples": ...}}.
    """
    from .liouville import S_INIT

    results = {}
    frac = sched_base.sample_stride / sched_base.n_steps
    for m in m_list:
        if m < 10:
            raise ValueError("each M must be >= 10")
        sched = sched_base.with_steps(int(m), target_fraction=frac)
        sse = ensemble_average(k, p, w, sched, seed, n_configs)
        oracle = exact_evolution(k, p, w, S_INIT, sched.sample_times)
        diff = sse.polarization - oracle.polarization
        rss = float(np.sum(diff ** 2))
        fid = float(np.mean([
            uhlmann_fidelity(sse.polarization[i], oracle.polarization[i])
            for i in range(len(sched.sample_times))
        ]))
        results[int(m)] = {"rss": rss, "fidelity": fid,
                           "n_samples": int(len(sched.sample_times))}
    return results
