"""Mode recovery from sampled trajectories.

The measurement pipeline of the experiment: fit the three-mode model to
an (ensemble-averaged) polarization time series, strip the decay rates,
and time-average the rescaled signal.  The fit parameterization is the
12 real numbers (s0, Re s_plus, Im s_plus, lambda0, lambda1, omega);
overdamped data switch to a sum of three real exponentials with omega
pinned to zero.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateData, FitDiverged
from .liouville import ModeDecomposition
from .trajectory import SpinTrajectory

__all__ = [
    "FitConfig", "FitResult", "RescaledTrajectory",
    "fit_modes", "rescale", "time_average", "texture_average",
]

_CONST_TOL = 1e-10  # max deviation for the constant-trajectory fast path


@dataclass(frozen=True)
class FitConfig:
    max_iterations: int = 4000
    residual_threshold: float = 0.05  # rms, polarization units
    noise_floor: float = 0.0          # opt-in DegenerateData cutoff


@dataclass
class FitResult:
    decomposition: ModeDecomposition
    residual_rms: float
    converged: bool
    n_iterations: int


@dataclass
class RescaledTrajectory:
    """s-tilde(t) = s0 + s_plus e^{-i omega t} + s_minus e^{+i omega t};
    the conjugate-pair structure keeps it exactly real."""

    times: np.ndarray
    s_tilde: np.ndarray


def _oscillatory_model(theta, times):
    s0 = theta[0:3]
    sp = theta[3:6] + 1j * theta[6:9]
    lam0, lam1, omega = theta[9], theta[10], theta[11]
    t = times[:, None]
    return s0[None, :] * np.exp(-lam0 * t) + 2.0 * np.real(
        sp[None, :] * np.exp(-(lam1 + 1j * omega) * t)
    )


def _overdamped_model(theta, times):
    s0, sa, sb = theta[0:3], theta[3:6], theta[6:9]
    lam0, ra, rb = theta[9], theta[10], theta[11]
    t = times[:, None]
    return (
        s0[None, :] * np.exp(-lam0 * t)
        + sa[None, :] * np.exp(-ra * t)
        + sb[None, :] * np.exp(-rb * t)
    )


def _omega_candidates(times, pol):
    """Distinct frequency guesses from the per-component Fourier peaks.

    Each component gets one candidate (parabolically refined peak of
    its tail-baseline-removed magnitude spectrum); duplicates within
    half a frequency bin collapse.  Decay-dominated components simply
    contribute a low-frequency candidate that loses the residual
    contest later, so no peak-quality heuristics are needed.
    """
    n = len(times)
    dt = times[1] - times[0]
    s0 = pol[3 * n // 4:].mean(axis=0)
    r = pol - s0
    freqs = np.fft.rfftfreq(n, dt)
    raw = []
    for comp in range(3):
        y = r[:, comp] - r[:, comp].mean()
        spec = np.abs(np.fft.rfft(y))
        if len(spec) < 3:
            continue
        peak = int(np.argmax(spec[1:]) + 1)
        if spec[peak] <= 1e-12:
            continue
        delta = 0.0
        if peak < len(spec) - 1:
            a, b, c = spec[peak - 1], spec[peak], spec[peak + 1]
            denom = a - 2.0 * b + c
            if abs(denom) > 1e-30:
                delta = float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))
        omega = 2.0 * np.pi * freqs[1] * (peak + delta)
        if omega > 0:
            raw.append(omega)
    half_bin = np.pi * freqs[1]
    omegas = []
    for om in sorted(raw):
        if not omegas or om - omegas[-1] > half_bin:
            omegas.append(om)
    return omegas, s0, r


def _theta_from_decomposition(dec: ModeDecomposition):
    if dec.overdamped:
        return np.concatenate([
            dec.s0, dec.s_plus.real, dec.s_minus.real,
            [dec.lambda0, dec.real_rates[0], dec.real_rates[1]],
        ])
    return np.concatenate([
        dec.s0, dec.s_plus.real, dec.s_plus.imag,
        [dec.lambda0, dec.lambda1, dec.omega],
    ])


def fit_modes(traj: SpinTrajectory, init_guess: ModeDecomposition | None = None,
              cfg: FitConfig | None = None) -> FitResult:
    """Least-squares mode recovery from one trajectory.

    init_guess seeds a single solve from a known decomposition
    (simulation mode).  Without one (analysis mode) the solver multi-
    starts: one oscillatory start per per-component Fourier peak plus a
    three-real-exponential (overdamped) start, and the smallest residual
    wins.  A winning oscillation slower than one period per window that
    beats the overdamped fit by less than 5% is reported as overdamped:
    the window cannot resolve it, which is exactly the non-oscillating
    decay a measurement of the same length would see.

    Raises FitDiverged when the best residual fails the configured
    threshold and DegenerateData when the data variance sits below the
    opt-in noise floor.
    """
    cfg = cfg or FitConfig()
    times = traj.times
    pol = traj.polarization
    if len(times) < 12:
        raise ValueError("need at least 12 samples to determine 12 parameters")

    mean = pol.mean(axis=0)
    spread = np.abs(pol - mean).max()
    if spread < _CONST_TOL:
        dec = ModeDecomposition(
            s0=mean.copy(), s_plus=np.zeros(3, dtype=complex),
            s_minus=np.zeros(3, dtype=complex),
            lambda0=0.0, lambda1=0.0, omega=0.0,
        )
        return FitResult(dec, residual_rms=float(spread), converged=True, n_iterations=0)
    if cfg.noise_floor > 0 and pol.std(axis=0).max() < cfg.noise_floor:
        raise DegenerateData(
            f"trajectory variation {pol.std(axis=0).max():.2e} below noise floor"
        )

    dt = times[1] - times[0]
    starts = []
    if init_guess is not None:
        starts.append((_theta_from_decomposition(init_guess),
                       bool(init_guess.overdamped)))
    else:
        omegas, s0_est, r = _omega_candidates(times, pol)
        dr0 = (r[1] - r[0]) / dt
        half = len(times) // 2
        a1 = np.linalg.norm(r[:half], axis=1).max()
        a2 = np.linalg.norm(r[half:], axis=1).max() + 1e-12
        lam1 = max(np.log(a1 / a2), 0.0) / max(times[-1] / 2.0, dt)
        for om in omegas:
            sp = 0.5 * (r[0] + 1j * dr0 / om)
            starts.append((np.concatenate([s0_est, sp.real, sp.imag,
                                           [0.05, lam1, om]]), False))
        lam = 1.0 / max(times[-1] / 3.0, dt)
        starts.append((np.concatenate([mean, pol[0] - mean, np.zeros(3),
                                       [0.5 * lam, lam, 2.0 * lam]]), True))

    best = best_over = None
    for theta0, od in starts:
        model = _overdamped_model if od else _oscillatory_model
        result = least_squares(lambda th: (model(th, times) - pol).ravel(),
                               theta0, method="lm", max_nfev=cfg.max_iterations)
        rms = float(np.sqrt(np.mean(result.fun ** 2)))
        entry = (rms, result, od)
        if best is None or rms < best[0]:
            best = entry
        if od and (best_over is None or rms < best_over[0]):
            best_over = entry

    if init_guess is None and not best[2]:
        resolution = 2.0 * np.pi / (times[-1] - times[0])
        if abs(best[1].x[11]) < resolution and best_over[0] <= 1.05 * best[0]:
            best = best_over

    residual_rms, result, overdamped = best
    theta = result.x
    if residual_rms > cfg.residual_threshold:
        raise FitDiverged(
            f"residual rms {residual_rms:.3e} above threshold {cfg.residual_threshold}"
        )

    if overdamped:
        dec = ModeDecomposition(
            s0=theta[0:3].copy(),
            s_plus=theta[3:6].astype(complex),
            s_minus=theta[6:9].astype(complex),
            lambda0=float(theta[9]),
            lambda1=float(min(theta[10], theta[11])),
            omega=0.0,
            overdamped=True,
            real_rates=(float(theta[10]), float(theta[11])),
        )
    else:
        sp = theta[3:6] + 1j * theta[6:9]
        omega = float(theta[11])
        if omega < 0:  # canonical orientation: omega >= 0
            omega = -omega
            sp = np.conj(sp)
        dec = ModeDecomposition(
            s0=theta[0:3].copy(),
            s_plus=sp,
            s_minus=np.conj(sp),
            lambda0=float(theta[9]),
            lambda1=float(theta[10]),
            omega=omega,
        )
    # a solve stopped at the iteration cap still counts once its residual
    # clears the acceptance threshold
    converged = bool(result.success) or residual_rms <= cfg.residual_threshold
    return FitResult(dec, residual_rms=residual_rms,
                     converged=converged, n_iterations=int(result.nfev))


def rescale(fit: FitResult, times) -> RescaledTrajectory:
    """Evaluate the decay-stripped model at the given times."""
    if not fit.converged:
        raise FitDiverged("rescale requested for an unconverged fit")
    times = np.asarray(times, dtype=float)
    return RescaledTrajectory(times=times, s_tilde=fit.decomposition.rescaled(times))


def time_average(rt: RescaledTrajectory):
    """Arithmetic mean of the rescaled samples (the literal estimator)."""
    if len(rt.times) < 1:
        raise ValueError("need at least one sample")
    return rt.s_tilde.mean(axis=0)


def texture_average(dec: ModeDecomposition):
    """Exact mean of the rescaled signal over full oscillation periods.

    The oscillatory part integrates to zero over any whole number of
    periods, leaving s0; the overdamped rescaled signal is constant and
    averages to itself.  This is the estimator the texture pipeline
    stores per momentum cell: unlike the windowed sample mean it carries
    no partial-period remainder, which would otherwise be of order
    2/(omega T) and swamp the zero crossings that locate the dBIS.
    """
    if dec.overdamped:
        return dec.s0 + dec.s_plus.real + dec.s_minus.real
    return dec.s0.copy()
