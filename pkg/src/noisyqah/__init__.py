"""Noise-induced quench dynamics of the 2D quantum anomalous Hall model.

Two independent routes to the noise-averaged spin dynamics (a discrete
stochastic Schroedinger engine and the exact 3x3 Liouvillian), plus the
dynamical topology built on top: deformed band-inversion surfaces, the
winding W of the normal-derivative field, exceptional-point clusters
and their winding N_E, and the noise-insensitive sweet-spot checks.

Units: energies in kHz, times in ms, kHz * ms = 1 (no 2 pi factors).
"""

__version__ = "0.1.0"

from .errors import (
    ConfigInvalid, Defective, DegenerateData, DegenerateField, EmptyBis,
    FitDiverged, GapClosed, InvalidTau, Masked, NoDbis, NoisyQahError,
    OpenContour, SingularOnLoop, ZeroVector,
)
from .liouville import (
    S_INIT, EigenSystem, EpCluster, Liouvillian, ModeDecomposition,
    build_liouvillian, eigensystem, exact_evolution, find_exceptional_points,
    liouvillian_matrix, mode_decomposition, omega_map, oscillation_frequency,
)
from .mode_fitting import (
    FitConfig, FitResult, RescaledTrajectory, fit_modes, rescale,
    texture_average, time_average,
)
from .model import (
    BlochVector, Momentum, NoiseStrengths, QahParams, bloch_field,
    bloch_vector, charge_momenta, chern_number, ideal_bis,
)
from .sse_engine import (
    EvolutionSchedule, discretization_sweep, ensemble_average, noise_draws,
    simulate_trajectory, step, uhlmann_fidelity,
)
from .topology import (
    DbisCurve, DynamicalField, LoopS, LPolarization, TextureGrid,
    TransitionReport, classify_transition, dynamical_field, extract_dbis,
    liouvillian_polarization, omega_min_on_dbis, oracle_texture,
    sweet_spot_literal, sweet_spot_scan, winding_NE, winding_W,
)
from .trajectory import SpinTrajectory
