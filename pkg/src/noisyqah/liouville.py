"""Exact route for the stochastic-averaged dynamics.

The noise-averaged Bloch vector obeys ds/dt = L s with the real 3x3
generator built here.  This module solves that equation in closed form
(eigenmodes or matrix exponential), classifies the spectrum, and locates
exceptional points where the oscillating eigenvector pair coalesces.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.linalg import expm

from .errors import Defective
from .model import NoiseStrengths, QahParams, bloch_field, bloch_vector, charge_momenta
from .trajectory import SpinTrajectory

__all__ = [
    "Liouvillian", "EigenSystem", "ModeDecomposition", "EpCluster",
    "build_liouvillian", "liouvillian_matrix", "eigensystem",
    "mode_decomposition", "exact_evolution", "oscillation_frequency",
    "find_exceptional_points", "S_INIT",
]

# Fully polarized initial state |down>, Bloch vector -z.
S_INIT = np.array([0.0, 0.0, -1.0])

_IMAG_TOL = 1e-10       # |Im| below this counts as a real eigenvalue
_COND_DEFECTIVE = 1e6   # eigenvector condition number flagging coalescence


def liouvillian_matrix(h, w):
    """L for Bloch vector h = (hx, hy, hz) and noise strengths w.

    Equals 2 * [[-wy-wz, -hz, hy], [hz, -wx-wz, -hx], [-hy, hx, -wx-wy]];
    the antisymmetric part generates precession about h, the diagonal
    part contracts each component at twice the other axes' noise rates.
    Broadcasts over leading axes of h; returns (..., 3, 3).
    """
    h = np.asarray(h, dtype=float)
    hx, hy, hz = h[..., 0], h[..., 1], h[..., 2]
    wx, wy, wz = (w.wx, w.wy, w.wz) if isinstance(w, NoiseStrengths) else w
    out = np.empty(h.shape[:-1] + (3, 3))
    out[..., 0, 0] = -wy - wz
    out[..., 0, 1] = -hz
    out[..., 0, 2] = hy
    out[..., 1, 0] = hz
    out[..., 1, 1] = -wx - wz
    out[..., 1, 2] = -hx
    out[..., 2, 0] = -hy
    out[..., 2, 1] = hx
    out[..., 2, 2] = -wx - wy
    return 2.0 * out


@dataclass(frozen=True)
class Liouvillian:
    matrix: np.ndarray

    @property
    def trace(self):
        return float(np.trace(self.matrix))

    def precession_axis(self):
        """Unit vector of the antisymmetric part (the h direction),
        or None if the antisymmetric part vanishes."""
        a = 0.5 * (self.matrix - self.matrix.T)
        v = np.array([a[2, 1], a[0, 2], a[1, 0]])
        n = np.linalg.norm(v)
        return v / n if n > 0 else None


def build_liouvillian(k, p: QahParams, w: NoiseStrengths) -> Liouvillian:
    h = bloch_vector(k, p).as_array()
    return Liouvillian(liouvillian_matrix(h, w))


@dataclass
class EigenSystem:
    """Spectral data of one Liouvillian.

    Mode alpha decays as exp(-lambda_alpha t) with L s_alpha^R =
    -lambda_alpha s_alpha^R.  Ordering: index 0 is the real mode
    (lambda0), indices 1, 2 the pair (lambda1 + i omega, lambda1 -
    i omega).  In the overdamped case all three rates are real, omega
    = 0, and indices 1, 2 hold the two remaining real modes.  left[i]
    . right[j] = delta_ij with the plain (unconjugated) dot product.
    """

    lambdas: np.ndarray          # (3,) complex decay rates
    right: np.ndarray            # (3, 3), rows are right eigenvectors
    left: np.ndarray             # (3, 3), rows are left eigenvectors
    overdamped: bool
    cond: float

    @property
    def lambda0(self):
        return float(self.lambdas[0].real)

    @property
    def lambda1(self):
        return float(self.lambdas[1].real)

    @property
    def omega(self):
        return float(abs(self.lambdas[1].imag))

    def biorthonormality_residual(self):
        return float(np.abs(self.left @ self.right.T - np.eye(3)).max())


def _pairwise_min_angle(vectors):
    """Smallest principal angle among three (possibly complex) vectors."""
    best = np.pi / 2
    for a in range(3):
        for b in range(a + 1, 3):
            va, vb = vectors[:, a], vectors[:, b]
            c = abs(np.vdot(va, vb)) / (np.linalg.norm(va) * np.linalg.norm(vb))
            best = min(best, float(np.arccos(min(c, 1.0))))
    return best


def eigensystem(L: Liouvillian, tol: float = 1e-3) -> EigenSystem:
    """Solve and classify the spectrum of one Liouvillian.

    Raises Defective when the eigenvector matrix condition number
    exceeds the coalescence threshold while the oscillation frequency is
    below tol: that is an exceptional point and the mode expansion does
    not exist there.
    """
    m = np.asarray(L.matrix, dtype=float)
    ev, vec = np.linalg.eig(m)
    cond = float(np.linalg.cond(vec))
    lam = -ev   # decay-rate convention
    omega_raw = float(np.abs(lam.imag).max())
    if cond > _COND_DEFECTIVE and omega_raw < tol:
        raise Defective(
            f"eigenvectors coalesce (cond = {cond:.2e}, omega = {omega_raw:.2e})"
        )

    real_mask = np.abs(lam.imag) < _IMAG_TOL
    if real_mask.all():
        # Overdamped: label lambda0 by overlap with the precession axis,
        # ties broken by the smallest decay rate.
        axis = L.precession_axis()
        order = np.argsort(lam.real)
        if axis is not None:
            overlaps = [
                abs(np.dot(vec[:, i].real, axis)) / np.linalg.norm(vec[:, i].real)
                for i in range(3)
            ]
            i0 = int(np.lexsort((lam.real, -np.round(overlaps, 12)))[0])
        else:
            i0 = int(order[0])
        rest = sorted((i for i in range(3) if i != i0), key=lambda i: lam[i].real)
        idx = [i0, rest[0], rest[1]]
        overdamped = True
    else:
        i0 = int(np.argmin(np.abs(lam.imag)))
        pair = [i for i in range(3) if i != i0]
        # lambda1 + i omega first: its mode evolves as e^{-i omega t}
        ip = pair[0] if lam[pair[0]].imag > 0 else pair[1]
        im = pair[1] if ip == pair[0] else pair[0]
        idx = [i0, ip, im]
        overdamped = False

    right = vec[:, idx].T
    left = np.linalg.inv(vec)[idx, :]
    return EigenSystem(
        lambdas=lam[idx], right=right, left=left, overdamped=overdamped, cond=cond
    )


@dataclass
class ModeDecomposition:
    """Expansion s(t) = s0 e^{-lambda0 t} + s_plus e^{-(lambda1 + i omega) t}
    + s_minus e^{-(lambda1 - i omega) t}.

    In the overdamped variant (omega = 0, flagged) s_plus and s_minus
    are the two remaining real modes with their own rates in
    real_rates; otherwise s_minus = conj(s_plus) and real_rates is None.
    """

    s0: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
    lambda0: float
    lambda1: float
    omega: float
    overdamped: bool = False
    real_rates: tuple | None = None

    def evaluate(self, times):
        """Exact s(t) from the modes; (len(times), 3) real array, or (3,)
        for a scalar time."""
        t_in = np.asarray(times, dtype=float)
        t = t_in.reshape(-1)[:, None]
        if self.overdamped:
            ra, rb = self.real_rates
            out = (
                self.s0[None, :] * np.exp(-self.lambda0 * t)
                + self.s_plus.real[None, :] * np.exp(-ra * t)
                + self.s_minus.real[None, :] * np.exp(-rb * t)
            )
        else:
            out = self.s0[None, :] * np.exp(-self.lambda0 * t) + 2.0 * np.real(
                self.s_plus[None, :] * np.exp(-(self.lambda1 + 1j * self.omega) * t)
            )
        return out[0] if t_in.ndim == 0 else out

    def rescaled(self, times):
        """s-tilde(t): decay rates removed, oscillation kept."""
        t_in = np.asarray(times, dtype=float)
        t = t_in.reshape(-1)[:, None]
        if self.overdamped:
            const = self.s0 + self.s_plus.real + self.s_minus.real
            out = np.broadcast_to(const, (len(t), 3)).copy()
        else:
            out = self.s0[None, :] + 2.0 * np.real(
                self.s_plus[None, :] * np.exp(-1j * self.omega * t)
            )
        return out[0] if t_in.ndim == 0 else out


def mode_decomposition(L: Liouvillian, s_init) -> ModeDecomposition:
    """Project s_init on the Liouvillian eigenmodes.

    Coefficients are left-eigenvector overlaps: s_alpha = (s_alpha^L .
    s(0)) s_alpha^R.  Raises Defective at exceptional points.
    """
    es = eigensystem(L)
    s_init = np.asarray(s_init, dtype=float)
    coeff = es.left @ s_init
    modes = coeff[:, None] * es.right
    if es.overdamped:
        dec = ModeDecomposition(
            s0=modes[0].real,
            s_plus=modes[1],
            s_minus=modes[2],
            lambda0=es.lambda0,
            lambda1=min(es.lambdas[1].real, es.lambdas[2].real),
            omega=0.0,
            overdamped=True,
            real_rates=(float(es.lambdas[1].real), float(es.lambdas[2].real)),
        )
    else:
        dec = ModeDecomposition(
            s0=modes[0].real,
            s_plus=modes[1],
            s_minus=modes[2],
            lambda0=es.lambda0,
            lambda1=es.lambda1,
            omega=es.omega,
        )
    recon = dec.s0 + dec.s_plus + dec.s_minus
    if np.abs(recon.imag).max() > 1e-9 or np.abs(recon.real - s_init).max() > 1e-9:
        raise Defective("mode expansion failed to reproduce the initial state")
    return dec


def exact_evolution(k, p: QahParams, w: NoiseStrengths, s_init, times) -> SpinTrajectory:
    """s(t) = expm(L t) s(0); works at exceptional points too."""
    times = np.asarray(times, dtype=float)
    if len(times) and (np.any(np.diff(times) <= 0) or times[0] < 0):
        raise ValueError("times must be sorted, distinct and >= 0")
    L = build_liouvillian(k, p, w).matrix
    s_init = np.asarray(s_init, dtype=float)
    out = np.empty((len(times), 3))
    for i, t in enumerate(times):
        out[i] = expm(L * t) @ s_init
    kx, ky = (k.kx, k.ky) if hasattr(k, "kx") else (float(k[0]), float(k[1]))
    return SpinTrajectory(momentum=(kx, ky), times=times, polarization=out)


def oscillation_frequency(k, p: QahParams, w: NoiseStrengths) -> float:
    """|Im| of the oscillating eigenvalue pair; 0 for a real spectrum."""
    L = build_liouvillian(k, p, w).matrix
    ev = np.linalg.eigvals(L)
    return float(np.abs(ev.imag).max())


def omega_map(p: QahParams, w: NoiseStrengths, kx_values, ky_values):
    """Vectorized oscillation frequency on a momentum grid."""
    kxg, kyg = np.meshgrid(kx_values, ky_values, indexing="ij")
    h = bloch_field(kxg, kyg, p)
    L = liouvillian_matrix(h, w)
    ev = np.linalg.eigvals(L.reshape(-1, 3, 3)).reshape(L.shape[:-2] + (3,))
    return np.abs(ev.imag).max(axis=-1)


@dataclass
class EpCluster:
    """Connected group of grid cells with vanishing oscillation frequency.

    centroid : (2,) mean momentum of the member cells
    cells : (m, 2) member momenta
    radius : max distance centroid -> member plus one cell diagonal
    min_angle : smallest eigenvector pairing angle found on the members
        (rad); near zero confirms genuine coalescence on the cluster
        boundary, tiny at an exactly defective cell
    charge_coincident : a topological charge lies within the cluster
    """

    centroid: np.ndarray
    cells: np.ndarray
    radius: float
    min_angle: float
    charge_coincident: bool

    @property
    def n_cells(self):
        return len(self.cells)

    def distance_to(self, points):
        """Min distance from any member cell to any of the given points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = np.linalg.norm(self.cells[:, None, :] - pts[None, :, :], axis=-1)
        return float(d.min())


def find_exceptional_points(p: QahParams, w: NoiseStrengths, grid_n: int = 201,
                            tol: float = 1e-3):
    """Locate exceptional regions on a full-zone grid.

    A cell belongs to the exceptional set when its oscillation frequency
    is below tol (the spectrum has gone real there or is about to).
    Cells are grouped by 8-connectivity.  The reported min_angle is the
    smallest principal angle between any two eigenvectors over the
    member cells: it approaches zero at the coalescence boundary and is
    numerically zero at exactly defective momenta.

    Returns a list of EpCluster, empty when the whole grid oscillates.
    """
    if grid_n < 32:
        raise ValueError("grid_n must be >= 32")
    ks = np.linspace(-np.pi, np.pi, grid_n)
    om = omega_map(p, w, ks, ks)
    mask = om < tol
    if not mask.any():
        return []
    labels, n_lab = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    cell_diag = np.sqrt(2.0) * (ks[1] - ks[0])
    charges = charge_momenta()
    clusters = []
    for lab in range(1, n_lab + 1):
        ii, jj = np.where(labels == lab)
        cells = np.stack([ks[ii], ks[jj]], axis=-1)
        centroid = cells.mean(axis=0)
        radius = float(np.linalg.norm(cells - centroid, axis=-1).max() + cell_diag)
        min_angle = np.pi / 2
        for kx, ky in cells:
            h = bloch_field(kx, ky, p)
            _, vec = np.linalg.eig(liouvillian_matrix(h, w))
            min_angle = min(min_angle, _pairwise_min_angle(vec))
        # charges on the zone edge also appear at their mirror momenta
        images = []
        for ch in charges:
            for sx in ((1.0, -1.0) if abs(abs(ch[0]) - np.pi) < 1e-12 else (1.0,)):
                for sy in ((1.0, -1.0) if abs(abs(ch[1]) - np.pi) < 1e-12 else (1.0,)):
                    images.append([sx * ch[0], sy * ch[1]])
        images = np.array(images)
        dch = np.linalg.norm(cells[:, None, :] - images[None, :, :], axis=-1)
        charge_hit = bool(dch.min() <= cell_diag)
        clusters.append(
            EpCluster(centroid=centroid, cells=cells, radius=radius,
                      min_angle=float(min_angle), charge_coincident=charge_hit)
        )
    clusters.sort(key=lambda c: -c.n_cells)
    return clusters
