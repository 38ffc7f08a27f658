"""Static 2D quantum anomalous Hall model.

Bloch vector, equilibrium Chern number and the ideal (zero-noise)
band-inversion surface.  Energies are in kHz and times in ms throughout
the package, so kHz * ms = 1 and no 2*pi factors appear anywhere.
"""

import math
from dataclasses import dataclass

import numpy as np

from .contours import marching_squares
from .errors import EmptyBis, GapClosed, OpenContour

__all__ = [
    "QahParams", "NoiseStrengths", "Momentum", "BlochVector",
    "bloch_vector", "bloch_field", "charge_momenta",
    "chern_number", "ideal_bis",
]


@dataclass(frozen=True)
class QahParams:
    """Model couplings: spin-conserved hopping xi0, spin-flipped hopping
    xi_so, and the post-quench Zeeman field mz (all kHz)."""

    xi0: float
    xi_so: float
    mz: float

    def __post_init__(self):
        if not (self.xi0 > 0 and math.isfinite(self.xi0)):
            raise ValueError("xi0 must be positive and finite")
        if not (math.isfinite(self.xi_so) and math.isfinite(self.mz)):
            raise ValueError("xi_so and mz must be finite")


@dataclass(frozen=True)
class NoiseStrengths:
    """White-noise variance rates per spin axis (kHz)."""

    wx: float
    wy: float
    wz: float

    def __post_init__(self):
        for name in ("wx", "wy", "wz"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be >= 0 and finite")

    def as_array(self):
        return np.array([self.wx, self.wy, self.wz])

    @property
    def total(self):
        return self.wx + self.wy + self.wz

    def scaled(self, factor):
        return NoiseStrengths(factor * self.wx, factor * self.wy, factor * self.wz)


@dataclass(frozen=True)
class Momentum:
    """Crystal momentum, dimensionless, first Brillouin zone."""

    kx: float
    ky: float

    def __post_init__(self):
        if not (math.isfinite(self.kx) and math.isfinite(self.ky)):
            raise ValueError("momentum components must be finite")

    @staticmethod
    def wrap(kx, ky):
        """Clamp to the first Brillouin zone [-pi, pi]."""
        wrap1 = lambda k: ((k + np.pi) % (2 * np.pi)) - np.pi
        return Momentum(float(wrap1(kx)), float(wrap1(ky)))


@dataclass(frozen=True)
class BlochVector:
    hx: float
    hy: float
    hz: float

    def as_array(self):
        return np.array([self.hx, self.hy, self.hz])

    @property
    def norm(self):
        return math.sqrt(self.hx ** 2 + self.hy ** 2 + self.hz ** 2)


def _momentum_pair(k):
    if isinstance(k, Momentum):
        return k.kx, k.ky
    kx, ky = k
    return float(kx), float(ky)


def bloch_vector(k, p: QahParams) -> BlochVector:
    """h(k) = (xi_so sin kx, xi_so sin ky, mz - xi0 cos kx - xi0 cos ky)."""
    kx, ky = _momentum_pair(k)
    return BlochVector(
        p.xi_so * math.sin(kx),
        p.xi_so * math.sin(ky),
        p.mz - p.xi0 * math.cos(kx) - p.xi0 * math.cos(ky),
    )


def bloch_field(kx, ky, p: QahParams):
    """Vectorized Bloch vector; broadcasts kx, ky; returns (..., 3)."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    return np.stack(
        [
            p.xi_so * np.sin(kx),
            p.xi_so * np.sin(ky),
            p.mz - p.xi0 * np.cos(kx) - p.xi0 * np.cos(ky),
        ],
        axis=-1,
    )


def charge_momenta():
    """The four momenta with hx = hy = 0 (one per parity class).

    These are the singular points of every planar field built from the
    in-plane Bloch components; (pi, pi) represents the zone corner.
    """
    return np.array([[0.0, 0.0], [0.0, np.pi], [np.pi, 0.0], [np.pi, np.pi]])


def chern_number(p: QahParams, grid_n: int = 200, tol: float = 1e-8) -> int:
    """Chern number of the lower band of h(k) . sigma.

    Gauge-invariant lattice field-strength method: per-plaquette Berry
    flux from normalized link variables of the lower-band eigenvector,
    summed over the Brillouin zone.  The per-point gauge is chosen away
    from the eigenvector's null point, which the link products make
    irrelevant.

    Raises GapClosed when min_k |h| < tol (band touching).
    """
    if grid_n < 16:
        raise ValueError("grid_n must be >= 16")
    ks = -np.pi + 2 * np.pi * np.arange(grid_n) / grid_n
    kxg, kyg = np.meshgrid(ks, ks, indexing="ij")
    h = bloch_field(kxg, kyg, p)
    hnorm = np.linalg.norm(h, axis=-1)
    if hnorm.min() < tol:
        raise GapClosed(f"band touching: min |h| = {hnorm.min():.3e}")

    hx, hy, hz = h[..., 0], h[..., 1], h[..., 2]
    # Two gauges for the -|h| eigenvector; each is singular at one pole.
    u_a = np.stack([hz - hnorm, hx + 1j * hy], axis=-1)
    u_b = np.stack([-(hx - 1j * hy), hz + hnorm], axis=-1)
    na = np.linalg.norm(u_a, axis=-1)
    nb = np.linalg.norm(u_b, axis=-1)
    pick_a = (na >= nb)[..., None]
    u = np.where(pick_a, u_a, u_b)
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)

    def link(shifted):
        z = np.sum(np.conj(u) * shifted, axis=-1)
        return z / np.abs(z)

    ux = link(np.roll(u, -1, axis=0))
    uy = link(np.roll(u, -1, axis=1))
    flux = np.angle(
        ux * np.roll(uy, -1, axis=0) * np.conj(np.roll(ux, -1, axis=1)) * np.conj(uy)
    )
    c = flux.sum() / (2 * np.pi)
    c_int = int(np.rint(c))
    if abs(c - c_int) > 1e-6:
        raise GapClosed(f"non-integer lattice flux sum {c:.3e}; grid too coarse or gap closing")
    return c_int


def ideal_bis(p: QahParams, grid_n: int = 200):
    """Zero contours of hz(k), each an ordered closed polyline (m, 2).

    Periodic marching squares over the full Brillouin zone, so surfaces
    encircling the zone corner are returned closed (with coordinates
    unwrapped past +/- pi).  Raises EmptyBis when hz never changes sign.
    """
    ks = np.linspace(-np.pi, np.pi, grid_n + 1)
    kxg, kyg = np.meshgrid(ks, ks, indexing="ij")
    hzf = bloch_field(kxg, kyg, p)[..., 2]
    found = marching_squares(ks, ks, hzf, level=0.0,
                             periodic_x=True, periodic_y=True)
    curves = []
    for c in found:
        # a band touching hz = 0 at one point yields a zero-extent
        # polygon; that is not an inversion surface
        extent = c.points.max(axis=0) - c.points.min(axis=0)
        if np.hypot(*extent) < 1e-9:
            continue
        if not c.closed:
            raise OpenContour("band-inversion contour failed to close on the torus")
        curves.append(c.points)
    if not curves:
        raise EmptyBis(f"hz has no sign change for mz = {p.mz}")
    return curves
