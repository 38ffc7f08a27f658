"""Topological diagnostics on momentum-grid textures.

Everything downstream of the texture: deformed band-inversion curves,
the dynamical field and its winding W, Liouvillian polarizations and
the exceptional-point winding N_E, transition classification, and the
sweet-spot checks.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .contours import marching_squares
from .errors import (
    Defective, DegenerateField, Masked, NoDbis, OpenContour, SingularOnLoop,
    ZeroVector,
)
from .liouville import (
    S_INIT, EpCluster, Liouvillian, build_liouvillian,
    find_exceptional_points, liouvillian_matrix, mode_decomposition,
    omega_map,
)
from .mode_fitting import texture_average
from .model import NoiseStrengths, QahParams, bloch_field, charge_momenta

__all__ = [
    "TextureGrid", "DbisCurve", "DynamicalField", "LPolarization", "LoopS",
    "TransitionReport", "oracle_texture", "extract_dbis", "dynamical_field",
    "winding_W", "liouvillian_polarization", "winding_NE",
    "classify_transition", "sweet_spot_literal", "sweet_spot_scan",
    "omega_min_on_dbis", "L_X", "L_Y", "L_Z",
]

# Spin-1 matrices of the three-level picture of the Liouvillian.
L_X = np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]])
L_Y = np.array([[0, 0, 1j], [0, 0, 0], [-1j, 0, 0]])
L_Z = 1j * (L_Y @ L_X - L_X @ L_Y)

_TWO_PI = 2.0 * np.pi


def _is_periodic(axis_values):
    return abs((axis_values[-1] - axis_values[0]) - _TWO_PI) < 1e-9


@dataclass
class TextureGrid:
    """Time-averaged rescaled polarization on a momentum grid.

    s_bar : (nx, ny, 3); NaN rows where no value exists.
    defined_mask : True where the dynamical field makes sense (the fit
        oscillates and the modes are non-defective).
    axis : (nx, ny, 3) unit vectors onto which s_bar is projected to
        locate the dBIS.  Defaults to the z axis; the oracle and run
        pipelines store the local Bloch direction, which reduces to the
        same thing on the surface itself but crosses zero transversally
        even at vanishing noise.
    omega : (nx, ny) oscillation frequencies (0 where overdamped).
    norm_tolerance : when set, construction rejects grids with
        |s_bar| > 1 + norm_tolerance anywhere.  Off by default: the
        bound holds wherever the mode expansion is well conditioned,
        but cells near an exceptional point legitimately exceed it
        (the mode coefficients diverge as the eigenvectors coalesce),
        and those textures are exactly the ones the strong-noise
        pipeline must accept.
    """

    kx_values: np.ndarray
    ky_values: np.ndarray
    s_bar: np.ndarray
    defined_mask: np.ndarray
    axis: np.ndarray = None
    omega: np.ndarray = None
    norm_tolerance: float | None = None

    def __post_init__(self):
        self.kx_values = np.asarray(self.kx_values, dtype=float)
        self.ky_values = np.asarray(self.ky_values, dtype=float)
        self.s_bar = np.asarray(self.s_bar, dtype=float)
        nx, ny = len(self.kx_values), len(self.ky_values)
        if self.s_bar.shape != (nx, ny, 3):
            raise ValueError("s_bar must have shape (nx, ny, 3)")
        self.defined_mask = np.asarray(self.defined_mask, dtype=bool)
        if self.axis is None:
            self.axis = np.broadcast_to(
                np.array([0.0, 0.0, 1.0]), (nx, ny, 3)
            ).copy()
        if self.omega is None:
            self.omega = np.full((nx, ny), np.nan)
        if self.norm_tolerance is not None:
            norms = np.linalg.norm(np.nan_to_num(self.s_bar), axis=-1)
            if norms.max() > 1.0 + self.norm_tolerance:
                raise ValueError(
                    f"|s_bar| = {norms.max():.3f} exceeds 1 + tolerance"
                )

    @property
    def shape(self):
        return len(self.kx_values), len(self.ky_values)

    def locator_field(self):
        """Projection of s_bar on the per-cell axis; NaN where masked."""
        phi = np.sum(self.s_bar * self.axis, axis=-1)
        phi = np.where(self.defined_mask, phi, np.nan)
        return phi

    def _wrap(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float)).copy()
        for col, vals in ((0, self.kx_values), (1, self.ky_values)):
            if _is_periodic(vals):
                pts[:, col] = vals[0] + np.mod(pts[:, col] - vals[0], _TWO_PI)
        return pts

    def interpolate(self, points, component):
        """Bilinear interpolation of one s_bar component (or 'omega')."""
        values = self.omega if component == "omega" else self.s_bar[..., component]
        itp = RegularGridInterpolator(
            (self.kx_values, self.ky_values), values,
            bounds_error=False, fill_value=np.nan,
        )
        return itp(self._wrap(points))


@dataclass
class DbisCurve:
    """One deformed band-inversion component.

    points : (m, 2) ordered polyline; closed curves repeat the first
        point and run counterclockwise.
    normals : (m, 2) outward unit normals.
    closed : whether the component closes.
    n_mask_breaks : endpoints cut by undefined (overdamped/defective)
        cells; nonzero marks a singular interruption of the surface.
    threshold_violations : curve points where some |s_bar| component
        interpolates above the dBIS-zero threshold.
    """

    points: np.ndarray
    normals: np.ndarray
    closed: bool
    n_mask_breaks: int
    threshold_violations: int


@dataclass
class DynamicalField:
    """Unit field g on a dBIS curve; rows are NaN where masked."""

    curve: DbisCurve
    g: np.ndarray
    mask: np.ndarray  # True where undefined

    @property
    def n_masked(self):
        return int(self.mask.sum())


@dataclass(frozen=True)
class LPolarization:
    lx: float
    ly: float
    lz: float

    def as_array(self):
        return np.array([self.lx, self.ly, self.lz])

    @property
    def planar_norm(self):
        return float(np.hypot(self.lx, self.ly))


@dataclass(frozen=True)
class LoopS:
    """Circular loop (x0 + r cos theta, y0 + r sin theta)."""

    center: tuple
    radius: float
    n_samples: int = 128

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.n_samples < 16:
            raise ValueError("n_samples must be >= 16")

    def points(self):
        theta = np.linspace(0.0, _TWO_PI, self.n_samples, endpoint=False)
        return np.stack(
            [self.center[0] + self.radius * np.cos(theta),
             self.center[1] + self.radius * np.sin(theta)],
            axis=-1,
        )


def oracle_texture(p: QahParams, w: NoiseStrengths, kx_values, ky_values) -> TextureGrid:
    """Exact-route texture: mode decomposition and full-period average
    per grid node.  Overdamped and defective nodes are marked undefined;
    overdamped nodes still carry their (constant) rescaled value."""
    kx_values = np.asarray(kx_values, dtype=float)
    ky_values = np.asarray(ky_values, dtype=float)
    nx, ny = len(kx_values), len(ky_values)
    s_bar = np.full((nx, ny, 3), np.nan)
    defined = np.zeros((nx, ny), dtype=bool)
    omega = np.zeros((nx, ny))
    axis = np.zeros((nx, ny, 3))
    for i, kx in enumerate(kx_values):
        for j, ky in enumerate(ky_values):
            h = bloch_field(kx, ky, p)
            hn = np.linalg.norm(h)
            axis[i, j] = h / hn if hn > 0 else np.array([0.0, 0.0, 1.0])
            L = Liouvillian(liouvillian_matrix(h, w))
            try:
                dec = mode_decomposition(L, S_INIT)
            except Defective:
                omega[i, j] = 0.0
                continue
            s_bar[i, j] = texture_average(dec)
            omega[i, j] = dec.omega
            defined[i, j] = not dec.overdamped
    return TextureGrid(kx_values=kx_values, ky_values=ky_values, s_bar=s_bar,
                       defined_mask=defined, axis=axis, omega=omega)


def omega_min_on_dbis(grid: TextureGrid) -> float:
    """Smallest oscillation frequency at the dBIS, on-grid convention.

    A node is dBIS-adjacent when the locator field changes sign along
    one of its grid edges (both ends defined); the returned value is the
    minimum omega over those nodes.  This samples the surface exactly
    where a measurement on the discrete momentum lattice would.

    Raises NoDbis when no edge crosses zero.
    """
    phi = grid.locator_field()
    adj = np.zeros(grid.shape, dtype=bool)
    for axis in (0, 1):
        a = phi if axis == 0 else phi.T
        cross = (a[:-1, :] * a[1:, :]) < 0
        m = np.zeros_like(a, dtype=bool)
        m[:-1, :] |= cross
        m[1:, :] |= cross
        adj |= m if axis == 0 else m.T
    if not adj.any():
        raise NoDbis("no zero-crossing edge on the grid")
    return float(np.nanmin(np.where(adj, grid.omega, np.nan)))


def _polyline_normals(points, closed):
    """Outward unit normals from adjacent-segment tangents.

    For a counterclockwise closed polyline the right-hand rotation of
    the tangent, (t_y, -t_x), points outward.
    """
    pts = points[:-1] if closed else points
    n = len(pts)
    tangents = np.empty((n, 2))
    for i in range(n):
        if closed:
            tangents[i] = pts[(i + 1) % n] - pts[(i - 1) % n]
        else:
            lo, hi = max(i - 1, 0), min(i + 1, n - 1)
            tangents[i] = pts[hi] - pts[lo]
    norms = np.linalg.norm(tangents, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    tangents /= norms
    normals = np.stack([tangents[:, 1], -tangents[:, 0]], axis=-1)
    if closed:
        normals = np.vstack([normals, normals[:1]])
    return normals


def extract_dbis(grid: TextureGrid, threshold: float = 0.05):
    """Locate the dBIS as zero contours of the projected texture.

    The located field is s_bar . axis (the plain s_bar_z for the default
    axis).  Undefined nodes interrupt the contours; the fragments are
    returned open with their break count.  Full-period momentum axes are
    treated as periodic so a surface around the zone corner still closes.

    Raises NoDbis when nothing crosses zero and OpenContour when a
    contour runs into a non-periodic grid boundary.
    """
    nx, ny = grid.shape
    if nx < 8 or ny < 8:
        raise ValueError("grid must be at least 8x8")
    phi = grid.locator_field()
    found = marching_squares(
        grid.kx_values, grid.ky_values, phi,
        node_mask=~grid.defined_mask,
        periodic_x=_is_periodic(grid.kx_values),
        periodic_y=_is_periodic(grid.ky_values),
    )
    if not found:
        raise NoDbis("the projected texture has no zero crossing")
    if any(c.boundary_hit for c in found):
        raise OpenContour("a dBIS contour leaves the grid window")
    curves = []
    for c in found:
        normals = _polyline_normals(c.points, c.closed)
        violations = 0
        for comp in range(3):
            vals = grid.interpolate(c.points, comp)
            violations = max(violations, int(np.sum(np.abs(vals) > threshold)))
        curves.append(DbisCurve(points=c.points, normals=normals, closed=c.closed,
                                n_mask_breaks=c.n_mask_breaks,
                                threshold_violations=violations))
    return curves


def dynamical_field(grid: TextureGrid, curve: DbisCurve, step=None) -> DynamicalField:
    """g = normalized normal derivative of (s_bar_x, s_bar_y) on the curve.

    Central differences along the local outward normal, step half the
    finer grid spacing by default.  Points are masked where the stencil
    leaves the grid or touches undefined cells, or where the raw
    gradient vanishes.  Raises DegenerateField when more than 20% of the
    curve is masked.
    """
    if step is None:
        step = 0.5 * min(
            np.diff(grid.kx_values).min(), np.diff(grid.ky_values).min()
        )
    pts = curve.points
    plus = pts + step * curve.normals
    minus = pts - step * curve.normals
    g = np.full((len(pts), 2), np.nan)
    for comp in (0, 1):
        g[:, comp] = (
            grid.interpolate(plus, comp) - grid.interpolate(minus, comp)
        ) / (2.0 * step)
    raw_norm = np.linalg.norm(g, axis=1)
    mask = ~np.isfinite(raw_norm) | (raw_norm < 1e-8)
    g[~mask] /= raw_norm[~mask, None]
    g[mask] = np.nan
    if mask.sum() > 0.2 * len(pts):
        raise DegenerateField(
            f"dynamical field undefined at {mask.sum()}/{len(pts)} curve points"
        )
    return DynamicalField(curve=curve, g=g, mask=mask)


def _closed_winding(angles):
    """Turns accumulated by a cyclic angle sequence (first != last)."""
    diffs = np.diff(np.concatenate([angles, angles[:1]]))
    return float(np.sum(np.angle(np.exp(1j * diffs)))) / _TWO_PI


def winding_W(fld: DynamicalField, return_residual: bool = False):
    """Integer winding of g around the closed dBIS curve.

    Raises Masked if the field has undefined points (that absence is the
    transition signal, not a numerical accident).  Residuals above 0.05
    of a turn emit a precision warning.
    """
    if fld.n_masked:
        raise Masked(f"{fld.n_masked} undefined field points on the curve")
    if not fld.curve.closed:
        raise Masked("winding requested on an open dBIS fragment")
    g = fld.g[:-1]  # drop duplicate closing vertex
    angles = np.arctan2(g[:, 1], g[:, 0])
    turns = _closed_winding(angles)
    value = int(np.rint(turns))
    residual = abs(turns - value)
    if residual > 0.05:
        warnings.warn(f"winding residual {residual:.3f} of a turn", stacklevel=2)
    return (value, residual) if return_residual else value


def liouvillian_polarization(s_plus) -> LPolarization:
    """<L_alpha> = s_plus^dagger L_alpha s_plus on the normalized mode.

    Invariant under s_plus -> c s_plus for any nonzero complex c.
    Raises ZeroVector when |s_plus| is numerically zero.
    """
    v = np.asarray(s_plus, dtype=complex)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ZeroVector("mode vector too small to normalize")
    v = v / n
    out = [float(np.real(np.vdot(v, M @ v))) for M in (L_X, L_Y, L_Z)]
    return LPolarization(*out)


def winding_NE(p: QahParams, w: NoiseStrengths, loop: LoopS,
               singular_tol: float = 1e-6, return_residual: bool = False):
    """Winding of (<L_x>, <L_y>) around the loop.

    Samples the mode decomposition along the circle; raises
    SingularOnLoop when the planar polarization vanishes at a sample
    (overdamped or charge-crossing loop) and propagates Defective from
    exceptional samples.
    """
    angles = []
    for kx, ky in loop.points():
        try:
            dec = mode_decomposition(build_liouvillian((kx, ky), p, w), S_INIT)
            lp = liouvillian_polarization(dec.s_plus)
        except ZeroVector as exc:
            raise SingularOnLoop(f"zero mode vector at ({kx:.3f}, {ky:.3f})") from exc
        if dec.overdamped or lp.planar_norm < singular_tol:
            raise SingularOnLoop(
                f"planar polarization {lp.planar_norm:.2e} at ({kx:.3f}, {ky:.3f})"
            )
        angles.append(np.arctan2(lp.ly, lp.lx))
    turns = _closed_winding(np.array(angles))
    value = int(np.rint(turns))
    residual = abs(turns - value)
    if residual > 0.05:
        warnings.warn(f"winding residual {residual:.3f} of a turn", stacklevel=2)
    return (value, residual) if return_residual else value


def _loop_all_oscillatory(p, w, center, radius, tol=1e-3, n=256):
    theta = np.linspace(0.0, _TWO_PI, n, endpoint=False)
    kx = center[0] + radius * np.cos(theta)
    ky = center[1] + radius * np.sin(theta)
    h = bloch_field(kx, ky, p)
    ev = np.linalg.eigvals(liouvillian_matrix(h, w))
    return bool(np.abs(ev.imag).max(axis=-1).min() > tol)


def _auto_loop(p, w, cluster: EpCluster, start_radius=None, max_growth=8):
    """Smallest validated circle around a cluster: every sample must
    oscillate and no foreign charge may fall inside."""
    charges = charge_momenta()
    foreign = charges[
        np.linalg.norm(charges - cluster.centroid, axis=1) > cluster.radius
    ]
    r = start_radius if start_radius is not None else max(1.3 * cluster.radius, 0.15)
    for _ in range(max_growth):
        encloses_foreign = foreign.size and (
            np.linalg.norm(foreign - cluster.centroid, axis=1).min() < r
        )
        if not encloses_foreign and _loop_all_oscillatory(p, w, cluster.centroid, r):
            return LoopS(center=tuple(cluster.centroid), radius=float(r))
        r *= 1.3
    raise SingularOnLoop(
        f"no clean loop found around cluster at {np.round(cluster.centroid, 3)}"
    )


@dataclass
class TransitionReport:
    phase: str              # "stable" | "type_I" | "type_II" | "trivial"
    ep_clusters: list
    dbis_closed: bool
    dbis_interrupted: bool
    ep_dbis_distance: float         # min over clusters, inf if none
    ne_windings: dict               # cluster index -> N_E (where computable)
    notes: list = field(default_factory=list)


def classify_transition(p: QahParams, w: NoiseStrengths, grid_n: int = 101,
                        ep_grid_n: int = 201) -> TransitionReport:
    """Phase verdict from the oracle pipeline on the full zone.

    stable: no exceptional cluster touches the dBIS.  type_II: a
    charge-coincident cluster touches a dBIS that connects to it, with
    N_E != 0.  type_I: exceptional clusters interrupt or touch the dBIS
    away from charges, with N_E = 0.  trivial: no dBIS at all.
    """
    ks = np.linspace(-np.pi, np.pi, grid_n)
    grid = oracle_texture(p, w, ks, ks)
    clusters = find_exceptional_points(p, w, grid_n=ep_grid_n)
    notes = []
    try:
        curves = extract_dbis(grid)
    except NoDbis:
        return TransitionReport(
            phase="trivial", ep_clusters=clusters, dbis_closed=False,
            dbis_interrupted=False, ep_dbis_distance=float("inf"),
            ne_windings={}, notes=["no dBIS on the grid"],
        )
    all_points = np.vstack([c.points for c in curves])
    dbis_closed = all(c.closed for c in curves)
    dbis_interrupted = any(c.n_mask_breaks > 0 for c in curves)
    cell = np.sqrt(2.0) * _TWO_PI / (ep_grid_n - 1)
    texture_cell = np.sqrt(2.0) * _TWO_PI / (grid_n - 1)
    touch_tol = 2.0 * max(cell, texture_cell)

    distances = [cl.distance_to(all_points) for cl in clusters]
    ep_dbis_distance = float(min(distances)) if distances else float("inf")
    touching = [
        cl for cl, d in zip(clusters, distances) if d <= touch_tol
    ]
    ne = {}
    if not touching:
        phase = "stable"
        if clusters:
            notes.append("exceptional clusters exist but stay off the dBIS")
    else:
        charge_hit = [cl for cl in touching if cl.charge_coincident]
        target = charge_hit[0] if charge_hit else max(touching, key=lambda c: c.n_cells)
        try:
            loop = _auto_loop(p, w, target)
            ne[clusters.index(target)] = winding_NE(p, w, loop)
        except (SingularOnLoop, Defective) as exc:
            notes.append(f"N_E loop failed: {exc}")
        if charge_hit and ne.get(clusters.index(target), 0) != 0:
            phase = "type_II"
        else:
            phase = "type_I"
    return TransitionReport(
        phase=phase, ep_clusters=clusters, dbis_closed=dbis_closed,
        dbis_interrupted=dbis_interrupted, ep_dbis_distance=ep_dbis_distance,
        ne_windings=ne, notes=notes,
    )


def sweet_spot_literal(p: QahParams, w: NoiseStrengths) -> bool:
    """The printed inequality for noise-insensitive dBIS topology.

    lower = (wy - wx) xi0^2 / xi_so^2 - 2 |xi_so| < wz - wx <
    (wy - wx) xi0^2 / xi_so^2 + 2 |xi_so| = upper, strict on both sides
    (the max/min wrappers of the printed form act on singletons).
    """
    if p.xi_so == 0:
        raise ValueError("xi_so must be nonzero")
    base = (w.wy - w.wx) * p.xi0 ** 2 / p.xi_so ** 2
    lower = base - 2.0 * abs(p.xi_so)
    upper = base + 2.0 * abs(p.xi_so)
    return bool(lower < w.wz - w.wx < upper)


def sweet_spot_scan(p: QahParams, w_direction: NoiseStrengths, magnitudes,
                    grid_n: int = 101):
    """Operational stability scan along a noise direction.

    For each magnitude m the oracle pipeline runs at w = m * direction;
    dbis_stable reports a closed, uninterrupted dBIS and ep_on_dbis
    whether any exceptional cluster touches it.
    """
    mags = list(magnitudes)
    if not mags or any(m <= 0 for m in mags) or sorted(mags) != mags:
        raise ValueError("magnitudes must be non-empty, positive and sorted")
    ks = np.linspace(-np.pi, np.pi, grid_n)
    cell = np.sqrt(2.0) * _TWO_PI / (grid_n - 1)
    out = []
    for m in mags:
        w = w_direction.scaled(m)
        grid = oracle_texture(p, w, ks, ks)
        clusters = find_exceptional_points(p, w, grid_n=max(grid_n, 101))
        entry = {"magnitude": float(m), "dbis_stable": False, "ep_on_dbis": False}
        try:
            curves = extract_dbis(grid)
        except NoDbis:
            out.append(entry)
            continue
        pts = np.vstack([c.points for c in curves])
        entry["dbis_stable"] = all(c.closed for c in curves) and not any(
            c.n_mask_breaks for c in curves
        )
        if clusters:
            entry["ep_on_dbis"] = bool(
                min(cl.distance_to(pts) for cl in clusters) <= 2.0 * cell
            )
        out.append(entry)
    return out
