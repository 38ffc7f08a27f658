"""Zero-level contour extraction on rectilinear grids.

Marching squares with linear interpolation on cell edges.  Supports node
masks (cells touching a masked node are not traversed, so contours break
into open fragments there) and periodic axes (fragments are stitched
across the seam and coordinates unwrapped, so a loop encircling a zone
corner comes back as one closed polyline).
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["Contour", "marching_squares"]


@dataclass
class Contour:
    """One extracted level-set component.

    points : (m, 2) array of (x, y) vertices; closed contours repeat the
        first vertex at the end.  On periodic axes coordinates are
        unwrapped, so consecutive vertices are always close even when the
        polyline crosses the seam.
    closed : first and last vertex coincide.
    boundary_hit : an endpoint lies on a non-periodic grid boundary.
    n_mask_breaks : endpoints produced by masked cells (0, 1 or 2).
    """

    points: np.ndarray
    closed: bool
    boundary_hit: bool
    n_mask_breaks: int


def _cell_segments(sb, sr, st, sl, center_positive):
    """Edge pairings for one cell.

    Arguments are the sign bits (value > level) of the bottom-left,
    bottom-right, top-right and top-left corners; returns pairs drawn
    from the edge labels 'b', 'r', 't', 'l'.  Saddles are disambiguated
    by the sign of the cell-center average.
    """
    idx = (sb << 0) | (sr << 1) | (st << 2) | (sl << 3)
    table = {
        0: [], 15: [],
        1: [("l", "b")], 14: [("l", "b")],
        2: [("b", "r")], 13: [("b", "r")],
        4: [("r", "t")], 11: [("r", "t")],
        8: [("t", "l")], 7: [("t", "l")],
        3: [("l", "r")], 12: [("l", "r")],
        6: [("b", "t")], 9: [("b", "t")],
    }
    if idx in table:
        return table[idx]
    # Saddle: corners alternate.  Connect crossings so that the center
    # stays on the majority side.
    if idx == 5:  # bottom-left and top-right positive
        return [("l", "t"), ("b", "r")] if center_positive else [("l", "b"), ("t", "r")]
    # idx == 10: bottom-right and top-left positive
    return [("l", "b"), ("t", "r")] if center_positive else [("l", "t"), ("b", "r")]


def marching_squares(xs, ys, values, level=0.0, node_mask=None,
                     periodic_x=False, periodic_y=False):
    """Extract the `values == level` contours.

    Parameters
    ----------
    xs, ys : strictly increasing 1-D coordinate arrays.
    values : (len(xs), len(ys)) field samples.
    node_mask : optional boolean array, True where the field is
        undefined.  NaN values are treated as masked.
    periodic_x, periodic_y : identify the first and last grid line of
        the axis.  Requires the endpoint samples to agree (the caller
        supplies a periodic field sampled on a full period).

    Returns
    -------
    list[Contour], closed components first, each closed one oriented
    counterclockwise.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    v = np.asarray(values, dtype=float)
    if v.shape != (len(xs), len(ys)):
        raise ValueError("values shape must be (len(xs), len(ys))")
    masked = np.isnan(v)
    if node_mask is not None:
        masked = masked | np.asarray(node_mask, dtype=bool)

    nx, ny = len(xs), len(ys)
    mx = nx - 1 if periodic_x else nx   # number of distinct columns
    my = ny - 1 if periodic_y else ny
    px = xs[-1] - xs[0]                 # period lengths (if periodic)
    py = ys[-1] - ys[0]

    def node(i, j):
        return (i % mx if periodic_x else i), (j % my if periodic_y else j)

    def val(i, j):
        i2, j2 = node(i, j)
        return v[i2, j2]

    def is_masked(i, j):
        i2, j2 = node(i, j)
        return masked[i2, j2]

    def coord(i, j):
        # Base coordinates; unwrapping happens after stitching.
        i2, j2 = node(i, j)
        return xs[i2], ys[j2]

    # Edge ids: ('h', i, j) joins nodes (i, j)-(i+1, j); ('v', i, j)
    # joins (i, j)-(i, j+1).  Indices canonicalized modulo the period.
    def edge_id(kind, i, j):
        return kind, (i % mx if periodic_x else i), (j % my if periodic_y else j)

    def edge_point(eid):
        kind, i, j = eid
        if kind == "h":
            a, b = val(i, j), val(i + 1, j)
            t = (level - a) / (b - a)
            x0, y0 = coord(i, j)
            x1, _ = coord(i + 1, j)
            if periodic_x and i + 1 >= mx:
                x1 = x0 + (xs[1] - xs[0])
            return x0 + t * (x1 - x0), y0
        a, b = val(i, j), val(i, j + 1)
        t = (level - a) / (b - a)
        x0, y0 = coord(i, j)
        _, y1 = coord(i, j + 1)
        if periodic_y and j + 1 >= my:
            y1 = y0 + (ys[1] - ys[0])
        return x0, y0 + t * (y1 - y0)

    n_cells_x = mx if periodic_x else nx - 1
    n_cells_y = my if periodic_y else ny - 1

    segments = []        # (eid_a, eid_b)
    adjacency = {}       # eid -> list of segment indices
    for ci in range(n_cells_x):
        for cj in range(n_cells_y):
            corners = [(ci, cj), (ci + 1, cj), (ci + 1, cj + 1), (ci, cj + 1)]
            if any(is_masked(i, j) for i, j in corners):
                continue
            vals = [val(i, j) for i, j in corners]
            sb_, sr_, st_, sl_ = (int(x > level) for x in vals)
            if sb_ == sr_ == st_ == sl_:
                continue
            local = {
                "b": edge_id("h", ci, cj),
                "t": edge_id("h", ci, cj + 1),
                "l": edge_id("v", ci, cj),
                "r": edge_id("v", ci + 1, cj),
            }
            center_positive = sum(vals) / 4.0 > level
            for ea, eb in _cell_segments(sb_, sr_, st_, sl_, center_positive):
                sid = len(segments)
                segments.append((local[ea], local[eb]))
                adjacency.setdefault(local[ea], []).append(sid)
                adjacency.setdefault(local[eb], []).append(sid)

    def on_boundary(eid):
        kind, i, j = eid
        if kind == "h":
            return (not periodic_y) and (j == 0 or j == ny - 1)
        return (not periodic_x) and (i == 0 or i == nx - 1)

    used = [False] * len(segments)

    def walk(start_edge):
        """Follow the chain of segments starting at start_edge."""
        path = [start_edge]
        current = start_edge
        while True:
            nxt = None
            for sid in adjacency[current]:
                if not used[sid]:
                    used[sid] = True
                    ea, eb = segments[sid]
                    nxt = eb if ea == current else ea
                    break
            if nxt is None:
                return path, False
            if nxt == start_edge:
                return path, True
            path.append(nxt)
            current = nxt

    def unwrap(points):
        pts = np.array(points, dtype=float)
        for axis, periodic, period in ((0, periodic_x, px), (1, periodic_y, py)):
            if not periodic:
                continue
            for k in range(1, len(pts)):
                delta = pts[k, axis] - pts[k - 1, axis]
                pts[k, axis] -= np.round(delta / period) * period
        return pts

    contours = []

    def emit(path, closed):
        pts = unwrap([edge_point(e) for e in path])
        # a crossing exactly on a shared node is emitted by both incident
        # edges; collapse the duplicates so every segment has finite length
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        pts = pts[keep]
        if closed and len(pts) > 1 and np.all(pts[0] == pts[-1]):
            pts = pts[:-1]
        if len(pts) < 2:
            return
        boundary = False
        mask_breaks = 0
        if closed:
            pts = np.vstack([pts, pts[:1]])
            # counterclockwise orientation
            x, y = pts[:, 0], pts[:, 1]
            area = 0.5 * np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])
            if area < 0:
                pts = pts[::-1].copy()
        else:
            for e in (path[0], path[-1]):
                if on_boundary(e):
                    boundary = True
                else:
                    mask_breaks += 1
        contours.append(Contour(points=pts, closed=closed,
                                boundary_hit=boundary,
                                n_mask_breaks=mask_breaks))

    # Open chains first: start from crossings with a single segment.
    for eid, sids in adjacency.items():
        if len(sids) == 1 and not used[sids[0]]:
            path, closed = walk(eid)
            emit(path, closed)
    # Remaining cycles.
    for sid in range(len(segments)):
        if not used[sid]:
            ea, _ = segments[sid]
            path, closed = walk(ea)
            emit(path, closed)

    contours.sort(key=lambda c: (not c.closed, -len(c.points)))
    return contours
