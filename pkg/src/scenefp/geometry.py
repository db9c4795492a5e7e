"""Planar geometry: convex polygons, oriented boxes, and polyline walks.

Polygons are sequences of (x, y) vertex tuples. Helpers that care about
orientation expect counterclockwise order; `ensure_ccw` fixes input that
is wound the other way.
"""

import math

import numpy as np


def signed_area(poly):
    """Signed shoelace area, positive for counterclockwise vertices."""
    total = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return 0.5 * total


def polygon_area(poly):
    """Unsigned area of a simple polygon."""
    if len(poly) < 3:
        return 0.0
    return abs(signed_area(poly))


def ensure_ccw(poly):
    poly = [(float(x), float(y)) for x, y in poly]
    if signed_area(poly) < 0.0:
        poly.reverse()
    return poly


def is_convex(poly, tol=1e-9):
    """True when every turn along the boundary winds the same way."""
    n = len(poly)
    if n < 3:
        return False
    sign = 0.0
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        cx, cy = poly[(i + 2) % n]
        cr = (bx - ax) * (cy - by) - (by - ay) * (cx - bx)
        if abs(cr) <= tol:
            continue  # collinear corner, allowed
        s = math.copysign(1.0, cr)
        if sign == 0.0:
            sign = s
        elif s != sign:
            return False
    return True


def clip_convex(subject, clip):
    """Sutherland-Hodgman clip of a convex polygon by a convex CCW polygon.

    Returns the intersection polygon (possibly empty). Both inputs must be
    convex; the clip polygon must be counterclockwise.
    """
    output = [(float(x), float(y)) for x, y in subject]
    n = len(clip)
    for i in range(n):
        if not output:
            return []
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay

        inputs = output
        output = []
        px, py = inputs[-1]
        fp = ex * (py - ay) - ey * (px - ax)
        for qx, qy in inputs:
            fq = ex * (qy - ay) - ey * (qx - ax)
            if fq >= -1e-12:
                if fp < -1e-12:
                    u = fp / (fp - fq)
                    output.append((px + u * (qx - px), py + u * (qy - py)))
                output.append((qx, qy))
            elif fp >= -1e-12:
                u = fp / (fp - fq)
                output.append((px + u * (qx - px), py + u * (qy - py)))
            px, py, fp = qx, qy, fq
    return output


def convex_hull(points):
    """Convex hull of a small point set (monotone chain), CCW order."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return pts

    def build(seq):
        h = []
        for p in seq:
            while len(h) >= 2:
                cr = (h[-1][0] - h[-2][0]) * (p[1] - h[-2][1]) - (h[-1][1] - h[-2][1]) * (p[0] - h[-2][0])
                if cr <= 0:
                    h.pop()
                else:
                    break
            h.append(p)
        return h

    lower = build(pts)
    upper = build(reversed(pts))
    return lower[:-1] + upper[:-1]


def rect_corners(center, direction, half_length, half_width):
    """Corners of an oriented rectangle, counterclockwise.

    `direction` is the unit vector of the long axis.
    """
    cx, cy = float(center[0]), float(center[1])
    dx, dy = float(direction[0]), float(direction[1])
    nx, ny = -dy, dx
    lx, ly = dx * half_length, dy * half_length
    wx, wy = nx * half_width, ny * half_width
    return [
        (cx - lx - wx, cy - ly - wy),
        (cx + lx - wx, cy + ly - wy),
        (cx + lx + wx, cy + ly + wy),
        (cx - lx + wx, cy - ly + wy),
    ]


def point_in_convex(poly, point, tol=1e-9):
    """Point-in-polygon test for a convex CCW polygon (boundary counts)."""
    px, py = float(point[0]), float(point[1])
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        if (bx - ax) * (py - ay) - (by - ay) * (px - ax) < -tol:
            return False
    return True


def bounds(points):
    arr = np.asarray(points, dtype=float).reshape(-1, 2)
    return float(arr[:, 0].min()), float(arr[:, 1].min()), float(arr[:, 0].max()), float(arr[:, 1].max())


def bounds_overlap(b1, b2, pad=0.0):
    return not (
        b1[2] + pad < b2[0]
        or b2[2] + pad < b1[0]
        or b1[3] + pad < b2[1]
        or b2[3] + pad < b1[1]
    )


def first_polyline_crossing(path_a, path_b, tol=1e-12):
    """Earliest transversal crossing of two polylines.

    Candidates are ordered by arc length along path_a (ties broken by the
    arc along path_b). Parallel / collinear segment pairs never count as a
    crossing. Returns (point, arc_a, arc_b, dir_a, dir_b) with unit segment
    directions at the crossing, or None.
    """
    pa = np.asarray(path_a, dtype=float).reshape(-1, 2)
    pb = np.asarray(path_b, dtype=float).reshape(-1, 2)
    if len(pa) < 2 or len(pb) < 2:
        return None

    da = np.diff(pa, axis=0)
    db = np.diff(pb, axis=0)
    len_a = np.hypot(da[:, 0], da[:, 1])
    len_b = np.hypot(db[:, 0], db[:, 1])

    # s solves a0 + s*da = b0 + t*db per segment pair (broadcast grid)
    denom = da[:, None, 0] * db[None, :, 1] - da[:, None, 1] * db[None, :, 0]
    dx = pb[None, :-1, 0] - pa[:-1, None, 0]
    dy = pb[None, :-1, 1] - pa[:-1, None, 1]
    s_num = dx * db[None, :, 1] - dy * db[None, :, 0]
    t_num = dx * da[:, None, 1] - dy * da[:, None, 0]

    with np.errstate(divide="ignore", invalid="ignore"):
        s = s_num / denom
        t = t_num / denom
    valid = (np.abs(denom) > tol) & (s >= 0.0) & (s <= 1.0) & (t >= 0.0) & (t <= 1.0)
    if not valid.any():
        return None

    cum_a = np.concatenate([[0.0], np.cumsum(len_a)])
    cum_b = np.concatenate([[0.0], np.cumsum(len_b)])
    ii, jj = np.nonzero(valid)
    arcs_a = cum_a[ii] + s[ii, jj] * len_a[ii]
    arcs_b = cum_b[jj] + t[ii, jj] * len_b[jj]
    order = np.lexsort((arcs_b, arcs_a))
    k = order[0]
    i, j = int(ii[k]), int(jj[k])
    point = pa[i] + s[i, j] * da[i]
    dir_a = da[i] / len_a[i]
    dir_b = db[j] / len_b[j]
    return point, float(arcs_a[k]), float(arcs_b[k]), dir_a, dir_b


def polyline_entry_arc(path, poly, tol=1e-9):
    """Arc length along a polyline to its first point inside a convex polygon.

    Returns 0.0 when the start already lies inside, None when the polyline
    never reaches the polygon.
    """
    pts = np.asarray(path, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return None
    if point_in_convex(poly, pts[0], tol):
        return 0.0
    arc = 0.0
    n = len(poly)
    for k in range(len(pts) - 1):
        p = pts[k]
        q = pts[k + 1]
        seg = q - p
        seg_len = math.hypot(seg[0], seg[1])
        if seg_len < 1e-12:
            continue
        best = None
        for i in range(n):
            ax, ay = poly[i]
            bx, by = poly[(i + 1) % n]
            ex, ey = bx - ax, by - ay
            denom = seg[0] * ey - seg[1] * ex
            if abs(denom) < 1e-15:
                continue
            u = ((ax - p[0]) * ey - (ay - p[1]) * ex) / denom
            v = ((ax - p[0]) * seg[1] - (ay - p[1]) * seg[0]) / denom
            if -1e-12 <= u <= 1.0 + 1e-12 and -1e-12 <= v <= 1.0 + 1e-12:
                if best is None or u < best:
                    best = max(u, 0.0)
        if best is not None:
            return arc + best * seg_len
        if point_in_convex(poly, q, tol):
            return arc + seg_len
        arc += seg_len
    return None


class PathWalker:
    """Walk a polyline by arc length, extending straight past the final point.

    Zero-length segments are collapsed. A degenerate (single point) path
    extends along the fallback direction.
    """

    def __init__(self, points, fallback_direction=(1.0, 0.0)):
        raw = np.asarray(points, dtype=float).reshape(-1, 2)
        kept = [raw[0]]
        for p in raw[1:]:
            if math.hypot(p[0] - kept[-1][0], p[1] - kept[-1][1]) > 1e-12:
                kept.append(p)
        self._pts = np.asarray(kept)
        if len(kept) >= 2:
            seg = np.diff(self._pts, axis=0)
            lens = np.hypot(seg[:, 0], seg[:, 1])
            self._dirs = seg / lens[:, None]
            self._cum = np.concatenate([[0.0], np.cumsum(lens)])
        else:
            d = np.asarray(fallback_direction, dtype=float)
            norm = math.hypot(d[0], d[1])
            d = d / norm if norm > 1e-12 else np.array([1.0, 0.0])
            self._dirs = d[None, :]
            self._cum = np.array([0.0, 0.0])
        self.total = float(self._cum[-1])

    def query(self, arcs):
        """Positions and unit tangents for an array of arc lengths."""
        arcs = np.atleast_1d(np.asarray(arcs, dtype=float))
        idx = np.searchsorted(self._cum, arcs, side="right") - 1
        idx = np.clip(idx, 0, len(self._dirs) - 1)
        starts = self._pts[np.minimum(idx, len(self._pts) - 1)]
        offs = arcs - self._cum[idx]
        dirs = self._dirs[idx]
        pos = starts + dirs * offs[:, None]
        return pos, dirs

    def query_one(self, arc):
        pos, dirs = self.query([arc])
        return pos[0], dirs[0]
