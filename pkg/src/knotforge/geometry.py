"""Polygon type and exact geometric primitives.

Points are plain ``numpy`` arrays of shape ``(3,)``; batches are ``(m, 3)``.
"""
import math
from functools import cached_property, lru_cache

import numpy as np

from .errors import ValidationError

EQUILATERAL_RTOL = 1e-10
# triangle area below this fraction of max_side**2 counts as collinear
COLLINEAR_RTOL = 1e-12
# a*e - b*b below this fraction of a*e counts as parallel segments
PARALLEL_RTOL = 1e-12


def as_point(x):
    p = np.asarray(x, dtype=float)
    if p.shape != (3,):
        raise ValidationError(f"expected a 3D point, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValidationError("point has non-finite coordinates")
    return p


class PolygonalKnot:
    """Closed polygon in R^3 given by its ordered vertices.

    Vertex ``n-1`` connects back to vertex ``0``. Segment ``i`` runs from
    vertex ``i`` to vertex ``i+1 (mod n)``. Instances are immutable.

    Parameters
    ----------
    vertices : array_like, shape (n, 3)
        At least three finite points with consecutive points distinct.
    """

    def __init__(self, vertices):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValidationError(f"vertices must have shape (n, 3), got {v.shape}")
        n = len(v)
        if n < 3:
            raise ValidationError(f"a closed polygon needs at least 3 vertices, got {n}")
        finite = np.isfinite(v).all(axis=1)
        if not finite.all():
            i = int(np.flatnonzero(~finite)[0])
            raise ValidationError(f"vertex {i} has non-finite coordinates", index=i)
        e = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        if not (e > 0).all():
            i = int(np.flatnonzero(e <= 0)[0])
            raise ValidationError(
                f"vertex {i} coincides with consecutive vertex {(i + 1) % n}", index=i
            )
        v.setflags(write=False)
        e.setflags(write=False)
        self._vertices = v
        self._edges = e

    @property
    def vertices(self):
        return self._vertices

    @property
    def n(self):
        return len(self._vertices)

    def __len__(self):
        return self.n

    @property
    def edge_lengths(self):
        """Length of segment ``i`` (vertex ``i`` to vertex ``i+1``)."""
        return self._edges

    @cached_property
    def total_length(self):
        return math.fsum(self._edges)

    @cached_property
    def arc_positions(self):
        """Cumulative arc positions ``a_0 = 0 < a_1 < ... < a_n = L`` (n+1 entries)."""
        a = np.concatenate([[0.0], np.cumsum(self._edges)])
        a[-1] = self.total_length
        a.setflags(write=False)
        return a

    @property
    def is_equilateral(self):
        e = self._edges
        return bool(e.max() / e.min() - 1.0 <= EQUILATERAL_RTOL)

    def segments(self):
        """Return ``(starts, ends)`` arrays of shape (n, 3)."""
        v = self._vertices
        return v, np.roll(v, -1, axis=0)

    def with_vertex(self, i, position):
        v = self._vertices.copy()
        v[i % self.n] = position
        return PolygonalKnot(v)

    def transformed(self, rotation=None, translation=None, scale=1.0):
        """Apply ``x -> scale * R x + t``."""
        v = self._vertices * scale
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=float).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=float)
        return PolygonalKnot(v)

    def shifted(self, k):
        """Cyclic relabeling so that old vertex ``k`` becomes vertex 0."""
        return PolygonalKnot(np.roll(self._vertices, -k, axis=0))

    def reversed(self):
        return PolygonalKnot(self._vertices[::-1])

    def __eq__(self, other):
        if not isinstance(other, PolygonalKnot):
            return NotImplemented
        return np.array_equal(self._vertices, other._vertices)

    __hash__ = None

    def __repr__(self):
        return f"PolygonalKnot(n={self.n}, length={self.total_length:.6g})"


def regular_ngon(n, length=1.0):
    """Planar regular n-gon of the given perimeter.

    Centered at the origin in the ``z = 0`` plane with vertex 0 on the
    positive x-axis; circumradius is ``length / (2 n sin(pi/n))``.
    """
    if int(n) != n or n < 3:
        raise ValidationError(f"regular_ngon needs an integer n >= 3, got {n}")
    n = int(n)
    R = length / (2 * n * math.sin(math.pi / n))
    theta = 2 * np.pi * np.arange(n) / n
    return PolygonalKnot(np.column_stack([R * np.cos(theta), R * np.sin(theta), np.zeros(n)]))


# ---------------------------------------------------------------------------
# circumradius and Menger curvature
# ---------------------------------------------------------------------------

def circumradii(X, Y, Z):
    """Vectorized circumradius of point triples.

    Returns ``inf`` for distinct collinear points and ``0`` when two of the
    points coincide (the circle through them degenerates to a point).
    """
    X, Y, Z = (np.asarray(P, dtype=float) for P in (X, Y, Z))
    a = np.linalg.norm(Y - Z, axis=-1)
    b = np.linalg.norm(Z - X, axis=-1)
    c = np.linalg.norm(X - Y, axis=-1)
    twice_area = np.linalg.norm(np.cross(Y - X, Z - X), axis=-1)
    longest = np.maximum(np.maximum(a, b), c)
    coincident = np.minimum(np.minimum(a, b), c) == 0
    collinear = (0.5 * twice_area <= COLLINEAR_RTOL * longest**2) & ~coincident
    with np.errstate(divide="ignore", invalid="ignore"):
        r = a * b * c / (2.0 * twice_area)
    r = np.where(collinear, np.inf, r)
    r = np.where(coincident, 0.0, r)
    return r


def _sorted_triple(x, y, z):
    # canonical order makes the scalar routines exactly permutation symmetric
    return sorted((as_point(x), as_point(y), as_point(z)), key=lambda p: tuple(p))


def circumradius(x, y, z):
    """Radius of the circle through three points.

    ``inf`` for distinct collinear points. Coincident inputs return ``0.0``;
    use :func:`triple_is_degenerate` to detect that case.

    >>> round(circumradius([0, 0, 0], [3, 0, 0], [0, 4, 0]), 12)
    2.5
    """
    X, Y, Z = _sorted_triple(x, y, z)
    return float(circumradii(X, Y, Z))


def triple_is_degenerate(x, y, z):
    """True when at least two of the three points coincide."""
    x, y, z = as_point(x), as_point(y), as_point(z)
    return bool(np.array_equal(x, y) or np.array_equal(y, z) or np.array_equal(x, z))


def menger_kappa(x, y, z):
    """Inverse circumradius; 0 on distinct collinear points, ``inf`` on coincident ones."""
    r = circumradius(x, y, z)
    if r == 0.0:
        return math.inf
    return 1.0 / r


# ---------------------------------------------------------------------------
# segment distances
# ---------------------------------------------------------------------------

def segment_distances(P0, P1, Q0, Q1):
    """Closest points between batches of closed segments ``[P0,P1]`` and ``[Q0,Q1]``.

    Returns
    -------
    dist, u, v : ndarray
        Distances and parameters with closest points ``P0 + u (P1-P0)`` and
        ``Q0 + v (Q1-Q0)``, ``u, v`` in [0, 1]. Parallel segments get one
        valid minimizing pair.
    """
    P0, P1, Q0, Q1 = (np.asarray(A, dtype=float) for A in (P0, P1, Q0, Q1))
    d1 = P1 - P0
    d2 = Q1 - Q0
    r = P0 - Q0
    a = np.einsum("...i,...i->...", d1, d1)
    e = np.einsum("...i,...i->...", d2, d2)
    f = np.einsum("...i,...i->...", d2, r)
    c = np.einsum("...i,...i->...", d1, r)
    b = np.einsum("...i,...i->...", d1, d2)
    denom = a * e - b * b
    parallel = denom <= PARALLEL_RTOL * a * e
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(parallel, 0.0, np.clip((b * f - c * e) / denom, 0.0, 1.0))
        t = (b * s + f) / e
        s = np.where(t < 0, np.clip(-c / a, 0.0, 1.0), np.where(t > 1, np.clip((b - c) / a, 0.0, 1.0), s))
    t = np.clip(t, 0.0, 1.0)
    diff = (P0 + s[..., None] * d1) - (Q0 + t[..., None] * d2)
    return np.linalg.norm(diff, axis=-1), s, t


def segment_min_distance(A1, A2, B1, B2):
    """Distance between segments ``[A1,A2]`` and ``[B1,B2]`` plus closest parameters.

    Returns ``(dist, u, v)`` with closest points ``A1 + u (A2-A1)`` and
    ``B1 + v (B2-B1)``.
    """
    A1, A2, B1, B2 = (as_point(P) for P in (A1, A2, B1, B2))
    if np.array_equal(A1, A2) or np.array_equal(B1, B2):
        raise ValidationError("segment endpoints must be distinct")
    d, u, v = segment_distances(A1, A2, B1, B2)
    return float(d), float(u), float(v)


@lru_cache(maxsize=64)
def nonadjacent_pairs(n):
    """Index arrays ``(i, j)``, ``i < j``, of segment pairs sharing no vertex."""
    i, j = np.triu_indices(n, k=2)
    keep = (j - i) != n - 1
    i, j = i[keep], j[keep]
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


def pairwise_segment_distances(p):
    """Distances between all non-adjacent segment pairs of ``p``.

    Returns ``(i, j, dist, u, v)`` with one entry per unordered pair ``i < j``.
    """
    i, j = nonadjacent_pairs(p.n)
    S0, S1 = p.segments()
    d, u, v = segment_distances(S0[i], S1[i], S0[j], S1[j])
    return i, j, d, u, v


# ---------------------------------------------------------------------------
# isotopy guard
# ---------------------------------------------------------------------------

def _cross(a, b):
    # np.cross has high per-call overhead for tiny arrays
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ],
        axis=-1,
    )


def _in_triangle(X, A, B, C, nhat, tol):
    ok = np.ones(X.shape[:-1], dtype=bool)
    for P, Q in ((A, B), (B, C), (C, A)):
        edge = Q - P
        side = _cross(edge, X - P) @ nhat
        ok &= side >= -tol * np.linalg.norm(edge)
    return ok


def _degenerate_sweep_hits(nb, old, new, S0, S1, touches, other, tol):
    # nb, old, new collinear: the swept region is the segment hull of the three
    w = old - nb if np.linalg.norm(old - nb) >= np.linalg.norm(new - nb) else new - nb
    ww = w @ w
    params = np.array([0.0, (old - nb) @ w / ww, (new - nb) @ w / ww])
    lo, hi = params.min(), params.max()
    if lo < -tol / math.sqrt(ww):
        # the incident edge collapses through its fixed neighbour
        return np.ones(len(S0), dtype=bool)
    H0 = nb + lo * w
    H1 = nb + hi * w
    hits = np.zeros(len(S0), dtype=bool)
    full = ~touches
    if full.any():
        d, _, _ = segment_distances(
            np.broadcast_to(H0, S0[full].shape), np.broadcast_to(H1, S0[full].shape), S0[full], S1[full]
        )
        hits[full] = d <= tol
    if touches.any():
        dvec = other[touches] - nb
        dn = np.linalg.norm(dvec, axis=1)
        crs = np.linalg.norm(_cross(dvec, w), axis=1)
        hits[touches] = (crs <= COLLINEAR_RTOL * dn * math.sqrt(ww)) & (dvec @ w > 0)
    return hits


def _triangle_sweep_hits(nb, old, new, S0, S1, touches, other, tol):
    """Which segments meet the triangle (nb, old, new).

    Segments with ``touches`` set contain ``nb`` as an endpoint; for those
    only contact away from ``nb`` counts, ``other`` holds their far endpoint.
    """
    u1 = old - nb
    u2 = new - nb
    nrm = _cross(u1, u2)
    nn = np.linalg.norm(nrm)
    scale = max(np.linalg.norm(u1), np.linalg.norm(u2))
    if nn <= COLLINEAR_RTOL * scale**2:
        return _degenerate_sweep_hits(nb, old, new, S0, S1, touches, other, tol)
    nhat = nrm / nn
    hits = np.zeros(len(S0), dtype=bool)

    full = np.flatnonzero(~touches)
    if len(full):
        A0, A1 = S0[full], S1[full]
        d0 = (A0 - nb) @ nhat
        d1 = (A1 - nb) @ nhat
        d0 = np.where(np.abs(d0) <= tol, 0.0, d0)
        d1 = np.where(np.abs(d1) <= tol, 0.0, d1)
        coplanar = (d0 == 0) & (d1 == 0)
        straddle = ~coplanar & (d0 * d1 <= 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(straddle, d0 / (d0 - d1), 0.0)
        X = A0 + t[:, None] * (A1 - A0)
        hit = straddle & _in_triangle(X, nb, old, new, nhat, tol)
        for k in np.flatnonzero(coplanar):
            inside = _in_triangle(np.stack([A0[k], A1[k]]), nb, old, new, nhat, tol).any()
            if not inside:
                E0 = np.stack([nb, old, new])
                E1 = np.stack([old, new, nb])
                d, _, _ = segment_distances(E0, E1, np.broadcast_to(A0[k], (3, 3)), np.broadcast_to(A1[k], (3, 3)))
                inside = bool((d <= tol).any())
            hit[k] = inside
        hits[full] = hit

    tch = np.flatnonzero(touches)
    if len(tch):
        dvec = other[tch] - nb
        dn = np.linalg.norm(dvec, axis=1)
        in_plane = np.abs(dvec @ nhat) <= COLLINEAR_RTOL * dn
        n1 = np.linalg.norm(u1)
        n2 = np.linalg.norm(u2)
        c1 = _cross(u1, dvec) @ nhat >= -COLLINEAR_RTOL * n1 * dn
        c2 = _cross(dvec, u2) @ nhat >= -COLLINEAR_RTOL * n2 * dn
        hits[tch] = in_plane & c1 & c2
    return hits


def sweep_crossing_check(p, vertex_index, new_position):
    """Could moving one vertex in a straight line change the knot type?

    The two edges incident to vertex ``i`` sweep the triangles
    ``(x_{i-1}, old, new)`` and ``(x_{i+1}, old, new)``. The move is unsafe
    (returns True) if either triangle meets a segment not incident to ``i``.
    Contact within tolerance counts as a hit, so the test errs on the side
    of rejecting.
    """
    v = p.vertices
    n = p.n
    i = vertex_index % n
    old = v[i]
    new = as_point(new_position)
    if np.array_equal(old, new):
        return False
    prev, nxt = (i - 1) % n, (i + 1) % n
    if np.array_equal(new, v[prev]) or np.array_equal(new, v[nxt]):
        return True
    k = np.array([s for s in range(n) if s != prev and s != i])
    S0 = v[k]
    S1 = v[(k + 1) % n]
    tol = 1e-12 * p.total_length
    for nb in (prev, nxt):
        starts_at = k == nb
        ends_at = (k + 1) % n == nb
        touches = starts_at | ends_at
        other = np.where(starts_at[:, None], S1, S0)
        if _triangle_sweep_hits(v[nb], old, new, S0, S1, touches, other, tol).any():
            return True
    return False


def interior_angles(v):
    """Angle at each vertex between its two incident edges (pi when straight)."""
    a = np.roll(v, 1, axis=0) - v
    b = np.roll(v, -1, axis=0) - v
    cos = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
    return np.arccos(np.clip(cos, -1.0, 1.0))


class MoveCertificate:
    """Sufficient condition for crossing-free single-vertex moves from ``p``.

    Consider any sequence of straight single-vertex moves starting at ``p``
    in which vertex ``k`` travels a total distance ``m[k]``. During the
    sequence every segment stays within the larger displacement of its two
    endpoints of its original position, and a triangle swept while moving
    vertex ``j`` with fixed neighbour ``a`` stays within ``max(m[a], m[j])``
    of the original edge ``(a, j)``. So a sweep cannot meet a segment
    non-adjacent to that edge while their original distance exceeds the sum
    of the two bounds. A segment sharing the fixed neighbour ``a`` could
    only be met through the wedge at ``a``, which is excluded while the
    interior angle at ``a`` exceeds the deviation of both edge directions
    at ``a``. :meth:`covers` checks both conditions, so every step of such a
    sequence passes :func:`sweep_crossing_check`.
    """

    def __init__(self, p):
        n = p.n
        self.n = n
        self.margin = 1e-9 * p.total_length
        self.edges = p.edge_lengths
        self.angles = interior_angles(p.vertices)
        D = np.full((n, n), np.inf)
        if n >= 4:
            i, j, d, _, _ = pairwise_segment_distances(p)
            D[i, j] = d
            D[j, i] = d
        self.D = D

    def covers(self, m):
        """Whether total vertex displacements ``m`` are certified safe."""
        if self.n < 4:
            return False
        m = np.asarray(m, dtype=float)
        if not m.any():
            return True
        M = np.maximum(m, np.roll(m, -1))
        moving = M > 0
        slack = self.D[moving] - M[moving][:, None] - M[None, :]
        if not (slack > self.margin).all():
            return False
        fwd = (m + np.roll(m, -1)) / self.edges
        bwd = np.roll(fwd, 1)
        if (fwd >= 1).any():
            return False
        dev = np.arcsin(fwd) + np.arcsin(bwd)
        return bool((self.angles - dev > 1e-9)[(m + np.roll(m, 1) + np.roll(m, -1)) > 0].all())
