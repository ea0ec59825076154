"""Discrete knot energies of closed polygons.

All four energies are total functions on :class:`PolygonalKnot`: degenerate
inputs get the conventional value (``inf`` for the Möbius, minimum-distance
and Menger energies, ``0`` thickness) with ``degenerate=True`` on the report.
"""
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .geometry import (
    COLLINEAR_RTOL,
    PARALLEL_RTOL,
    nonadjacent_pairs,
    pairwise_segment_distances,
    regular_ngon,
)

# segments closer than this fraction of the polygon length count as touching
TOUCH_RTOL = 1e-14
# closest-point parameters this close to 0 or 1 belong to the endpoint
INTERIOR_MARGIN = 1e-12
_EPS = np.finfo(float).eps

ENERGY_KINDS = ("moebius", "mindist", "menger", "thickness")


@dataclass(frozen=True)
class EnergyReport:
    kind: str
    value: float
    argmin_witness: tuple = None
    degenerate: bool = False
    term_count: int = 0

    def to_dict(self):
        d = asdict(self)
        d["argmin_witness"] = None if self.argmin_witness is None else list(self.argmin_witness)
        return d

    @classmethod
    def from_dict(cls, d):
        w = d.get("argmin_witness")
        return cls(
            kind=d["kind"],
            value=float(d["value"]),
            argmin_witness=None if w is None else tuple(int(i) for i in w),
            degenerate=bool(d["degenerate"]),
            term_count=int(d["term_count"]),
        )


def coincident_vertices(p):
    """Lowest index pair ``(i, j)`` of coincident vertices, or ``None``."""
    v = p.vertices
    _, inverse, counts = np.unique(v, axis=0, return_inverse=True, return_counts=True)
    if (counts == 1).all():
        return None
    inverse = inverse.ravel()
    for i in range(p.n):
        dup = np.flatnonzero(inverse == inverse[i])
        if len(dup) > 1:
            return int(dup[0]), int(dup[1])
    return None


# ---------------------------------------------------------------------------
# Möbius energies
# ---------------------------------------------------------------------------

def moebius_terms(p):
    """Matrix of summands ``(1/|x_j-x_i|^2 - 1/d(a_j,a_i)^2) |e_i| |e_j|``.

    The diagonal is zero. Every entry is nonnegative because a chord never
    exceeds the shorter polygon arc between its endpoints; entries that come
    out negative by rounding are clipped, anything larger is an error.
    """
    v = p.vertices
    n = p.n
    e = p.edge_lengths
    L = p.total_length
    a = p.arc_positions[:-1]
    diff = v[:, None, :] - v[None, :, :]
    chord2 = np.einsum("ijk,ijk->ij", diff, diff)
    arc = np.abs(a[:, None] - a[None, :])
    arc = np.minimum(arc, L - arc)
    # neighbours: the arc is the edge itself, avoid cancellation in a_j - a_i
    idx = np.arange(n)
    nxt = (idx + 1) % n
    arc[idx, nxt] = arc[nxt, idx] = np.minimum(e, L - e)
    off = ~np.eye(n, dtype=bool)
    w = e[:, None] * e[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_chord = np.where(off, 1.0 / chord2, 0.0)
        inv_arc = np.where(off, 1.0 / arc**2, 0.0)
    terms = (inv_chord - inv_arc) * w
    # arc positions carry absolute error ~eps*L
    with np.errstate(divide="ignore", invalid="ignore"):
        slack = np.where(off, 64 * _EPS * (1.0 + L / arc) * inv_chord * w, 0.0)
    if (terms < -slack).any():
        i, j = np.argwhere(terms < -slack)[0]
        raise FloatingPointError(f"negative Möbius summand at ({i}, {j}): chord exceeds arc")
    return np.maximum(terms, 0.0)


def moebius_discrete(p):
    """Discrete Möbius energy with intrinsic distances measured along ``p``.

    Sum over ordered vertex pairs ``i != j`` of
    ``(1/|x_j - x_i|^2 - 1/d(a_j, a_i)^2) * |e_i| * |e_j|`` where ``d`` is
    the distance on the circle of length ``L`` and ``e_i`` the edge leaving
    vertex ``i``. Scale invariant.
    """
    n = p.n
    pair = coincident_vertices(p)
    if pair is not None:
        return EnergyReport("moebius", math.inf, pair, True, n * (n - 1))
    terms = moebius_terms(p)
    return EnergyReport("moebius", math.fsum(terms.ravel()), None, False, n * (n - 1))


def _mindist_sum(p):
    i, j, d, _, _ = pairwise_segment_distances(p)
    if len(i) == 0:
        return 0.0, None
    k = int(np.argmin(d))
    witness = (int(i[k]), int(j[k]))
    if d[k] <= TOUCH_RTOL * p.total_length:
        return math.inf, witness
    e = p.edge_lengths
    terms = e[i] * e[j] / d**2
    # unordered pairs, each counted in both orders
    return 2.0 * math.fsum(terms), witness


def min_distance_U(p):
    """Sum over ordered non-adjacent segment pairs of ``|X_i| |X_j| / dist(X_i, X_j)^2``.

    Segments are adjacent when they share a vertex. ``inf`` once two
    non-adjacent segments touch.
    """
    return _mindist_sum(p)[0]


@lru_cache(maxsize=256)
def _regular_mindist_U(n):
    return min_distance_U(regular_ngon(n))


def min_distance_energy(p):
    """Minimum distance energy, normalized to vanish on the regular n-gon."""
    u, witness = _mindist_sum(p)
    n = p.n
    count = 2 * len(nonadjacent_pairs(n)[0])
    if math.isinf(u):
        return EnergyReport("mindist", math.inf, witness, True, count)
    return EnergyReport("mindist", u - _regular_mindist_U(n), witness, False, count)


# ---------------------------------------------------------------------------
# discrete integral Menger curvature
# ---------------------------------------------------------------------------

def vertex_weights(p):
    """Half the sum of the two edges at each vertex."""
    e = p.edge_lengths
    return 0.5 * (np.roll(e, 1) + e)


def _triangle_kappa(X, Y, Z):
    a = np.linalg.norm(Y - Z, axis=-1)
    b = np.linalg.norm(Z - X, axis=-1)
    c = np.linalg.norm(X - Y, axis=-1)
    twice_area = np.linalg.norm(np.cross(Y - X, Z - X), axis=-1)
    longest = np.maximum(np.maximum(a, b), c)
    collinear = 0.5 * twice_area <= COLLINEAR_RTOL * longest**2
    return np.where(collinear, 0.0, 2.0 * twice_area / (a * b * c))


def _menger_blocks(p):
    """Yield ``(kappa, weight_product)`` over unordered triples ``i < j < k``, one block per ``i``."""
    v = p.vertices
    n = p.n
    w = vertex_weights(p)
    for i in range(n - 2):
        jj, kk = np.triu_indices(n - i - 1, k=1)
        jj = jj + i + 1
        kk = kk + i + 1
        kap = _triangle_kappa(v[i], v[jj], v[kk])
        yield kap, w[i] * w[jj] * w[kk]


def menger_discrete(p, s):
    """Discrete integral Menger curvature.

    Sum over ordered triples of distinct indices of
    ``kappa(x_i, x_j, x_k)**s * w_i * w_j * w_k``; each unordered triple is
    evaluated once and counted six times. Compensated summation.
    """
    if not s > 0:
        raise ValueError(f"Menger exponent must be positive, got {s}")
    n = p.n
    count = n * (n - 1) * (n - 2)
    pair = coincident_vertices(p)
    if pair is not None:
        return EnergyReport("menger", math.inf, pair, True, count)
    parts = []
    with np.errstate(over="ignore"):
        for kap, wt in _menger_blocks(p):
            parts.append(kap**s * wt)
    total = 6.0 * math.fsum(np.concatenate(parts)) if parts else 0.0
    return EnergyReport("menger", total, None, False, count)


def max_triple_kappa(p):
    """Largest inverse circumradius over triples of distinct vertices."""
    if coincident_vertices(p) is not None:
        return math.inf
    return max(float(k.max()) for k, _ in _menger_blocks(p))


def menger_power_mean(p, s):
    """``menger_discrete(p, s) ** (1/s)`` without overflow for large ``s``."""
    if coincident_vertices(p) is not None:
        return math.inf
    blocks = list(_menger_blocks(p))
    kmax = max(float(k.max()) for k, _ in blocks)
    if kmax == 0.0:
        return 0.0
    scaled = math.fsum(np.concatenate([(k / kmax) ** s * w for k, w in blocks]))
    return kmax * (6.0 * scaled) ** (1.0 / s)


# ---------------------------------------------------------------------------
# discrete thickness
# ---------------------------------------------------------------------------

def _turning(a, b):
    """Edge lengths, ``|a x b|`` and ``|a||b| + a.b`` for consecutive edge vectors."""
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    cr = np.linalg.norm(np.cross(a, b), axis=-1)
    den = na * nb + np.einsum("...i,...i->...", a, b)
    return na, nb, cr, den


def discrete_kappa(x, y, z):
    """Curvature localized at vertex ``y`` between neighbours ``x`` and ``z``.

    ``2 tan(phi/2)`` over the mean of the two edge lengths, ``phi`` the
    exterior angle at ``y``; ``inf`` when the polygon folds back.
    """
    x, y, z = (np.asarray(t, dtype=float) for t in (x, y, z))
    na, nb, cr, den = _turning(y - x, z - y)
    if den <= 4 * _EPS * na * nb:
        return math.inf
    # tan(phi/2) = sin(phi) / (1 + cos(phi))
    return float(4.0 * cr / den / (na + nb))


def vertex_radii(p):
    """Inverse discrete curvature at each vertex (``inf`` straight, ``0`` fold-back)."""
    v = p.vertices
    na, nb, cr, den = _turning(v - np.roll(v, 1, axis=0), np.roll(v, -1, axis=0) - v)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (na + nb) * den / (4.0 * cr)
    r = np.where(cr == 0, np.inf, r)
    return np.where(den <= 4 * _EPS * na * nb, 0.0, r)


def minrad(p):
    """Minimal discrete radius of curvature over all vertices."""
    return float(vertex_radii(p).min())


@dataclass(frozen=True)
class CriticalPair:
    x: np.ndarray
    y: np.ndarray
    segments: tuple
    distance: float
    kind: str

    def to_dict(self):
        return {
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "segments": list(self.segments),
            "distance": self.distance,
            "kind": self.kind,
        }


def _vertex_extremal(v, k, Y, tol=1e-12):
    """Whether vertex ``k`` locally extremizes its squared distance to ``Y``.

    A zero directional derivative counts as increasing (the distance is
    convex along each incident segment).
    """
    n = len(v)
    x = v[k]
    diff = x - Y
    r = np.linalg.norm(diff, axis=-1)
    flags = []
    for nb in ((k - 1) % n, (k + 1) % n):
        d = v[nb] - x
        g = np.einsum("...i,...i->...", d, diff)
        thr = tol * np.linalg.norm(d, axis=-1) * r
        flags.append(g < -thr)
    dec_prev, dec_next = flags
    return (dec_prev & dec_next) | (~dec_prev & ~dec_next)


def _first_nonadjacent(n, cand_a, cand_b):
    """Lowest segment pair ``(s, t)`` with ``s`` from cand_a, ``t`` from cand_b, sharing no vertex."""
    best = None
    for s in cand_a:
        for t in cand_b:
            if (s - t) % n not in (0, 1, n - 1):
                pair = (min(s, t), max(s, t))
                if best is None or pair < best:
                    best = pair
    return best


def _critical_arrays(p, with_segments=True):
    """All doubly critical candidates as arrays ``(dist, X, Y, seg_i, seg_j, kind)``.

    Without ``with_segments`` the vertex cases report segment index -1.
    """
    v = p.vertices
    n = p.n
    S0, S1 = p.segments()
    D = S1 - S0
    tau = INTERIOR_MARGIN
    dist, XS, YS, SI, SJ, KIND = [], [], [], [], [], []

    I, J = nonadjacent_pairs(n)
    if len(I):
        d1, d2 = D[I], D[J]
        r = S0[I] - S0[J]
        a = np.einsum("ij,ij->i", d1, d1)
        e = np.einsum("ij,ij->i", d2, d2)
        b = np.einsum("ij,ij->i", d1, d2)
        c = np.einsum("ij,ij->i", d1, r)
        f = np.einsum("ij,ij->i", d2, r)
        denom = a * e - b * b
        par = denom <= PARALLEL_RTOL * a * e
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(par, 0.0, (b * f - c * e) / denom)
            w = np.where(par, 0.0, (a * f - b * c) / denom)
        ok = ~par & (u > tau) & (u < 1 - tau) & (w > tau) & (w < 1 - tau)
        X = S0[I] + u[:, None] * d1
        Y = S0[J] + w[:, None] * d2
        dist.append(np.linalg.norm(X - Y, axis=1)[ok])
        XS.append(X[ok]), YS.append(Y[ok]), SI.append(I[ok]), SJ.append(J[ok])
        KIND.append(np.full(ok.sum(), 0))

        # parallel pairs: a continuum of perpendicular pairs, keep the overlap midpoint
        pj0 = np.einsum("ij,ij->i", S0[J] - S0[I], d1) / a
        pj1 = np.einsum("ij,ij->i", S1[J] - S0[I], d1) / a
        lo = np.maximum(0.0, np.minimum(pj0, pj1))
        hi = np.minimum(1.0, np.maximum(pj0, pj1))
        okp = par & (hi - lo > 2 * tau)
        um = 0.5 * (lo + hi)
        X = S0[I] + um[:, None] * d1
        wm = np.einsum("ij,ij->i", X - S0[J], d2) / e
        Y = S0[J] + wm[:, None] * d2
        dist.append(np.linalg.norm(X - Y, axis=1)[okp])
        XS.append(X[okp]), YS.append(Y[okp]), SI.append(I[okp]), SJ.append(J[okp])
        KIND.append(np.full(okp.sum(), 1))

    if n >= 4:
        # vertex k against the interior of segment j
        k, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        k, j = k.ravel(), j.ravel()
        off = (k != j) & (k != (j + 1) % n)
        k, j = k[off], j[off]
        e = np.einsum("ij,ij->i", D[j], D[j])
        w = np.einsum("ij,ij->i", v[k] - S0[j], D[j]) / e
        inner = (w > tau) & (w < 1 - tau)
        k, j, w = k[inner], j[inner], w[inner]
        Y = S0[j] + w[:, None] * D[j]
        ext = _vertex_extremal(v, k, Y)
        k, j, Y = k[ext], j[ext], Y[ext]
        if with_segments:
            segs = np.array(
                [_first_nonadjacent(n, sorted({(kk - 1) % n, kk}), [jj]) for kk, jj in zip(k, j)]
            ).reshape(-1, 2)
        else:
            segs = np.full((len(k), 2), -1)
        dist.append(np.linalg.norm(v[k] - Y, axis=1))
        XS.append(v[k]), YS.append(Y), SI.append(segs[:, 0]), SJ.append(segs[:, 1])
        KIND.append(np.full(len(k), 2))

        # vertex against vertex
        k, l = np.triu_indices(n, k=1)
        ext = _vertex_extremal(v, k, v[l]) & _vertex_extremal(v, l, v[k])
        k, l = k[ext], l[ext]
        if with_segments:
            segs = np.array(
                [_first_nonadjacent(n, sorted({(a - 1) % n, a}), sorted({(b - 1) % n, b})) for a, b in zip(k, l)]
            ).reshape(-1, 2)
        else:
            segs = np.full((len(k), 2), -1)
        dist.append(np.linalg.norm(v[k] - v[l], axis=1))
        XS.append(v[k]), YS.append(v[l]), SI.append(segs[:, 0]), SJ.append(segs[:, 1])
        KIND.append(np.full(len(k), 3))

    if not dist:
        empty = np.zeros((0, 3))
        return np.zeros(0), empty, empty, np.zeros(0, int), np.zeros(0, int), np.zeros(0, int)
    return (
        np.concatenate(dist),
        np.concatenate(XS),
        np.concatenate(YS),
        np.concatenate(SI).astype(int),
        np.concatenate(SJ).astype(int),
        np.concatenate(KIND),
    )


_KIND_NAMES = ("interior-interior", "parallel", "vertex-interior", "vertex-vertex")


def dcrit(p):
    """Doubly critical pairs of ``p`` on non-adjacent segments, sorted by distance.

    Each point of a pair locally extremizes the squared distance to the other
    along the polygon. Pairs of coinciding points are left out; a continuum
    of pairs between parallel segments is represented by one pair.
    """
    dist, X, Y, si, sj, kind = _critical_arrays(p)
    keep = dist > TOUCH_RTOL * p.total_length
    order = np.lexsort((sj[keep], si[keep], dist[keep]))
    idx = np.flatnonzero(keep)[order]
    return [
        CriticalPair(X[m].copy(), Y[m].copy(), (int(si[m]), int(sj[m])), float(dist[m]), _KIND_NAMES[kind[m]])
        for m in idx
    ]


def _dcsd_with_witness(p):
    i, j, d, _, _ = pairwise_segment_distances(p)
    if len(i) and d.min() <= TOUCH_RTOL * p.total_length:
        k = int(np.argmin(d))
        return 0.0, (int(i[k]), int(j[k]))
    dist, _, _, si, sj, _ = _critical_arrays(p)
    if len(dist) == 0:
        return math.inf, None
    m = np.lexsort((sj, si, dist))[0]
    return float(dist[m]), (int(si[m]), int(sj[m]))


def dcsd(p):
    """Doubly critical self distance; ``inf`` with no critical pairs, 0 if ``p`` self-intersects."""
    return _dcsd_with_witness(p)[0]


def thickness_discrete(p):
    """Discrete thickness ``min(minrad, dcsd / 2)``; 0 when two vertices coincide.

    The witness is ``(k,)`` when the curvature bound at vertex ``k`` is
    active and the segment pair ``(i, j)`` when the self-distance is.
    """
    n = p.n
    pair = coincident_vertices(p)
    if pair is not None:
        return EnergyReport("thickness", 0.0, pair, True, n)
    radii = vertex_radii(p)
    k = int(np.argmin(radii))
    mr = float(radii[k])
    dc, seg = _dcsd_with_witness(p)
    if mr <= 0.5 * dc:
        return EnergyReport("thickness", mr, (k,), False, n)
    return EnergyReport("thickness", 0.5 * dc, seg, False, n)


def _dcsd_fast(p):
    """Minimal distance over the doubly critical candidates, via Gram matrices.

    Same candidates and tolerances as :func:`_critical_arrays`, written with
    ``n x n`` matrix products instead of index lists.
    """
    v = p.vertices
    n = p.n
    if n < 4:
        return math.inf
    tau = INTERIOR_MARGIN
    S0 = v
    S1 = np.roll(v, -1, axis=0)
    D = S1 - S0
    e = np.einsum("ij,ij->i", D, D)
    DD = D @ D.T
    DS = D @ S0.T                      # DS[i, j] = D_i . S0_j
    dS = np.diag(DS)                   # D_i . S0_i
    best = math.inf

    # interior-interior on non-adjacent pairs
    I, J = nonadjacent_pairs(n)
    a, ej, b = e[I], e[J], DD[I, J]
    c = dS[I] - DS[I, J]               # D_i . (S0_i - S0_j)
    f = DS[J, I] - dS[J]               # D_j . (S0_i - S0_j)
    denom = a * ej - b * b
    par = denom <= PARALLEL_RTOL * a * ej
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (b * f - c * ej) / denom
        w = (a * f - b * c) / denom
    ok = ~par & (u > tau) & (u < 1 - tau) & (w > tau) & (w < 1 - tau)
    if ok.any():
        X = S0[I[ok]] + u[ok, None] * D[I[ok]]
        Y = S0[J[ok]] + w[ok, None] * D[J[ok]]
        best = min(best, float(np.linalg.norm(X - Y, axis=1).min()))
    if par.any():
        Ip, Jp, ap = I[par], J[par], a[par]
        pj0 = (DS[Ip, Jp] - dS[Ip]) / ap
        pj1 = pj0 + DD[Ip, Jp] / ap
        lo = np.maximum(0.0, np.minimum(pj0, pj1))
        hi = np.minimum(1.0, np.maximum(pj0, pj1))
        okp = hi - lo > 2 * tau
        if okp.any():
            Ip, Jp = Ip[okp], Jp[okp]
            X = S0[Ip] + (0.5 * (lo + hi))[okp, None] * D[Ip]
            wm = np.einsum("ij,ij->i", X - S0[Jp], D[Jp]) / e[Jp]
            Y = S0[Jp] + wm[:, None] * D[Jp]
            best = min(best, float(np.linalg.norm(X - Y, axis=1).min()))

    # vertex k against the interior of segment j, then vertex against vertex;
    # g = (neighbour - x_k) . (x_k - y) decides local extremality at x_k
    A = np.roll(v, 1, axis=0) - v
    B = np.roll(v, -1, axis=0) - v
    vD = v @ D.T
    W = (vD - dS[None, :]) / e[None, :]
    k = np.arange(n)
    valid = (W > tau) & (W < 1 - tau)
    valid[k, k] = False
    valid[(k + 1) % n, k] = False
    kk, jj = np.nonzero(valid)
    if len(kk):
        Y = S0[jj] + W[kk, jj][:, None] * D[jj]
        diff = v[kk] - Y
        r = np.linalg.norm(diff, axis=1)
        tA = 1e-12 * np.linalg.norm(A[kk], axis=1) * r
        tB = 1e-12 * np.linalg.norm(B[kk], axis=1) * r
        decA = np.einsum("ij,ij->i", A[kk], diff) < -tA
        decB = np.einsum("ij,ij->i", B[kk], diff) < -tB
        ext = decA == decB
        if ext.any():
            best = min(best, float(r[ext].min()))

    kk, ll = np.triu_indices(n, k=1)
    diff = v[kk] - v[ll]
    r = np.linalg.norm(diff, axis=1)
    nA, nB = np.linalg.norm(A, axis=1), np.linalg.norm(B, axis=1)
    g1 = np.einsum("ij,ij->i", A[kk], diff)
    g2 = np.einsum("ij,ij->i", B[kk], diff)
    g3 = -np.einsum("ij,ij->i", A[ll], diff)
    g4 = -np.einsum("ij,ij->i", B[ll], diff)
    ext = ((g1 < -1e-12 * nA[kk] * r) == (g2 < -1e-12 * nB[kk] * r)) & (
        (g3 < -1e-12 * nA[ll] * r) == (g4 < -1e-12 * nB[ll] * r)
    )
    if ext.any():
        best = min(best, float(r[ext].min()))
    return best


def thickness_value(p):
    """Value of :func:`thickness_discrete` without the witness bookkeeping."""
    # coincident vertices are never consecutive, so they make two
    # non-adjacent segments touch
    _, _, d, _, _ = pairwise_segment_distances(p)
    if len(d) and d.min() <= TOUCH_RTOL * p.total_length:
        return 0.0
    mr = minrad(p)
    return min(mr, 0.5 * _dcsd_fast(p))


def ropelength_discrete(p):
    """Length over discrete thickness."""
    t = thickness_discrete(p).value
    return math.inf if t == 0 else p.total_length / t


def energy(p, kind, s=None):
    """Dispatch by name: ``moebius``, ``mindist``, ``menger`` (needs ``s``) or ``thickness``."""
    if kind == "moebius":
        return moebius_discrete(p)
    if kind == "mindist":
        return min_distance_energy(p)
    if kind == "menger":
        if s is None:
            raise ValueError("the Menger energy needs an exponent s")
        return menger_discrete(p, s)
    if kind == "thickness":
        return thickness_discrete(p)
    raise ValueError(f"unknown energy kind {kind!r}; choose from {ENERGY_KINDS}")
