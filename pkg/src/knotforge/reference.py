"""Reference values of the smooth energies on analytic curves.

The Möbius energy and integral Menger curvature of a smooth curve are
obtained as limits of the discrete energies of inscribed polygons, using a
dyadic ladder and first-order Richardson extrapolation. Thickness is computed
directly from dense samples of curvature and of the doubly critical
self-distance.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .curves import Circle, inscribe_equilateral, inscribe_uniform
from .energies import menger_discrete, moebius_discrete
from .errors import ConvergenceError

METHODS = ("closed_form", "inscribed_extrapolated", "dense_sampling")


@dataclass(frozen=True)
class ReferenceValue:
    value: float
    method: str
    n_used: list
    estimated_error: float
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.estimated_error >= 0:
            raise ValueError("estimated_error must be nonnegative")
        if self.method == "closed_form" and self.estimated_error != 0:
            raise ValueError("closed-form references carry zero error")

    def to_dict(self):
        return {
            "value": self.value,
            "method": self.method,
            "n_used": list(self.n_used),
            "estimated_error": self.estimated_error,
            "details": dict(self.details),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["value"]), d["method"], [int(n) for n in d["n_used"]],
                   float(d["estimated_error"]), dict(d.get("details", {})))


def ladder(n_max):
    """The dyadic ladder ``n_max/4, n_max/2, n_max``."""
    if n_max % 4 or n_max // 4 < 3:
        raise ValueError(f"n_max must be a multiple of 4 and at least 12, got {n_max}")
    return [n_max // 4, n_max // 2, n_max]


def richardson(ns, values):
    """First-order Richardson extrapolation of the last two ladder values.

    Raises :class:`ConvergenceError` when successive differences grow.
    Returns ``(extrapolated, estimated_error)``.
    """
    e1, e2, e3 = values
    d1, d2 = abs(e2 - e1), abs(e3 - e2)
    scale = max(abs(e3), 1.0)
    if d2 > d1 and d2 > 1e-13 * scale:
        raise ConvergenceError(
            f"ladder not converging: differences {d1:.3e} then {d2:.3e} at n = {ns}"
        )
    r = ns[2] / ns[1]
    extrapolated = (r * e3 - e2) / (r - 1.0)
    return extrapolated, abs(e3 - extrapolated)


def _ladder_reference(evaluate, n_max):
    ns = ladder(n_max)
    values = [evaluate(n) for n in ns]
    value, err = richardson(ns, values)
    return ReferenceValue(value, "inscribed_extrapolated", ns, err, {"ladder_values": values})


def moebius_smooth(curve, n_max=512):
    """Möbius energy of ``curve`` from uniformly inscribed polygons."""
    return _ladder_reference(lambda n: moebius_discrete(inscribe_uniform(curve, n)).value, n_max)


def menger_smooth(curve, s, n_max=128):
    """Integral Menger curvature ``M_s`` of ``curve`` from equilateral inscribed polygons."""
    if not s > 0:
        raise ValueError(f"Menger exponent must be positive, got {s}")
    return _ladder_reference(lambda n: menger_discrete(inscribe_equilateral(curve, n), s).value, n_max)


def circle_reference(kind, s=None, length=1.0):
    """Closed-form energies of the round circle of the given length.

    ``kind`` is ``moebius`` (4), ``menger`` (``(2 pi)^s L^(3-s)``),
    ``thickness`` (the radius) or ``ropelength`` (``2 pi``).
    """
    if kind == "moebius":
        value = 4.0
    elif kind == "menger":
        if s is None or not s > 0:
            raise ValueError("the Menger energy needs a positive exponent s")
        value = (2 * math.pi) ** s * length ** (3 - s)
    elif kind == "thickness":
        value = length / (2 * math.pi)
    elif kind == "ropelength":
        value = 2 * math.pi
    else:
        raise ValueError(f"no closed form for {kind!r}")
    return ReferenceValue(value, "closed_form", [], 0.0)


def _max_curvature(curve, n_samples):
    L = curve.total_length
    h = L / n_samples
    s = np.arange(n_samples) * h
    k = curve.curvature_at(s)
    i = int(np.argmax(k))
    coarse = float(k[i])
    res = minimize_scalar(
        lambda t: -float(curve.curvature_at(t % L)),
        bounds=(s[i] - h, s[i] + h),
        method="bounded",
        options={"xatol": 1e-12 * L},
    )
    fine = -float(res.fun)
    if fine < coarse:
        return coarse, float(s[i])
    return fine, float(res.x % L)


def _orthogonality(curve, t, u):
    L = curve.total_length
    x, y = curve.point_at(np.array([t % L, u % L]))
    tx, ty = curve.tangent_at(np.array([t % L, u % L]))
    d = x - y
    return np.array([tx @ d, ty @ d])


def _doubly_critical(curve, grid, window, max_refine=200, tol=1e-8):
    """Doubly critical pairs ``(t, u, distance)`` found from sign changes on a ``grid x grid`` mesh."""
    L = curve.total_length
    h = L / grid
    t = np.arange(grid) * h
    P = curve.point_at(t)
    T = curve.tangent_at(t)
    G = P @ T.T                      # G[i, j] = P_i . T_j
    F1 = np.diag(G)[:, None] - G.T   # T_i . (P_i - P_j)
    F2 = G - np.diag(G)[None, :]     # T_j . (P_i - P_j)

    def straddles(F):
        corners = np.stack([F, np.roll(F, -1, 0), np.roll(F, -1, 1), np.roll(np.roll(F, -1, 0), -1, 1)])
        return (corners.min(axis=0) <= 0) & (corners.max(axis=0) >= 0)

    i, j = np.nonzero(straddles(F1) & straddles(F2))
    gap = np.abs(i - j)
    gap = np.minimum(gap, grid - gap)
    keep = (i < j) & (gap >= window * grid)
    i, j = i[keep], j[keep]
    dist = np.linalg.norm(P[i] - P[j], axis=1)
    order = np.lexsort((j, i, dist))[:max_refine]

    found = []
    for m in order:
        x0 = np.array([(i[m] + 0.5) * h, (j[m] + 0.5) * h])
        sol = least_squares(lambda z: _orthogonality(curve, z[0], z[1]), x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.max(np.abs(sol.fun)) >= tol * L:
            continue
        a, b = sol.x % L
        sep = abs(a - b)
        if min(sep, L - sep) < window * L:
            continue
        d = float(np.linalg.norm(curve.point_at(a) - curve.point_at(b)))
        found.append((float(a), float(b), d))
    return found


def thickness_smooth(curve, n_samples=4096, grid=1024, window=4 / 1024):
    """Thickness ``min(minRad, dcsd / 2)`` of a smooth closed curve.

    Maximal curvature is sampled at ``n_samples`` points and refined by
    bounded golden-section/parabolic search. Doubly critical pairs are located as cells of a
    ``grid x grid`` parameter mesh where both orthogonality conditions change
    sign, away from the diagonal band ``|t - u| < window * L``, and refined by
    least squares. ``dcsd`` is ``inf`` when no pair is found.
    """
    kmax, s_kmax = _max_curvature(curve, n_samples)
    min_rad = math.inf if kmax == 0 else 1.0 / kmax
    pairs = _doubly_critical(curve, grid, window)
    if pairs:
        t, u, d = min(pairs, key=lambda q: (q[2], q[0], q[1]))
        dc = d
    else:
        t = u = None
        dc = math.inf
    value = min(min_rad, 0.5 * dc)
    # discretization error of the coarser of the two searches
    h = curve.total_length / grid
    err = 0.5 * h**2 * kmax * value if math.isfinite(value) else 0.0
    details = {
        "minrad": min_rad,
        "minrad_at": s_kmax,
        "dcsd": dc,
        "dcsd_pair": None if t is None else [t, u],
        "branch": "minrad" if min_rad <= 0.5 * dc else "dcsd",
    }
    return ReferenceValue(value, "dense_sampling", [n_samples, grid], err, details)


def reference(curve, kind, s=None, n_max=None, closed_form=True):
    """Reference value by energy name, using closed forms for circles when allowed."""
    if closed_form and isinstance(curve, Circle):
        return circle_reference(kind, s, curve.total_length)
    if kind == "moebius":
        return moebius_smooth(curve, n_max or 512)
    if kind == "menger":
        return menger_smooth(curve, s, n_max or 128)
    if kind == "thickness":
        return thickness_smooth(curve)
    raise ValueError(f"no smooth reference for {kind!r}")
