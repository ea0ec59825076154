"""Arc-length parametrized closed curves and polygons inscribed in them."""
import math

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, ValidationError
from .geometry import PolygonalKnot

# 8-point Gauss-Legendre rule on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class CurveProvider:
    """Closed curve parametrized by arc length on ``[0, total_length)``.

    Subclasses implement ``point_at`` and ``tangent_at``; ``curvature_at``
    falls back to finite differences of the unit tangent.
    """

    total_length = 1.0
    name = "curve"

    def point_at(self, s):
        raise NotImplementedError

    def tangent_at(self, s):
        h = 1e-6 * self.total_length
        s = np.asarray(s, dtype=float)
        d = self.point_at(s + h) - self.point_at(s - h)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def curvature_at(self, s):
        h = 1e-4 * self.total_length
        s = np.asarray(s, dtype=float)
        d = self.tangent_at(s + h) - self.tangent_at(s - h)
        return np.linalg.norm(d, axis=-1) / (2 * h)

    def params(self):
        """Construction parameters, for manifests."""
        return {"name": self.name, "total_length": self.total_length}


class Circle(CurveProvider):
    """Round circle of the given length in the z = 0 plane, starting on +x."""

    name = "circle"

    def __init__(self, length=1.0):
        self.total_length = float(length)
        self.radius = self.total_length / (2 * math.pi)

    def point_at(self, s):
        th = 2 * np.pi * np.asarray(s, dtype=float) / self.total_length
        return np.stack([self.radius * np.cos(th), self.radius * np.sin(th), np.zeros_like(th)], axis=-1)

    def tangent_at(self, s):
        th = 2 * np.pi * np.asarray(s, dtype=float) / self.total_length
        return np.stack([-np.sin(th), np.cos(th), np.zeros_like(th)], axis=-1)

    def curvature_at(self, s):
        return np.full(np.shape(s), 1.0 / self.radius)


class ParametricCurve(CurveProvider):
    """Closed curve ``t -> gamma(t)``, ``t`` in ``[0, period)``, reparametrized by arc length.

    The cumulative length is tabulated at ``knots`` points with an 8-point
    Gauss-Legendre rule per interval (exact to rounding for smooth speed at
    this resolution). The inverse map is cached as a quintic Hermite table
    built from the exact derivatives of ``t(s)`` at the same knots. The curve
    is rescaled to ``length``.

    Parameters
    ----------
    gamma, dgamma, ddgamma : callable
        Vectorized position and first two derivatives, ``(m,) -> (m, 3)``.
    """

    name = "parametric"

    def __init__(self, gamma, dgamma, ddgamma=None, period=2 * np.pi, length=1.0, knots=10_000):
        self._gamma = gamma
        self._dgamma = dgamma
        self._ddgamma = ddgamma
        self.period = float(period)
        self.knots = int(knots)
        self._t = np.linspace(0.0, self.period, self.knots + 1)
        h = self._t[1] - self._t[0]
        nodes = self._t[:-1, None] + h * _GL_X[None, :]
        speed = self._speed(nodes.ravel()).reshape(nodes.shape)
        pieces = h * (speed @ _GL_W)
        self._S = np.concatenate([[0.0], np.cumsum(pieces)])
        raw = self._S[-1]
        self.total_length = float(length)
        self._scale = self.total_length / raw
        self._inverse = self._build_inverse()

    def _speed(self, t):
        return np.linalg.norm(self._dgamma(t), axis=-1)

    def _partial_length(self, t0, t):
        nodes = t0[:, None] + (t - t0)[:, None] * _GL_X[None, :]
        sp = self._speed(nodes.ravel()).reshape(nodes.shape)
        return (t - t0) * (sp @ _GL_W)

    def _newton_parameter(self, s):
        # reference inversion: Newton on the tabulated interval, clipped to it
        target = np.mod(np.ravel(s), self.total_length) / self._scale
        k = np.clip(np.searchsorted(self._S, target, side="right") - 1, 0, self.knots - 1)
        lo, hi, base = self._t[k], self._t[k + 1], self._S[k]
        t = lo + (target - base) / (self._S[k + 1] - base) * (hi - lo)
        for _ in range(6):
            resid = base + self._partial_length(lo, t) - target
            t = np.clip(t - resid / self._speed(t), lo, hi)
        return t.reshape(np.shape(s))

    def _build_inverse(self):
        # quintic Hermite table of t(raw arc) from t, dt/ds, d2t/ds2 at the knots
        t = self._t
        d1 = self._dgamma(t)
        v = np.linalg.norm(d1, axis=-1)
        if self._ddgamma is not None:
            dv = np.einsum("ij,ij->i", d1, self._ddgamma(t)) / v
        else:
            h = 1e-5 * self.period
            dv = (self._speed(t + h) - self._speed(t - h)) / (2 * h)
        return np.column_stack([t, 1.0 / v, -dv / v**3])

    def parameter_at(self, s):
        """Curve parameter ``t`` whose arc position is ``s`` (mod total length)."""
        target = np.mod(np.asarray(s, dtype=float), self.total_length) / self._scale
        S = self._S
        k = np.clip(np.searchsorted(S, target, side="right") - 1, 0, self.knots - 1)
        h = S[k + 1] - S[k]
        x = (target - S[k]) / h
        x2 = x * x
        x3 = x2 * x
        x4 = x3 * x
        x5 = x4 * x
        y0 = self._inverse[k]
        y1 = self._inverse[k + 1]
        return (
            y0[..., 0] * (1 - 10 * x3 + 15 * x4 - 6 * x5)
            + h * y0[..., 1] * (x - 6 * x3 + 8 * x4 - 3 * x5)
            + h * h * y0[..., 2] * 0.5 * (x2 - 3 * x3 + 3 * x4 - x5)
            + y1[..., 0] * (10 * x3 - 15 * x4 + 6 * x5)
            + h * y1[..., 1] * (-4 * x3 + 7 * x4 - 3 * x5)
            + h * h * y1[..., 2] * 0.5 * (x3 - 2 * x4 + x5)
        )

    def point_at(self, s):
        t = self.parameter_at(s)
        return self._scale * self._gamma(t.ravel()).reshape(t.shape + (3,))

    def tangent_at(self, s):
        t = self.parameter_at(s)
        d = self._dgamma(t.ravel())
        d = d / np.linalg.norm(d, axis=-1, keepdims=True)
        return d.reshape(t.shape + (3,))

    def curvature_at(self, s):
        if self._ddgamma is None:
            return super().curvature_at(s)
        t = self.parameter_at(s).ravel()
        d1 = self._dgamma(t)
        d2 = self._ddgamma(t)
        k = np.linalg.norm(np.cross(d1, d2), axis=-1) / np.linalg.norm(d1, axis=-1) ** 3
        return (k / self._scale).reshape(np.shape(s))


class TorusKnot(ParametricCurve):
    """(p, q) torus knot on a torus with radii ``major > minor``.

    ``t -> ((R + r cos qt) cos pt, (R + r cos qt) sin pt, r sin qt)``; simple
    whenever ``gcd(p, q) = 1``. (2, 3) is the trefoil.
    """

    name = "torus"

    def __init__(self, p=2, q=3, major=2.0, minor=1.0, length=1.0, knots=10_000):
        if math.gcd(int(p), int(q)) != 1:
            raise ValidationError(f"torus knot needs coprime (p, q), got ({p}, {q})")
        if not major > minor > 0:
            raise ValidationError("torus knot needs major > minor > 0")
        self.p, self.q, self.major, self.minor = int(p), int(q), float(major), float(minor)
        P, Q, R, r = self.p, self.q, self.major, self.minor

        def gamma(t):
            rho = R + r * np.cos(Q * t)
            return np.stack([rho * np.cos(P * t), rho * np.sin(P * t), r * np.sin(Q * t)], axis=-1)

        def dgamma(t):
            rho = R + r * np.cos(Q * t)
            drho = -r * Q * np.sin(Q * t)
            return np.stack(
                [
                    drho * np.cos(P * t) - P * rho * np.sin(P * t),
                    drho * np.sin(P * t) + P * rho * np.cos(P * t),
                    r * Q * np.cos(Q * t),
                ],
                axis=-1,
            )

        def ddgamma(t):
            rho = R + r * np.cos(Q * t)
            drho = -r * Q * np.sin(Q * t)
            ddrho = -r * Q * Q * np.cos(Q * t)
            c, s = np.cos(P * t), np.sin(P * t)
            return np.stack(
                [
                    ddrho * c - 2 * P * drho * s - P * P * rho * c,
                    ddrho * s + 2 * P * drho * c - P * P * rho * s,
                    -r * Q * Q * np.sin(Q * t),
                ],
                axis=-1,
            )

        super().__init__(gamma, dgamma, ddgamma, length=length, knots=knots)

    def params(self):
        return {
            "name": self.name,
            "p": self.p,
            "q": self.q,
            "major": self.major,
            "minor": self.minor,
            "total_length": self.total_length,
            "knots": self.knots,
        }


class Ellipse(ParametricCurve):
    """Planar ellipse with semi-axes ``a >= b``, rescaled to the given length."""

    name = "ellipse"

    def __init__(self, a=1.0, b=0.9, length=1.0, knots=10_000):
        self.a, self.b = float(a), float(b)

        def gamma(t):
            return np.stack([a * np.cos(t), b * np.sin(t), np.zeros_like(t)], axis=-1)

        def dgamma(t):
            return np.stack([-a * np.sin(t), b * np.cos(t), np.zeros_like(t)], axis=-1)

        def ddgamma(t):
            return np.stack([-a * np.cos(t), -b * np.sin(t), np.zeros_like(t)], axis=-1)

        super().__init__(gamma, dgamma, ddgamma, length=length, knots=knots)

    def params(self):
        return {"name": self.name, "a": self.a, "b": self.b, "total_length": self.total_length}


class TransformedCurve(CurveProvider):
    """``x -> scale * R x + t`` applied to another curve; arc length rescales too."""

    name = "transformed"

    def __init__(self, curve, rotation=None, translation=None, scale=1.0):
        self.curve = curve
        self.rotation = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        self.translation = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        self.scale = float(scale)
        self.total_length = curve.total_length * self.scale

    def point_at(self, s):
        x = self.curve.point_at(np.asarray(s, dtype=float) / self.scale)
        return self.scale * x @ self.rotation.T + self.translation

    def tangent_at(self, s):
        return self.curve.tangent_at(np.asarray(s, dtype=float) / self.scale) @ self.rotation.T

    def curvature_at(self, s):
        return self.curve.curvature_at(np.asarray(s, dtype=float) / self.scale) / self.scale

    def params(self):
        return {"name": self.name, "base": self.curve.params(), "scale": self.scale}


def curve_from_spec(spec, length=1.0):
    """Build a curve from ``circle``, ``torus:P,Q`` or ``ellipse:A,B``."""
    name, _, args = spec.partition(":")
    try:
        values = [float(a) for a in args.split(",")] if args else []
    except ValueError:
        raise ValidationError(f"bad curve arguments in {spec!r}") from None
    if name == "circle" and not values:
        return Circle(length)
    if name == "torus" and len(values) == 2:
        return TorusKnot(int(values[0]), int(values[1]), length=length)
    if name == "ellipse" and len(values) == 2:
        return Ellipse(values[0], values[1], length=length)
    raise ValidationError(f"unknown curve {spec!r}; use circle, torus:P,Q or ellipse:A,B")


# ---------------------------------------------------------------------------
# inscription
# ---------------------------------------------------------------------------

def inscribe_uniform(curve, n):
    """Polygon through ``curve.point_at(i L / n)``, ``i = 0..n-1``."""
    if int(n) != n or n < 3:
        raise ValidationError(f"need an integer n >= 3, got {n}")
    s = curve.total_length * np.arange(int(n)) / int(n)
    return PolygonalKnot(curve.point_at(s))


def _next_chord_position(curve, s0, x0, c, limit):
    """Smallest ``s > s0`` with ``|curve(s) - x0| = c``.

    Newton on the chord length, falling back to bisection whenever a step
    leaves the current bracket.
    """
    L = curve.total_length
    # chords never exceed arcs, so the first hit is at least c along the curve
    lo = s0 + c
    d = curve.point_at(lo) - x0
    if np.linalg.norm(d) >= c:
        return lo
    hi = None
    s = lo
    for _ in range(200):
        d = curve.point_at(s) - x0
        r = np.linalg.norm(d)
        g = r - c
        if g < 0:
            lo = max(lo, s)
        else:
            hi = s if hi is None else min(hi, s)
        slope = curve.tangent_at(s) @ d / r
        step_ok = slope > 0
        s_new = s - g / slope if step_ok else None
        upper = hi if hi is not None else s0 + limit
        if s_new is None or not (lo <= s_new <= upper):
            s_new = 0.5 * (lo + hi) if hi is not None else min(s + 0.25 * c, upper)
        if abs(s_new - s) <= 4 * np.finfo(float).eps * max(L, abs(s)):
            return s_new
        if s_new - s0 >= limit:
            raise ConvergenceError("chord marching ran past half the curve")
        s = s_new
    raise ConvergenceError("chord step did not converge")


def _march(curve, n, c):
    L = curve.total_length
    s = np.empty(n + 1)
    s[0] = 0.0
    x = curve.point_at(0.0)
    for k in range(n):
        s[k + 1] = _next_chord_position(curve, s[k], x, c, 0.5 * L)
        x = curve.point_at(s[k + 1])
    return s


def equilateral_positions(curve, n, tol=1e-12, max_iter=200):
    """Arc positions of an inscribed equilateral n-gon starting at position 0.

    Chords of trial length ``c`` are marched from position 0; ``c`` is then
    root-found so that the n-th chord closes up at position ``L``.

    Returns
    -------
    positions : ndarray, shape (n,)
    chord : float
    """
    if int(n) != n or n < 3:
        raise ValidationError(f"need an integer n >= 3, got {n}")
    n = int(n)
    L = curve.total_length

    def closure(c):
        try:
            return _march(curve, n, c)[-1] - L
        except ConvergenceError:
            # long chords can fail to find a next hit; that only happens past the root
            return L

    c_hi = L / n
    c_lo = 0.5 * c_hi
    while closure(c_lo) >= 0:
        c_lo *= 0.5
        if c_lo < 1e-6 * c_hi:
            raise ConvergenceError("could not bracket the equilateral chord length")
    if closure(c_hi) == 0:
        c = c_hi
    else:
        try:
            c = brentq(closure, c_lo, c_hi, xtol=1e-17 * L, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
        except RuntimeError as exc:
            raise ConvergenceError(f"equilateral inscription did not converge: {exc}") from None
    s = _march(curve, n, c)
    defect = abs(s[-1] - L)
    pts = curve.point_at(s[:-1])
    chords = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    if defect > tol * L or np.abs(chords - c).max() > tol * L:
        raise ConvergenceError(
            f"equilateral inscription missed tolerance: closure {defect:.3g}, "
            f"chord spread {np.abs(chords - c).max():.3g}"
        )
    return s[:-1], c


def inscribe_equilateral(curve, n, tol=1e-12, max_iter=200):
    """Inscribed polygon with n equal chords, first vertex at arc position 0."""
    s, _ = equilateral_positions(curve, n, tol=tol, max_iter=max_iter)
    return PolygonalKnot(curve.point_at(s))
