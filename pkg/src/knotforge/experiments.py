"""Numerical experiments: convergence of discrete energies on inscribed polygons.

Each study returns a report object with ``to_dict`` for JSON, ``csv_rows``
for the fixed ``n,energy,reference,error`` table and ``table`` for a
human-readable summary.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .curves import Circle, TorusKnot, curve_from_spec, equilateral_positions, inscribe_equilateral, inscribe_uniform
from .energies import menger_discrete, min_distance_energy, moebius_discrete, thickness_discrete
from .errors import ValidationError
from .geometry import PolygonalKnot, regular_ngon
from .minimize import MinimizeConfig, anneal, project_equilateral, replay_move_log
from .reference import ReferenceValue, reference

CSV_COLUMNS = ("n", "energy", "reference", "error")
STUDY_ENERGIES = ("moebius", "menger", "thickness", "thickness_inv", "mindist")


def _check_ns(ns, minimum=3):
    ns = [int(n) for n in ns]
    if len(ns) < minimum:
        raise ValidationError(f"need at least {minimum} values of n, got {len(ns)}")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValidationError("n values must be strictly increasing")
    if ns[0] < 3:
        raise ValidationError("n must be at least 3")
    return ns


def inscribed_polygon(curve, kind, n):
    """Inscribed polygon used for ``kind``: uniform arcs for Möbius and minimum distance, equilateral otherwise."""
    if kind in ("moebius", "mindist"):
        return inscribe_uniform(curve, n)
    return inscribe_equilateral(curve, n)


def discrete_energy(p, kind, s=None):
    """Discrete energy by study name; ``thickness_inv`` is ``1 / thickness``."""
    if kind == "moebius":
        return moebius_discrete(p).value
    if kind == "mindist":
        return min_distance_energy(p).value
    if kind == "menger":
        return menger_discrete(p, s).value
    if kind == "thickness":
        return thickness_discrete(p).value
    if kind == "thickness_inv":
        t = thickness_discrete(p).value
        return math.inf if t == 0 else 1.0 / t
    raise ValidationError(f"unknown energy {kind!r}; choose from {STUDY_ENERGIES}")


def smooth_reference(curve, kind, s=None):
    """Reference value of the smooth counterpart of ``kind``."""
    if kind == "thickness_inv":
        r = reference(curve, "thickness")
        err = r.estimated_error / r.value**2
        return ReferenceValue(1.0 / r.value, r.method, r.n_used, err, r.details)
    if kind == "mindist":
        # the minimum distance energy approximates the Möbius energy
        return reference(curve, "moebius")
    return reference(curve, kind, s)


def _evaluate(curve, kind, ns, s, threads):
    def one(n):
        return discrete_energy(inscribed_polygon(curve, kind, n), kind, s)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, ns))
    return [one(n) for n in ns]


def fit_slope(ns, errors):
    """Least-squares fit of ``log(error) = c - slope * log(n)``; returns ``(slope, intercept, rms_residual)``."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    A = np.column_stack([np.ones_like(x), -x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[1]), float(coef[0]), float(np.sqrt(np.mean(resid**2)))


@dataclass
class ConvergenceStudy:
    curve_id: str
    energy: str
    s: float
    ns: list
    energies: list
    reference: ReferenceValue
    errors: list
    slope: float = None
    intercept: float = None
    residual: float = None
    slope_note: str = ""

    @property
    def monotone(self):
        """Whether the errors strictly decrease along ``ns``."""
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))

    def csv_rows(self):
        return [(n, e, self.reference.value, err) for n, e, err in zip(self.ns, self.energies, self.errors)]

    def to_dict(self):
        return {
            "curve": self.curve_id,
            "energy": self.energy,
            "s": self.s,
            "n": list(self.ns),
            "energies": list(self.energies),
            "errors": list(self.errors),
            "reference": self.reference.to_dict(),
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "slope_note": self.slope_note,
            "monotone": self.monotone,
        }

    def table(self):
        head = f"{self.energy} on {self.curve_id}" + (f" (s = {self.s:g})" if self.s is not None else "")
        lines = [head, f"reference {self.reference.value:.12g} [{self.reference.method}]",
                 f"{'n':>6} {'energy':>22} {'error':>12}"]
        lines += [f"{n:>6} {e:>22.15g} {err:>12.4e}" for n, e, err in zip(self.ns, self.energies, self.errors)]
        if self.slope is not None:
            lines.append(f"slope {self.slope:.4f} (rms residual {self.residual:.2e})")
        elif self.slope_note:
            lines.append(f"slope not fitted: {self.slope_note}")
        return "\n".join(lines)


def curve_id_of(curve):
    params = curve.params()
    name = params.get("name", type(curve).__name__)
    if name == "torus":
        return f"torus:{params['p']},{params['q']}"
    if name == "ellipse":
        return f"ellipse:{params['a']:g},{params['b']:g}"
    return name


def convergence_study(curve, kind, ns, s=None, ref=None, threads=None):
    """Discrete energies of inscribed polygons against the smooth reference, with a log-log slope.

    Möbius and minimum distance energies use uniformly inscribed polygons,
    the others equilateral ones. The slope is not fitted when some error is
    within ten rounding units of the reference.
    """
    ns = _check_ns(ns)
    if kind not in STUDY_ENERGIES:
        raise ValidationError(f"unknown energy {kind!r}; choose from {STUDY_ENERGIES}")
    if kind == "menger" and not (s is not None and s > 0):
        raise ValidationError("the Menger energy needs a positive exponent s")
    ref = ref if ref is not None else smooth_reference(curve, kind, s)
    energies = _evaluate(curve, kind, ns, s, threads)
    errors = [abs(e - ref.value) for e in energies]
    study = ConvergenceStudy(curve_id_of(curve), kind, s, ns, energies, ref, errors)
    floor = 10 * np.finfo(float).eps * max(abs(ref.value), np.finfo(float).tiny)
    if min(errors) <= floor:
        study.slope_note = "an error is at rounding level of the reference"
    else:
        study.slope, study.intercept, study.residual = fit_slope(ns, errors)
    return study


# ---------------------------------------------------------------------------
# explicit bound for the minimum distance energy
# ---------------------------------------------------------------------------

RAWDON_CONSTANT = 290.0
# Möbius energy of the round circle; E_md vanishes on regular polygons instead
CIRCLE_MOEBIUS = 4.0


@dataclass
class RawdonReport:
    curve_id: str
    thickness: float
    moebius_reference: float
    ns: list
    energies: list
    errors: list
    bounds: list
    holds: list
    threshold: int
    normalized_errors: list = field(default_factory=list)

    @property
    def errors_decreasing(self):
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))

    def csv_rows(self):
        return [(n, e, self.moebius_reference, err) for n, e, err in zip(self.ns, self.energies, self.errors)]

    def to_dict(self):
        return {
            "curve": self.curve_id,
            "thickness": self.thickness,
            "moebius_reference": self.moebius_reference,
            "n": list(self.ns),
            "energies": list(self.energies),
            "errors": list(self.errors),
            "bounds": list(self.bounds),
            "holds": list(self.holds),
            "threshold": self.threshold,
            "errors_decreasing": self.errors_decreasing,
            "normalized_errors": list(self.normalized_errors),
        }

    def table(self):
        lines = [f"minimum distance energy bound on {self.curve_id}",
                 f"{'n':>6} {'E_md':>20} {'|E - E_md|':>14} {'bound':>12} holds {'|E - 4 - E_md|':>15}"]
        lines += [f"{n:>6} {e:>20.12g} {err:>14.6e} {b:>12.4f} {'yes' if h else 'no ':>5} {z:>15.6e}"
                  for n, e, err, b, h, z in zip(self.ns, self.energies, self.errors, self.bounds, self.holds,
                                                self.normalized_errors)]
        lines.append(f"bound holds for all tested n >= {self.threshold}" if self.threshold is not None
                     else "bound fails at the largest tested n")
        return "\n".join(lines)


def rawdon_bound_check(curve, ns, thickness=None, moebius=None):
    """Compare ``|E(curve) - E_md,n(p_n)|`` with ``290 / Delta^(1/4) * n^(-1/4)``.

    ``p_n`` divides the curve into ``n`` arcs of equal length. Thickness is
    taken for the curve rescaled to length 1, so the check is scale free.
    ``threshold`` is the smallest tested ``n`` from which the bound holds for
    every larger tested ``n`` (``None`` if it fails at the largest).

    Since ``E_md`` is zero on regular polygons while the circle has Möbius
    energy 4, ``|E - E_md|`` tends to 4 rather than 0; ``normalized_errors``
    holds ``|E - 4 - E_md|``, which does tend to 0.
    """
    ns = _check_ns(ns, minimum=1)
    L = curve.total_length
    delta = (thickness if thickness is not None else reference(curve, "thickness").value) / L
    E = moebius if moebius is not None else reference(curve, "moebius").value
    energies = [min_distance_energy(inscribe_uniform(curve, n)).value for n in ns]
    errors = [abs(E - e) for e in energies]
    bounds = [RAWDON_CONSTANT * delta**-0.25 * n**-0.25 for n in ns]
    holds = [err <= b for err, b in zip(errors, bounds)]
    threshold = None
    for k in range(len(ns) - 1, -1, -1):
        if not holds[k]:
            break
        threshold = ns[k]
    normalized = [abs(E - CIRCLE_MOEBIUS - e) for e in energies]
    return RawdonReport(curve_id_of(curve), delta, E, ns, energies, errors, bounds, holds, threshold, normalized)


# ---------------------------------------------------------------------------
# recovery sequences
# ---------------------------------------------------------------------------

def uniform_deviation(curve, positions, p, samples=16):
    """``max |curve(s) - p(s)|`` with ``p`` linear between its vertices at arc ``positions``."""
    L = curve.total_length
    v = p.vertices
    n = p.n
    ends = np.append(positions, L)
    t = np.linspace(0.0, 1.0, samples + 1)
    worst = 0.0
    for k in range(n):
        s = ends[k] + t * (ends[k + 1] - ends[k])
        chord = v[k] + t[:, None] * (v[(k + 1) % n] - v[k])
        worst = max(worst, float(np.linalg.norm(curve.point_at(s % L) - chord, axis=1).max()))
    return worst


@dataclass
class GammaReport:
    curve_id: str
    energy: str
    s: float
    ns: list
    deviations: list
    deviation_bounds: list
    energies: list
    reference: ReferenceValue
    errors: list

    def csv_rows(self):
        return [(n, e, self.reference.value, err) for n, e, err in zip(self.ns, self.energies, self.errors)]

    def to_dict(self):
        return {
            "curve": self.curve_id,
            "energy": self.energy,
            "s": self.s,
            "n": list(self.ns),
            "deviations": list(self.deviations),
            "deviation_bounds": list(self.deviation_bounds),
            "energies": list(self.energies),
            "errors": list(self.errors),
            "reference": self.reference.to_dict(),
        }

    def table(self):
        lines = [f"recovery sequence for {self.energy} on {self.curve_id}",
                 f"{'n':>6} {'deviation':>12} {'sagitta':>12} {'energy':>20} {'error':>12}"]
        lines += [f"{n:>6} {d:>12.4e} {b:>12.4e} {e:>20.12g} {err:>12.4e}"
                  for n, d, b, e, err in zip(self.ns, self.deviations, self.deviation_bounds, self.energies, self.errors)]
        return "\n".join(lines)


def gamma_recovery(curve, kind, ns, s=None):
    """Inscribed polygons as a recovery sequence: uniform distance and energy error per ``n``.

    The deviation bound is the sagitta ``(h/2)^2 kappa_max / 2`` of an arc of
    length ``h = L/n``.
    """
    ns = _check_ns(ns, minimum=2)
    ref = smooth_reference(curve, kind, s)
    L = curve.total_length
    kmax = float(curve.curvature_at(np.linspace(0.0, L, 4096, endpoint=False)).max())
    devs, bounds, energies = [], [], []
    for n in ns:
        if kind in ("moebius", "mindist"):
            positions = np.arange(n) * (L / n)
            p = inscribe_uniform(curve, n)
        else:
            positions, _ = equilateral_positions(curve, n)
            p = PolygonalKnot(curve.point_at(positions))
        devs.append(uniform_deviation(curve, positions, p))
        h = float(np.max(np.diff(np.append(positions, L))))
        bounds.append((h / 2) ** 2 * kmax / 2)
        energies.append(discrete_energy(p, kind, s))
    errors = [abs(e - ref.value) for e in energies]
    return GammaReport(curve_id_of(curve), kind, s, ns, devs, bounds, energies, ref, errors)


# ---------------------------------------------------------------------------
# minimizer trends
# ---------------------------------------------------------------------------

def initial_polygon(knot, n, seed=0, perturbation=0.05):
    """Starting polygon for a knot class.

    ``unknot``: the regular n-gon with every vertex moved by a seeded
    Gaussian of scale ``perturbation`` times the edge length, then made
    equilateral. ``trefoil``: equilateral inscription of the (2,3) torus knot.
    """
    if knot == "unknot":
        g = regular_ngon(n)
        rng = np.random.default_rng(seed)
        v = g.vertices + rng.normal(size=(n, 3)) * (perturbation / n)
        return project_equilateral(PolygonalKnot(v), 1e-13, 50, 1.0)
    if knot == "trefoil":
        return inscribe_equilateral(TorusKnot(2, 3), n)
    raise ValidationError(f"unknown knot {knot!r}; choose unknot or trefoil")


def regular_target(kind, n, s=None):
    """Energy of the regular n-gon, the minimizer among equilateral unknots."""
    g = regular_ngon(n)
    if kind == "thickness_inv":
        return 2 * n * math.tan(math.pi / n)
    if kind == "moebius":
        return moebius_discrete(g).value
    if kind == "menger":
        return menger_discrete(g, s).value
    if kind == "mindist":
        return 0.0
    raise ValidationError(f"unknown energy {kind!r}")


@dataclass
class TrendReport:
    knot: str
    energy: str
    s: float
    runs: list = field(default_factory=list)
    note: str = "heuristic: annealed energies carry no optimality certificate"

    def best_by_n(self):
        best = {}
        for r in self.runs:
            if r["n"] not in best or r["best"] < best[r["n"]]["best"]:
                best[r["n"]] = r
        return [best[n] for n in sorted(best)]

    @property
    def decreasing(self):
        vals = [r["best"] for r in self.best_by_n()]
        return all(b < a for a, b in zip(vals, vals[1:]))

    def csv_rows(self):
        rows = []
        for r in self.best_by_n():
            target = r["target"]
            rows.append((r["n"], r["best"], target, None if target is None else abs(r["best"] - target)))
        return rows

    def to_dict(self):
        return {"knot": self.knot, "energy": self.energy, "s": self.s, "runs": list(self.runs),
                "best_by_n": self.best_by_n(), "decreasing": self.decreasing, "note": self.note}

    def table(self):
        lines = [f"annealed {self.energy} for {self.knot} ({self.note})",
                 f"{'n':>4} {'seed':>6} {'initial':>14} {'best':>14} {'target':>14} {'replay':>7}"]
        for r in self.runs:
            target = "-" if r["target"] is None else f"{r['target']:.8g}"
            replay = "-" if r["violations"] is None else str(r["violations"])
            lines.append(f"{r['n']:>4} {r['seed']:>6} {r['initial']:>14.8g} {r['best']:>14.8g} {target:>14} {replay:>7}")
        return "\n".join(lines)


def minimizer_trend(knot, kind, ns, seeds, config=None, verify_replay=False, s=None):
    """Anneal each ``(n, seed)`` and record the best energy per run.

    ``config`` supplies the schedule (the seed is overridden per run). The
    target is the regular n-gon value for the unknot and absent for other
    knots.
    """
    base = config if config is not None else MinimizeConfig(energy=kind, s=s)
    if base.energy != kind:
        base = MinimizeConfig.from_dict({**base.to_dict(), "energy": kind, "s": s if s is not None else base.s})
    report = TrendReport(knot, kind, base.s)
    for n in ns:
        for seed in seeds:
            p0 = initial_polygon(knot, n, seed)
            cfg = MinimizeConfig.from_dict({**base.to_dict(), "seed": int(seed)})
            run = anneal(p0, cfg)
            violations = replay_move_log(p0, run.move_log, cfg)[0] if verify_replay else None
            report.runs.append({
                "n": int(n),
                "seed": int(seed),
                "initial": run.initial_energy,
                "best": run.final_energy,
                "target": regular_target(kind, n, base.s) if knot == "unknot" else None,
                "accepted": run.accepted,
                "crossing_rejected": run.crossing_rejected,
                "violations": violations,
            })
    return report


def default_curve(curve_id):
    return Circle() if curve_id in (None, "circle") else curve_from_spec(curve_id)
