"""Knot-class preserving minimization over equilateral polygons.

Moves are single-vertex displacements followed by re-equilateralization.
Every move, including the vertex motions made by the projection, is checked
to sweep no triangle through a non-incident segment, so accepted states are
connected by crossing-free homotopies and stay in the initial knot class.
"""
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .energies import menger_discrete, min_distance_energy, moebius_discrete, thickness_value
from .errors import ConvergenceError, ValidationError
from .geometry import PolygonalKnot, pairwise_segment_distances, MoveCertificate, sweep_crossing_check

MINIMIZE_ENERGIES = ("thickness_inv", "moebius", "menger", "mindist")


@dataclass(frozen=True)
class MinimizeConfig:
    """Annealing schedule and objective.

    Step scale and temperature are multiplied by ``cooling_factor`` after
    each block of ``epoch_length`` iterations. ``initial_step`` is a
    fraction of the polygon length; the temperature is in energy units.
    """

    energy: str = "thickness_inv"
    s: float = None
    iterations: int = 20_000
    initial_step: float = 0.02
    cooling_factor: float = 0.8
    temperature_initial: float = 1e-3
    seed: int = 0
    equilateral_tol: float = 1e-10
    log_every: int = 100
    epoch_length: int = 1000
    projection_sweeps: int = 50
    stagnation_window: int = 5000

    def __post_init__(self):
        if self.energy not in MINIMIZE_ENERGIES:
            raise ValidationError(f"unknown energy {self.energy!r}; choose from {MINIMIZE_ENERGIES}")
        if self.energy == "menger" and not (self.s is not None and self.s > 0):
            raise ValidationError("the Menger energy needs a positive exponent s")
        if not (isinstance(self.iterations, int) and self.iterations > 0):
            raise ValidationError("iterations must be a positive integer")
        if not 0 < self.cooling_factor < 1:
            raise ValidationError("cooling_factor must lie in (0, 1)")
        if not 0 < self.initial_step < 0.5:
            raise ValidationError("initial_step must lie in (0, 0.5)")
        if not self.temperature_initial >= 0:
            raise ValidationError("temperature_initial must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        for name in ("log_every", "epoch_length", "projection_sweeps", "stagnation_window"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if not self.equilateral_tol > 0:
            raise ValidationError("equilateral_tol must be positive")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class MinimizeRun:
    """Record of one minimization.

    ``final`` is the best state seen, ``last`` the state the chain ended in.
    ``move_log`` holds ``(iteration, vertex, raw_position)`` for every
    accepted move, enough to replay the chain with :func:`replay_move_log`.
    """

    config: MinimizeConfig
    initial: PolygonalKnot
    final: PolygonalKnot
    last: PolygonalKnot
    initial_energy: float
    final_energy: float
    trace: list
    accepted: int = 0
    rejected: int = 0
    crossing_rejected: int = 0
    projection_failures: int = 0
    move_log: list = field(default_factory=list)
    stagnation: list = field(default_factory=list)
    method: str = "anneal"

    def to_dict(self):
        return {
            "method": self.method,
            "config": self.config.to_dict(),
            "initial": self.initial.vertices.tolist(),
            "final": self.final.vertices.tolist(),
            "last": self.last.vertices.tolist(),
            "initial_energy": self.initial_energy,
            "final_energy": self.final_energy,
            "trace": [[int(i), float(e)] for i, e in self.trace],
            "accepted": self.accepted,
            "rejected": self.rejected,
            "crossing_rejected": self.crossing_rejected,
            "projection_failures": self.projection_failures,
            "move_log": [[int(it), int(k), [float(c) for c in x]] for it, k, x in self.move_log],
            "stagnation": [list(w) for w in self.stagnation],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            config=MinimizeConfig.from_dict(d["config"]),
            initial=PolygonalKnot(d["initial"]),
            final=PolygonalKnot(d["final"]),
            last=PolygonalKnot(d["last"]),
            initial_energy=float(d["initial_energy"]),
            final_energy=float(d["final_energy"]),
            trace=[(int(i), float(e)) for i, e in d["trace"]],
            accepted=int(d["accepted"]),
            rejected=int(d["rejected"]),
            crossing_rejected=int(d["crossing_rejected"]),
            projection_failures=int(d["projection_failures"]),
            move_log=[(int(it), int(k), np.asarray(x, dtype=float)) for it, k, x in d["move_log"]],
            stagnation=[tuple(w) for w in d["stagnation"]],
            method=d.get("method", "anneal"),
        )


def objective(kind, s=None):
    """Energy to minimize as a function of a polygon; ``+inf`` on degenerate states."""
    if kind == "thickness_inv":
        def f(p):
            t = thickness_value(p)
            return math.inf if t == 0 else 1.0 / t
    elif kind == "moebius":
        def f(p):
            return moebius_discrete(p).value
    elif kind == "menger":
        def f(p):
            return menger_discrete(p, s).value
    elif kind == "mindist":
        def f(p):
            return min_distance_energy(p).value
    else:
        raise ValidationError(f"unknown energy {kind!r}")
    return f


# ---------------------------------------------------------------------------
# equilateral projection
# ---------------------------------------------------------------------------

def _project_vertices(v, target_length, tol, max_sweeps):
    n = len(v)
    ell = target_length / n
    x = np.array(v, dtype=float)
    for _ in range(max_sweeps):
        d = np.roll(x, -1, axis=0) - x
        sq = np.einsum("ij,ij->i", d, d)
        if np.max(np.abs(np.sqrt(sq) - ell)) <= tol * target_length:
            break
        # Newton step on |x_{k+1} - x_k|^2 = ell^2 with the least-norm update
        g = sq - ell**2
        A = np.diag(8.0 * sq)
        off = -4.0 * np.einsum("ij,ij->i", d, np.roll(d, -1, axis=0))
        k = np.arange(n)
        A[k, (k + 1) % n] += off
        A[(k + 1) % n, k] += off
        lam = np.linalg.solve(A, g)
        # row k of the Jacobian is 2 d_k on x_{k+1} and -2 d_k on x_k
        w = 2.0 * lam[:, None] * d
        x = x + w - np.roll(w, 1, axis=0)
    else:
        raise ConvergenceError(f"equilateral projection did not converge in {max_sweeps} sweeps")
    L = float(np.sqrt(np.einsum("ij,ij->i", d, d)).sum())
    c = x.mean(axis=0)
    return c + (x - c) * (target_length / L)


def project_equilateral(p, tol=1e-12, max_sweeps=50, target_length=None):
    """Nearby equilateral polygon with the same number of vertices.

    Newton iterations on the edge-length constraints with minimal-norm
    updates, so each vertex moves along the directions of its incident
    edges. Stops once every edge is within ``tol * L`` of ``L/n``; the
    result is rescaled about its centroid to total length ``target_length``
    (default: the length of ``p``).
    """
    L = p.total_length if target_length is None else float(target_length)
    if p.is_equilateral and abs(p.total_length - L) <= tol * L:
        e = p.edge_lengths
        if np.max(np.abs(e - L / p.n)) <= tol * L:
            return p
    return PolygonalKnot(_project_vertices(p.vertices, L, tol, max_sweeps))


# ---------------------------------------------------------------------------
# move safety
# ---------------------------------------------------------------------------

def _moves_safe(v, cert, start, steps):
    """Check a sequence of single-vertex moves ``steps = [(k, new_position), ...]`` from ``v``.

    Uses the displacement certificate ``cert`` of the starting polygon when
    it covers the whole sequence and the exact sweep test otherwise
    (always when ``cert`` is None).
    """
    if cert is not None:
        moved = np.zeros(len(v))
        cur = v.copy()
        for k, x in steps:
            moved[k] += np.linalg.norm(x - cur[k])
            cur[k] = x
        if cert.covers(moved):
            return True
    cur = start
    for k, x in steps:
        if np.array_equal(cur.vertices[k], x):
            continue
        if sweep_crossing_check(cur, k, x):
            return False
        try:
            cur = cur.with_vertex(k, x)
        except ValidationError:
            return False
    return True


def _move_steps(v, i, raw, projected):
    steps = [(i, raw)]
    after = v.copy()
    after[i] = raw
    for k in range(len(v)):
        if not np.array_equal(after[k], projected[k]):
            steps.append((k, projected[k]))
    return steps


def _check_start(p0, cfg):
    if not p0.is_equilateral:
        e = p0.edge_lengths
        if e.max() / e.min() - 1 > cfg.equilateral_tol:
            raise ValidationError("initial polygon is not equilateral; run project_equilateral first")
    if p0.n >= 4:
        _, _, d, _, _ = pairwise_segment_distances(p0)
        if d.min() <= 1e-12 * p0.total_length:
            raise ValidationError("initial polygon is not embedded: non-adjacent segments touch")


def _stagnation_windows(accept_iters, total, window):
    out = []
    marks = np.asarray(accept_iters, dtype=int)
    for start in range(0, total - window + 1, window):
        count = np.count_nonzero((marks > start) & (marks <= start + window))
        if count < 1e-3 * window:
            out.append((start + 1, start + window))
    return out


def anneal(p0, cfg):
    """Metropolis annealing over single-vertex Gaussian proposals.

    Each proposal moves one uniformly chosen vertex by an isotropic Gaussian
    of scale ``initial_step * L * cooling_factor**epoch``, is projected back
    onto the equilateral polygons, and is rejected outright if the raw move
    or any vertex motion of the projection could change the knot type.
    Surviving proposals are accepted by the Metropolis rule on the energy
    difference. Deterministic given the config.
    """
    _check_start(p0, cfg)
    f = objective(cfg.energy, cfg.s)
    rng = np.random.default_rng(cfg.seed)
    n = p0.n
    L = p0.total_length
    tol = min(cfg.equilateral_tol, 1e-12)

    cur = project_equilateral(p0, tol, cfg.projection_sweeps, L)
    E = f(cur)
    E0 = E
    cert = MoveCertificate(cur)
    best, best_E = cur, E
    trace = [(0, E)]
    run = MinimizeRun(cfg, p0, cur, cur, E0, E, trace)
    accept_iters = []

    for it in range(1, cfg.iterations + 1):
        epoch = (it - 1) // cfg.epoch_length
        factor = cfg.cooling_factor**epoch
        step = cfg.initial_step * L * factor
        T = cfg.temperature_initial * factor
        i = int(rng.integers(n))
        delta = rng.normal(size=3) * step
        u = rng.random()

        v = cur.vertices
        raw = v[i] + delta
        trial = v.copy()
        trial[i] = raw
        if np.array_equal(raw, v[(i - 1) % n]) or np.array_equal(raw, v[(i + 1) % n]):
            run.crossing_rejected += 1
            continue
        try:
            projected = _project_vertices(trial, L, tol, cfg.projection_sweeps)
        except (ConvergenceError, np.linalg.LinAlgError):
            run.projection_failures += 1
            continue
        if not _moves_safe(v, cert, cur, _move_steps(v, i, raw, projected)):
            run.crossing_rejected += 1
            continue
        try:
            cand = PolygonalKnot(projected)
        except ValidationError:
            run.projection_failures += 1
            continue
        E_new = f(cand)
        dE = E_new - E
        if dE <= 0 or (T > 0 and u < math.exp(-dE / T)):
            cur, E = cand, E_new
            cert = MoveCertificate(cur)
            run.accepted += 1
            run.move_log.append((it, i, raw))
            accept_iters.append(it)
            if E < best_E:
                best, best_E = cur, E
                trace.append((it, best_E))
        else:
            run.rejected += 1
        if it % cfg.log_every == 0 and trace[-1][0] != it:
            trace.append((it, best_E))

    if trace[-1][0] != cfg.iterations:
        trace.append((cfg.iterations, best_E))
    run.final, run.last, run.final_energy = best, cur, best_E
    run.stagnation = _stagnation_windows(accept_iters, cfg.iterations, cfg.stagnation_window)
    return run


def replay_move_log(p0, move_log, cfg, exact=False):
    """Re-run the accepted moves of a run and count crossing violations.

    Every move is re-projected and every vertex motion re-checked, by the
    exact sweep test when ``exact`` is set and by the displacement
    certificate with exact fallback otherwise. Returns
    ``(violations, final_polygon)``.
    """
    L = p0.total_length
    tol = min(cfg.equilateral_tol, 1e-12)
    cur = project_equilateral(p0, tol, cfg.projection_sweeps, L)
    violations = 0
    for _, i, raw in move_log:
        v = cur.vertices
        raw = np.asarray(raw, dtype=float)
        trial = v.copy()
        trial[i] = raw
        projected = _project_vertices(trial, L, tol, cfg.projection_sweeps)
        cert = None if exact else MoveCertificate(cur)
        if not _moves_safe(v, cert, cur, _move_steps(v, i, raw, projected)):
            violations += 1
        cur = PolygonalKnot(projected)
    return violations, cur


def descend_fd(p0, cfg, max_halvings=30):
    """Finite-difference gradient descent with backtracking, never increasing the energy.

    Central differences with step ``1e-6 L`` on all coordinates; each trial
    iterate is projected to equilateral and its vertex motions are checked
    for crossings. Stops after ``cfg.iterations`` steps or when the line
    search fails to find a decrease.
    """
    _check_start(p0, cfg)
    f = objective(cfg.energy, cfg.s)
    L = p0.total_length
    n = p0.n
    tol = min(cfg.equilateral_tol, 1e-12)
    h = 1e-6 * L
    cur = project_equilateral(p0, tol, cfg.projection_sweeps, L)
    E = f(cur)
    trace = [(0, E)]
    run = MinimizeRun(cfg, p0, cur, cur, E, E, trace, method="descend_fd")
    alpha = cfg.initial_step * L

    for it in range(1, cfg.iterations + 1):
        v = cur.vertices
        grad = np.zeros_like(v)
        for k in range(n):
            for c in range(3):
                vp = v.copy()
                vm = v.copy()
                vp[k, c] += h
                vm[k, c] -= h
                grad[k, c] = (f(PolygonalKnot(vp)) - f(PolygonalKnot(vm))) / (2 * h)
        gnorm = np.linalg.norm(grad)
        if not np.isfinite(gnorm) or gnorm == 0:
            break
        direction = -grad / gnorm
        cert = MoveCertificate(cur)
        step = alpha
        moved = False
        for _ in range(max_halvings):
            trial = v + step * direction
            try:
                projected = _project_vertices(trial, L, tol, cfg.projection_sweeps)
                cand = PolygonalKnot(projected)
            except (ConvergenceError, ValidationError, np.linalg.LinAlgError):
                run.projection_failures += 1
                step *= 0.5
                continue
            steps = [(k, trial[k]) for k in range(n)]
            steps += [(k, projected[k]) for k in range(n)]
            if not _moves_safe(v, cert, cur, steps):
                run.crossing_rejected += 1
                step *= 0.5
                continue
            E_new = f(cand)
            if E_new < E:
                cur, E = cand, E_new
                run.accepted += 1
                trace.append((it, E))
                moved = True
                alpha = 2 * step
                break
            run.rejected += 1
            step *= 0.5
        if not moved:
            break

    run.final = run.last = cur
    run.final_energy = E
    return run
