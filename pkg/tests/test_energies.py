import itertools
import math

import numpy as np
import pytest
from scipy.optimize import minimize
from hypothesis import given, settings, strategies as st

from _support import (
    arc_of,
    grid_dcsd,
    is_doubly_critical,
    random_equilateral,
    random_polygon,
    random_rotation,
)
from knotforge.energies import (
    EnergyReport,
    _dcsd_fast,
    dcrit,
    dcsd,
    discrete_kappa,
    energy,
    max_triple_kappa,
    menger_discrete,
    menger_power_mean,
    min_distance_U,
    min_distance_energy,
    minrad,
    moebius_discrete,
    moebius_terms,
    ropelength_discrete,
    thickness_discrete,
    thickness_value,
)
from knotforge.geometry import PolygonalKnot, circumradius, regular_ngon


def rectangle(a, b):
    return PolygonalKnot([[0, 0, 0], [a, 0, 0], [a, b, 0], [0, b, 0]])


def menger_closed_form(n, s):
    return n * (n - 1) * (n - 2) / n**3 * (2 * n * math.sin(math.pi / n)) ** s


def thickness_closed_form(n, length=1.0):
    return length / (2 * n * math.tan(math.pi / n))


# ---------------------------------------------------------------------------
# independent oracles: literal transcriptions of the defining sums
# ---------------------------------------------------------------------------

def moebius_oracle(p):
    v, e, L = p.vertices, p.edge_lengths, p.total_length
    a = p.arc_positions
    total = 0.0
    for i in range(p.n):
        for j in range(p.n):
            if i == j:
                continue
            chord2 = float(((v[i] - v[j]) ** 2).sum())
            d = min(abs(a[i] - a[j]), L - abs(a[i] - a[j]))
            total += (1 / chord2 - 1 / d**2) * e[i] * e[j]
    return total


def menger_oracle(p, s):
    v, e = p.vertices, p.edge_lengths
    w = [(e[i - 1] + e[i]) / 2 for i in range(p.n)]
    total = 0.0
    for i, j, k in itertools.permutations(range(p.n), 3):
        r = circumradius(v[i], v[j], v[k])
        kappa = 0.0 if math.isinf(r) else 1 / r
        total += kappa**s * w[i] * w[j] * w[k]
    return total


def mindist_oracle(p, samples=100):
    """Grid search over both segment parameters, refined by bounded local minimization."""
    v, e, n = p.vertices, p.edge_lengths, p.n
    t = np.linspace(0, 1, samples)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if len({i, (i + 1) % n} & {j, (j + 1) % n}):
                continue
            A = v[i] + t[:, None] * (v[(i + 1) % n] - v[i])
            B = v[j] + t[:, None] * (v[(j + 1) % n] - v[j])
            G = np.linalg.norm(A[:, None] - B[None], axis=2)
            k, l = np.unravel_index(np.argmin(G), G.shape)

            def dist(x, i=i, j=j):
                return np.linalg.norm(
                    v[i] + x[0] * (v[(i + 1) % n] - v[i]) - v[j] - x[1] * (v[(j + 1) % n] - v[j])
                )

            res = minimize(dist, [t[k], t[l]], bounds=[(0, 1), (0, 1)], method="L-BFGS-B",
                           options={"ftol": 1e-15, "gtol": 1e-12})
            d = min(res.fun, G[k, l])
            total += e[i] * e[j] / d**2
    return total


def kappa_oracle(x, y, z):
    a, b = np.subtract(y, x), np.subtract(z, y)
    phi = math.acos(np.clip(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)), -1, 1))
    return 2 * math.tan(phi / 2) / ((np.linalg.norm(a) + np.linalg.norm(b)) / 2)


# ---------------------------------------------------------------------------
# Möbius
# ---------------------------------------------------------------------------

def test_moebius_examples():
    assert moebius_discrete(regular_ngon(4)).value == pytest.approx(1.0, abs=1e-12)
    assert moebius_discrete(regular_ngon(3)).value == pytest.approx(0.0, abs=1e-12)
    p = PolygonalKnot([[0, 0, 0], [1, 0, 0], [0, 0, 0], [0, 1, 0]])
    rep = moebius_discrete(p)
    assert rep.value == math.inf and rep.degenerate and rep.argmin_witness == (0, 2)


def test_moebius_regular_ngon_values_are_frozen():
    # computed once from the literal oracle, and by hand for n = 4
    assert moebius_discrete(regular_ngon(8)).value == pytest.approx(2.3252526, rel=1e-7)
    assert moebius_discrete(regular_ngon(8)).value == pytest.approx(moebius_oracle(regular_ngon(8)), rel=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_moebius_matches_literal_sum(seed):
    p = random_polygon(np.random.default_rng(seed), 9)
    assert moebius_discrete(p).value == pytest.approx(moebius_oracle(p), rel=1e-12)


def test_moebius_terms_nonnegative():
    rng = np.random.default_rng(1)
    for n in (4, 16, 128):
        for p in (random_polygon(rng, n), random_equilateral(rng, n), regular_ngon(n)):
            t = moebius_terms(p)
            assert (t >= 0).all() and np.diag(t).sum() == 0


def test_moebius_decreases_to_circle_value():
    values = [moebius_discrete(regular_ngon(n)).value for n in (8, 16, 32, 64)]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert values[-1] < 4


# ---------------------------------------------------------------------------
# minimum distance
# ---------------------------------------------------------------------------

def test_mindist_examples():
    assert min_distance_U(regular_ngon(4)) == pytest.approx(4.0, rel=1e-14)
    assert min_distance_U(rectangle(1 / 6, 1 / 3)) == pytest.approx(8.5, rel=1e-14)
    assert min_distance_U(regular_ngon(3)) == 0.0
    assert min_distance_energy(rectangle(1 / 6, 1 / 3)).value == pytest.approx(4.5, rel=1e-13)
    for n in (3, 4, 5, 12, 64):
        assert min_distance_energy(regular_ngon(n)).value == 0.0


def test_mindist_square_any_scale_and_position():
    R = random_rotation(np.random.default_rng(2))
    sq = rectangle(3.0, 3.0).transformed(R, [1, 2, 3])
    assert min_distance_energy(sq).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_mindist_matches_sampled_distances(seed):
    p = random_polygon(np.random.default_rng(seed), 7)
    assert min_distance_U(p) == pytest.approx(mindist_oracle(p), rel=1e-6)


def test_mindist_touching_segments_is_infinite():
    p = PolygonalKnot([[0, 0, 0], [2, 0, 0], [2, 1, 0], [1, -1, 0], [0, 1, 0]])
    rep = min_distance_energy(p)
    assert rep.value == math.inf and rep.degenerate


# ---------------------------------------------------------------------------
# Menger
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", range(4, 33))
@pytest.mark.parametrize("s", [1, 2, 3, 6])
def test_menger_regular_closed_form(n, s):
    assert menger_discrete(regular_ngon(n), s).value == pytest.approx(menger_closed_form(n, s), rel=1e-12)


def test_menger_square_example():
    assert menger_discrete(regular_ngon(4), 2).value == pytest.approx(12.0, rel=1e-14)


def test_menger_64gon_closed_form_and_gap_to_circle():
    value = menger_discrete(regular_ngon(64), 2).value
    assert value == pytest.approx(menger_closed_form(64, 2), rel=1e-12)
    # the factor (n-1)(n-2)/n^2 keeps the 64-gon about 4.7% below the circle
    assert 1 - value / (2 * math.pi) ** 2 == pytest.approx(0.0467, abs=5e-4)


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("s", [0.5, 2, 3.5])
def test_menger_matches_literal_sum(seed, s):
    p = random_polygon(np.random.default_rng(seed), 6)
    assert menger_discrete(p, s).value == pytest.approx(menger_oracle(p, s), rel=1e-12)


def test_menger_collinear_triple_contributes_zero():
    # vertices 0, 1, 2 collinear
    zig = PolygonalKnot([[0, 0, 0], [1, 0, 0], [2, 0, 0], [1.5, 1, 0], [0.5, 1.2, 0.3]])
    assert menger_discrete(zig, 2).value == pytest.approx(menger_oracle(zig, 2), rel=1e-12)
    v = zig.vertices
    assert circumradius(v[0], v[1], v[2]) == math.inf


def test_menger_degenerate_and_bad_exponent():
    p = PolygonalKnot([[0, 0, 0], [1, 0, 0], [0, 0, 0], [0, 1, 0]])
    assert menger_discrete(p, 2).value == math.inf and menger_discrete(p, 2).degenerate
    with pytest.raises(ValueError):
        menger_discrete(regular_ngon(5), 0)


def test_menger_power_mean_matches_direct_root():
    p = random_equilateral(np.random.default_rng(3), 7)
    for s in (1, 2, 5):
        assert menger_power_mean(p, s) == pytest.approx(menger_discrete(p, s).value ** (1 / s), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 9))
def test_menger_power_mean_nondecreasing(seed, n):
    p = random_equilateral(np.random.default_rng(seed), n)
    means = [menger_power_mean(p, s) for s in (1, 2, 4, 8, 16, 32, 64, 256)]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(means, means[1:]))
    assert means[-1] <= max_triple_kappa(p) * (1 + 1e-12)


def test_menger_power_mean_tends_to_max_kappa():
    p = random_equilateral(np.random.default_rng(4), 6)
    assert menger_power_mean(p, 1e5) == pytest.approx(max_triple_kappa(p), rel=1e-3)


# ---------------------------------------------------------------------------
# curvature and thickness
# ---------------------------------------------------------------------------

def test_discrete_kappa_examples():
    assert discrete_kappa([0, 0, 0], [0.25, 0, 0], [0.25, 0.25, 0]) == pytest.approx(8.0, rel=1e-14)
    assert discrete_kappa([0, 0, 0], [1, 0, 0], [2, 0, 0]) == 0.0
    assert discrete_kappa([0, 0, 0], [1, 0, 0], [0, 0, 0]) == math.inf
    g = regular_ngon(6).vertices
    assert discrete_kappa(g[0], g[1], g[2]) == pytest.approx(12 * math.tan(math.pi / 6), rel=1e-13)


def test_discrete_kappa_matches_angle_formula():
    rng = np.random.default_rng(5)
    for x, y, z in rng.normal(size=(200, 3, 3)):
        assert discrete_kappa(x, y, z) == pytest.approx(kappa_oracle(x, y, z), rel=1e-8)


def test_minrad_examples():
    assert minrad(regular_ngon(4)) == pytest.approx(0.125, rel=1e-14)
    assert minrad(regular_ngon(256)) == pytest.approx(1 / (2 * math.pi), rel=1e-4)
    fold = PolygonalKnot([[0, 0, 0], [1, 0, 0], [0.5, 0, 0], [0.5, 1, 0]])
    assert minrad(fold) == 0.0


def critical_distances(p):
    return [c.distance for c in dcrit(p)]


def test_dcrit_square():
    # midpoints of opposite sides, plus the two diagonals as local maxima
    g = regular_ngon(4)
    pairs = dcrit(g)
    d = math.sqrt(2) / 4
    assert [c.distance for c in pairs] == pytest.approx([0.25, 0.25, d, d], rel=1e-14)
    assert [c.kind for c in pairs[2:]] == ["vertex-vertex"] * 2
    mids = 0.5 * (g.vertices + np.roll(g.vertices, -1, axis=0))
    for c in pairs[:2]:
        assert np.linalg.norm(mids - c.x, axis=1).min() < 1e-15
        assert np.linalg.norm(mids - c.y, axis=1).min() < 1e-15


def test_dcrit_hexagon_midpoints():
    g = regular_ngon(6)
    apothem2 = math.cos(math.pi / 6) / (6 * math.sin(math.pi / 6))
    closest = [c for c in dcrit(g) if abs(c.distance - apothem2) < 1e-12]
    assert len(closest) == 3
    mids = 0.5 * (g.vertices + np.roll(g.vertices, -1, axis=0))
    for c in closest:
        assert np.linalg.norm(mids - c.x, axis=1).min() < 1e-14
        assert np.linalg.norm(mids - c.y, axis=1).min() < 1e-14


@pytest.mark.parametrize("n", [4, 5, 6, 7, 8, 12])
def test_dcsd_regular_matches_grid_oracle(n):
    assert dcsd(regular_ngon(n)) == pytest.approx(grid_dcsd(regular_ngon(n), 60), rel=1e-12)


@pytest.mark.parametrize("n", [4, 6, 10, 16, 64])
def test_dcsd_even_regular_is_twice_apothem(n):
    assert dcsd(regular_ngon(n)) == pytest.approx(math.cos(math.pi / n) / (n * math.sin(math.pi / n)), rel=1e-12)


def test_dcsd_triangle_infinite():
    assert dcsd(regular_ngon(3)) == math.inf
    assert dcrit(regular_ngon(3)) == []


def test_dcsd_tight_trefoil(trefoil24):
    pairs = dcrit(trefoil24)
    assert pairs[0].distance == dcsd(trefoil24)
    assert dcsd(trefoil24) == pytest.approx(grid_dcsd(trefoil24, 40), rel=1e-5)


@pytest.mark.parametrize("seed", range(40))
def test_dcrit_pairs_are_doubly_critical(seed):
    p = random_polygon(np.random.default_rng(seed), 7)
    pairs = dcrit(p)
    for c in pairs:
        assert is_doubly_critical(p, arc_of(p, c.x), arc_of(p, c.y))
    # grid candidates approximate true pairs from above
    if pairs:
        assert dcsd(p) <= grid_dcsd(p, 60) * (1 + 1e-9)


def test_dcsd_fast_agrees_with_reference_path():
    rng = np.random.default_rng(6)
    for _ in range(300):
        p = random_polygon(rng, int(rng.integers(4, 12)))
        assert _dcsd_fast(p) == pytest.approx(dcsd(p), rel=1e-9)
    for n in range(4, 40):
        assert _dcsd_fast(regular_ngon(n)) == dcsd(regular_ngon(n))


@pytest.mark.parametrize("n", range(3, 65))
def test_thickness_regular_closed_form(n):
    rep = thickness_discrete(regular_ngon(n))
    assert rep.value == pytest.approx(thickness_closed_form(n), rel=1e-12)
    assert thickness_value(regular_ngon(n)) == pytest.approx(rep.value, rel=1e-12)


def test_thickness_square_ties():
    g = regular_ngon(4)
    assert minrad(g) == pytest.approx(dcsd(g) / 2, rel=1e-14)
    assert thickness_discrete(g).value == pytest.approx(0.125, rel=1e-14)
    assert ropelength_discrete(g) == pytest.approx(8.0, rel=1e-14)


def test_thickness_coincident_vertices():
    p = PolygonalKnot([[0, 0, 0], [1, 0, 0], [0, 0, 0], [0, 1, 0]])
    rep = thickness_discrete(p)
    assert rep.value == 0.0 and rep.degenerate
    assert thickness_value(p) == 0.0
    assert ropelength_discrete(p) == math.inf


def test_thickness_dcsd_branch_witness():
    # long thin rectangle: curvature radius 0.5 at the corners, strands 0.2 apart
    p = rectangle(4.0, 0.2)
    rep = thickness_discrete(p)
    assert rep.value == pytest.approx(0.1, rel=1e-14)
    assert len(rep.argmin_witness) == 2


def test_thickness_value_agrees_on_random_polygons():
    rng = np.random.default_rng(7)
    for _ in range(200):
        p = random_polygon(rng, int(rng.integers(4, 12)))
        assert thickness_value(p) == pytest.approx(thickness_discrete(p).value, rel=1e-9)


# ---------------------------------------------------------------------------
# invariances
# ---------------------------------------------------------------------------

VALUES = {
    "moebius": lambda p: moebius_discrete(p).value,
    "mindist_U": min_distance_U,
    "menger": lambda p: menger_discrete(p, 2.5).value,
    "thickness": lambda p: thickness_discrete(p).value,
}


@pytest.mark.parametrize("kind", VALUES)
def test_cyclic_shift_invariance(kind):
    p = random_polygon(np.random.default_rng(8), 9)
    f = VALUES[kind]
    for k in range(1, 9):
        assert f(p.shifted(k)) == pytest.approx(f(p), rel=1e-13)


@pytest.mark.parametrize("kind", VALUES)
def test_reversal_invariance_on_equilateral_polygons(kind):
    p = random_equilateral(np.random.default_rng(9), 9)
    f = VALUES[kind]
    assert f(p.reversed()) == pytest.approx(f(p), rel=1e-12)


@pytest.mark.parametrize("kind", ["mindist_U", "menger", "thickness"])
def test_reversal_invariance_general(kind):
    p = random_polygon(np.random.default_rng(10), 9)
    assert VALUES[kind](p.reversed()) == pytest.approx(VALUES[kind](p), rel=1e-13)


def test_moebius_reversal_changes_non_equilateral_value():
    # edge weights sit on the forward edge, so reversal reweights the pairs
    p = random_polygon(np.random.default_rng(11), 9)
    assert abs(moebius_discrete(p.reversed()).value / moebius_discrete(p).value - 1) > 1e-3


@pytest.mark.parametrize("kind", VALUES)
def test_rigid_motion_and_scaling(kind):
    rng = np.random.default_rng(12)
    p = random_polygon(rng, 8)
    f = VALUES[kind]
    base = f(p)
    exponent = {"moebius": 0, "mindist_U": 0, "menger": 3 - 2.5, "thickness": 1}[kind]
    for lam in (0.1, 1.0, 7.0):
        q = p.transformed(random_rotation(rng), rng.normal(size=3) * 5, scale=lam)
        assert f(q) == pytest.approx(base * lam**exponent, rel=1e-12)


def test_energy_dispatch_and_report_round_trip():
    g = regular_ngon(5)
    for kind in ("moebius", "mindist", "thickness"):
        rep = energy(g, kind)
        assert rep.kind == kind
        assert EnergyReport.from_dict(rep.to_dict()) == rep
    assert energy(g, "menger", 2).value == pytest.approx(menger_closed_form(5, 2), rel=1e-12)
    with pytest.raises(ValueError):
        energy(g, "menger")
    with pytest.raises(ValueError):
        energy(g, "curvature")
