import csv
import io
import math

import numpy as np
import pytest

from knotforge.curves import Circle, Ellipse, TorusKnot
from knotforge.errors import ValidationError
from knotforge.experiments import (
    RAWDON_CONSTANT,
    convergence_study,
    discrete_energy,
    fit_slope,
    gamma_recovery,
    initial_polygon,
    minimizer_trend,
    rawdon_bound_check,
    regular_target,
)
from knotforge.geometry import regular_ngon
from knotforge.io import csv_text
from knotforge.minimize import MinimizeConfig
from knotforge.reference import ReferenceValue

DYADIC = [32, 64, 128, 256, 512]


def test_fit_slope_exact_power_law():
    ns = [10, 20, 40, 80]
    slope, intercept, resid = fit_slope(ns, [3.0 * n**-1.5 for n in ns])
    assert slope == pytest.approx(1.5, rel=1e-12)
    assert intercept == pytest.approx(math.log(3.0), rel=1e-12)
    assert resid < 1e-12


def test_circle_moebius_study():
    st = convergence_study(Circle(), "moebius", DYADIC)
    assert st.reference.value == 4 and st.reference.method == "closed_form"
    assert st.monotone
    assert 0.8 <= st.slope <= 1.2
    again = convergence_study(Circle(), "moebius", DYADIC, threads=2)
    assert again.to_dict() == st.to_dict()


def test_circle_menger_study():
    st = convergence_study(Circle(), "menger", [16, 32, 64, 128], s=2)
    assert st.reference.value == pytest.approx((2 * math.pi) ** 2)
    assert st.monotone
    assert 0.8 <= st.slope <= 1.2


def test_circle_thickness_study():
    ns = [16, 32, 64, 128, 256]
    st = convergence_study(Circle(), "thickness", ns)
    # the inscribed regular n-gon has apothem R cos(pi/n), R = 1/(2 pi)
    np.testing.assert_allclose(st.energies, [math.cos(math.pi / n) / (2 * math.pi) for n in ns], rtol=1e-12)
    assert st.monotone and st.errors[-1] < 1e-4 * st.reference.value
    inv = convergence_study(Circle(), "thickness_inv", ns)
    assert inv.reference.value == pytest.approx(2 * math.pi)
    assert inv.monotone and 1.8 <= inv.slope <= 2.2


def test_study_on_knotted_curve_uses_extrapolated_reference():
    st = convergence_study(TorusKnot(2, 3), "moebius", [32, 64, 128])
    assert st.reference.method == "inscribed_extrapolated"
    assert st.monotone


def test_slope_refused_at_rounding_level():
    g_value = discrete_energy(regular_ngon(8), "moebius")
    ref = ReferenceValue(g_value, "closed_form", [], 0.0)
    st = convergence_study(Circle(), "moebius", [8, 16, 32], ref=ref)
    assert st.slope is None and "rounding" in st.slope_note
    assert "slope not fitted" in st.table()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"ns": [32, 64]},
        {"ns": [64, 32, 128]},
        {"ns": [2, 4, 8]},
        {"kind": "energy"},
        {"kind": "menger"},
    ],
)
def test_study_validation(kwargs):
    args = {"curve": Circle(), "kind": "moebius", "ns": [8, 16, 32], **kwargs}
    with pytest.raises(ValidationError):
        convergence_study(**args)


def test_study_csv_columns():
    st = convergence_study(Circle(), "moebius", [8, 16, 32])
    rows = list(csv.reader(io.StringIO(csv_text(st.csv_rows()))))
    assert rows[0] == ["n", "energy", "reference", "error"]
    assert [int(r[0]) for r in rows[1:]] == [8, 16, 32]
    assert float(rows[1][3]) == st.errors[0]


def test_rawdon_bound_on_circle():
    rep = rawdon_bound_check(Circle(), DYADIC)
    assert all(rep.holds) and rep.threshold == 32
    # plug-in arithmetic at n = 256
    assert rep.bounds[3] == pytest.approx(290 * (2 * math.pi) ** 0.25 / 4, rel=1e-12)
    assert rep.bounds[3] == pytest.approx(114.78, abs=0.01)
    # uniform inscriptions of the circle are regular n-gons, so E_md = 0 and the error is 4
    np.testing.assert_allclose(rep.errors, 4.0, atol=1e-12)
    assert not rep.errors_decreasing


def test_rawdon_bound_scale_consistent():
    a = rawdon_bound_check(Circle(), [32, 64, 128])
    b = rawdon_bound_check(Circle(3.0), [32, 64, 128])
    assert b.thickness == pytest.approx(a.thickness, rel=1e-12)
    np.testing.assert_allclose(b.errors, a.errors, atol=1e-12)
    np.testing.assert_allclose(b.bounds, a.bounds, rtol=1e-12)


def test_rawdon_threshold_reporting():
    # a huge fake thickness shrinks the bound below the constant error 4 for n >= 5
    delta = (RAWDON_CONSTANT / (4 * 5**0.25)) ** 4
    rep = rawdon_bound_check(Circle(), [3, 4, 5, 6], thickness=delta)
    bounds = [RAWDON_CONSTANT * delta**-0.25 * n**-0.25 for n in (3, 4, 5, 6)]
    np.testing.assert_allclose(rep.bounds, bounds, rtol=1e-12)
    assert rep.holds == [True, True, True, False]
    assert rep.threshold is None
    assert "fails at the largest" in rep.table()


def test_rawdon_bound_on_ellipse():
    rep = rawdon_bound_check(Ellipse(1.0, 0.6), [32, 64, 128, 256])
    assert all(rep.holds)
    assert rep.errors_decreasing
    # the gap tends to the circle's value 4, the normalized gap to 0
    assert all(b < a for a, b in zip(rep.normalized_errors, rep.normalized_errors[1:]))
    assert rep.normalized_errors[-1] < 0.02
    assert rep.errors[-1] == pytest.approx(4, abs=0.02)


def test_gamma_recovery_moebius_on_circle():
    rep = gamma_recovery(Circle(), "moebius", [16, 32, 64, 128])
    assert all(d <= b * (1 + 1e-9) for d, b in zip(rep.deviations, rep.deviation_bounds))
    assert all(b < a for a, b in zip(rep.deviations, rep.deviations[1:]))
    assert all(b < a for a, b in zip(rep.errors, rep.errors[1:]))
    # first order: the error halves with each doubling of n
    assert rep.errors[-1] == pytest.approx(rep.errors[-2] / 2, rel=0.05)
    assert rep.errors[-1] < 0.12


def test_gamma_recovery_menger_and_thickness_on_circle():
    rep = gamma_recovery(Circle(), "menger", [16, 32, 64], s=2)
    assert all(b < a for a, b in zip(rep.errors, rep.errors[1:]))
    assert rep.reference.value == pytest.approx((2 * math.pi) ** 2)
    rep = gamma_recovery(Circle(), "thickness_inv", [16, 32, 64, 128])
    assert rep.errors[-1] == pytest.approx(2 * math.pi * (1 / math.cos(math.pi / 128) - 1), rel=1e-9)
    assert all(d <= b * (1 + 1e-9) for d, b in zip(rep.deviations, rep.deviation_bounds))


def test_gamma_recovery_on_torus_knot():
    rep = gamma_recovery(TorusKnot(2, 3), "moebius", [32, 64, 128])
    assert all(b < a for a, b in zip(rep.deviations, rep.deviations[1:]))
    assert all(d <= b * 1.01 for d, b in zip(rep.deviations, rep.deviation_bounds))


def test_initial_polygons():
    p = initial_polygon("unknot", 12, seed=4)
    assert p.is_equilateral and p.total_length == pytest.approx(1.0, rel=1e-12)
    q = initial_polygon("unknot", 12, seed=4)
    assert p == q
    assert p != initial_polygon("unknot", 12, seed=5)
    t = initial_polygon("trefoil", 24)
    assert t.n == 24 and t.is_equilateral
    with pytest.raises(ValidationError):
        initial_polygon("figure-eight", 12)


def test_regular_targets():
    assert regular_target("thickness_inv", 16) == pytest.approx(32 * math.tan(math.pi / 16))
    assert regular_target("mindist", 8) == 0.0
    assert regular_target("moebius", 4) == pytest.approx(1.0)


@pytest.mark.slow
def test_minimizer_trend_unknot():
    cfg = MinimizeConfig(energy="thickness_inv", iterations=2500, initial_step=0.005, temperature_initial=0.0,
                         epoch_length=250)
    rep = minimizer_trend("unknot", "thickness_inv", [6, 8], [0], cfg)
    for r in rep.best_by_n():
        assert r["best"] == pytest.approx(r["target"], rel=1e-2)
        assert r["best"] >= r["target"] * (1 - 1e-12)
    assert rep.decreasing
    assert "heuristic" in rep.to_dict()["note"]


def test_minimizer_trend_trefoil_seeds():
    cfg = MinimizeConfig(energy="thickness_inv", iterations=150, initial_step=0.01, temperature_initial=0.01,
                         epoch_length=50)
    rep = minimizer_trend("trefoil", "thickness_inv", [24], range(5), cfg, verify_replay=True)
    assert len(rep.runs) == 5
    for r in rep.runs:
        assert r["best"] <= r["initial"]
        assert r["violations"] == 0
        assert r["target"] is None
    assert rep.csv_rows()[0][2] is None
