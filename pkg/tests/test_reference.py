import math

import numpy as np
import pytest

from _support import random_rotation
from knotforge.curves import Circle, Ellipse, TorusKnot, TransformedCurve, inscribe_equilateral, inscribe_uniform
from knotforge.energies import menger_discrete, moebius_discrete
from knotforge.errors import ConvergenceError
from knotforge.geometry import circumradii
from knotforge.reference import (
    ReferenceValue,
    circle_reference,
    ladder,
    menger_smooth,
    moebius_smooth,
    reference,
    richardson,
    thickness_smooth,
)


def triple_thickness_oracle(curve, K=1000):
    """Smallest circumradius over the 10^6 triples (x_i, x_{i+1}, x_j) of K uniform samples.

    Consecutive samples resolve both the curvature radius and the
    half-distance between nearby strands.
    """
    s = np.arange(K) / K * curve.total_length
    X = curve.point_at(s)
    i, j = np.meshgrid(np.arange(K), np.arange(K), indexing="ij")
    i, j = i.ravel(), j.ravel()
    k = (i + 1) % K
    keep = (j != i) & (j != k)
    return float(circumradii(X[i[keep]], X[k[keep]], X[j[keep]]).min())


def test_circle_moebius_from_ladder():
    ref = moebius_smooth(Circle(), 512)
    assert ref.method == "inscribed_extrapolated"
    assert ref.n_used == [128, 256, 512]
    assert abs(ref.value - 4) < 1e-3
    assert abs(ref.value - 4) <= ref.estimated_error


def test_moebius_ladder_is_order_one():
    errors = [moebius_discrete(inscribe_uniform(Circle(), n)).value - 4 for n in (64, 128, 256, 512)]
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    assert all(1.6 <= r <= 2.4 for r in ratios)


def test_moebius_reference_is_rigid_and_scale_invariant():
    base = moebius_smooth(TorusKnot(2, 3), 128).value
    moved = TransformedCurve(TorusKnot(2, 3), random_rotation(np.random.default_rng(0)), [3, -1, 2], scale=2.5)
    assert moebius_smooth(moved, 128).value == pytest.approx(base, rel=1e-9)
    # nontrivial knots cost more than the round circle
    assert base > 4


@pytest.mark.parametrize("s", [1, 2, 3])
def test_circle_menger_from_ladder(s):
    ref = menger_smooth(Circle(), s)
    exact = (2 * math.pi) ** s
    assert ref.value == pytest.approx(exact, rel=1e-3)
    assert abs(ref.value - exact) <= ref.estimated_error


def test_menger_ladder_is_order_one():
    errors = [(2 * math.pi) ** 2 - menger_discrete(inscribe_equilateral(Circle(), n), 2).value for n in (16, 32, 64, 128)]
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    assert all(1.6 <= r <= 2.4 for r in ratios)


def test_menger_power_mean_nondecreasing_on_ellipse():
    e = Ellipse(1.0, 0.6)
    means = [menger_smooth(e, s, 64).value ** (1 / s) for s in (2, 4, 8, 16)]
    assert all(a < b for a, b in zip(means, means[1:]))


def test_menger_rejects_bad_exponent():
    with pytest.raises(ValueError):
        menger_smooth(Circle(), 0)


def test_circle_closed_forms():
    assert circle_reference("moebius").value == 4
    assert circle_reference("menger", 2, length=2.0).value == pytest.approx((2 * math.pi) ** 2 * 2)
    assert circle_reference("thickness", length=3.0).value == pytest.approx(3 / (2 * math.pi))
    assert circle_reference("ropelength").value == pytest.approx(2 * math.pi)
    with pytest.raises(ValueError):
        circle_reference("menger")
    with pytest.raises(ValueError):
        circle_reference("mindist")


@pytest.mark.parametrize(
    "curve, branch",
    [(Circle(), None), (Ellipse(1.0, 0.6), "minrad"), (TorusKnot(2, 3), "dcsd"), (TorusKnot(2, 5), "dcsd")],
)
def test_thickness_against_triple_oracle(curve, branch):
    ref = thickness_smooth(curve)
    assert ref.method == "dense_sampling"
    assert ref.value == pytest.approx(triple_thickness_oracle(curve), rel=1e-2)
    if branch:
        assert ref.details["branch"] == branch


def test_circle_thickness_and_ropelength():
    ref = thickness_smooth(Circle())
    assert ref.value == pytest.approx(1 / (2 * math.pi), rel=1e-9)
    assert ref.details["minrad"] == pytest.approx(ref.details["dcsd"] / 2, rel=1e-9)
    assert 1 / ref.value == pytest.approx(2 * math.pi, rel=1e-9)


def test_ellipse_thickness_is_curvature_limited():
    # minimal radius of curvature b^2 / a, in units of the rescaled curve
    e = Ellipse(1.0, 0.6)
    raw_length = e.total_length / e._scale
    assert thickness_smooth(e).value == pytest.approx(0.36 / raw_length, rel=1e-8)


def test_thickness_scales_with_length():
    assert thickness_smooth(TorusKnot(2, 3, length=3.0)).value == pytest.approx(
        3 * thickness_smooth(TorusKnot(2, 3)).value, rel=1e-6
    )


def test_ladder():
    assert ladder(128) == [32, 64, 128]
    for bad in (130, 8):
        with pytest.raises(ValueError):
            ladder(bad)


def test_richardson():
    # values e + c/n are extrapolated exactly
    ns = [32, 64, 128]
    value, err = richardson(ns, [4 + 1 / n for n in ns])
    assert value == pytest.approx(4, rel=1e-14)
    assert err == pytest.approx(1 / 128)
    with pytest.raises(ConvergenceError):
        richardson(ns, [1.0, 1.1, 1.5])


def test_reference_value_validation_and_round_trip():
    ref = ReferenceValue(4.0, "inscribed_extrapolated", [128, 256, 512], 1e-4, {"ladder_values": [1, 2, 3]})
    assert ReferenceValue.from_dict(ref.to_dict()) == ref
    with pytest.raises(ValueError):
        ReferenceValue(4.0, "guess", [], 0.0)
    with pytest.raises(ValueError):
        ReferenceValue(4.0, "closed_form", [], 0.1)
    with pytest.raises(ValueError):
        ReferenceValue(4.0, "dense_sampling", [], -1.0)


def test_reference_dispatch():
    assert reference(Circle(), "moebius").method == "closed_form"
    assert reference(Circle(), "moebius", n_max=64, closed_form=False).method == "inscribed_extrapolated"
    assert reference(Ellipse(), "thickness").method == "dense_sampling"
    with pytest.raises(ValueError):
        reference(Ellipse(), "mindist")
