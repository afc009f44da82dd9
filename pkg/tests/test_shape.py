import cmath
import math

import numpy as np
import pytest

from hydrodetect.shape import (
    InversionError,
    ShapeSpec,
    area,
    boundary,
    boundary_self_intersects,
    eval_map,
    eval_map_derivative,
    eval_map_inverse,
    inside_solid,
    make_arc,
    make_c147,
    make_disk,
    make_ellipse,
    make_segment,
    symmetry_order,
)

from conftest import random_shape


def test_eval_map_examples():
    e = make_ellipse(2, 1)
    assert eval_map(e, 1) == pytest.approx(2)
    assert eval_map(e, 1j) == pytest.approx(1j)
    assert eval_map(make_arc(0.5), 1j) == pytest.approx(0.5j, abs=1e-13)
    with pytest.raises(ValueError):
        eval_map(e, 0.5)


def test_derivative_matches_finite_difference():
    s = make_c147(1 + 0.2j, 0.1 - 0.05j, 0.04j)
    w, h = 1.3 - 0.7j, 1e-6
    fd = (eval_map(s, w + h) - eval_map(s, w - h)) / (2 * h)
    assert eval_map_derivative(s, w) == pytest.approx(fd, rel=1e-8)


def test_inverse_examples():
    e = make_ellipse(2, 1)
    assert eval_map_inverse(e, 3) == pytest.approx((3 + math.sqrt(6)) / 3, rel=1e-12)
    z = 1e3 * e.l1_norm() * cmath.exp(0.3j)
    assert abs(eval_map_inverse(e, z) / (z / e.c1) - 1) < 1e-3


def test_inverse_roundtrip_random(rng):
    for _ in range(10):
        s = random_shape(rng)
        w = rng.uniform(1.1, 5, 50) * np.exp(1j * rng.uniform(0, 2 * np.pi, 50))
        back = eval_map_inverse(s, eval_map(s, w))
        assert np.max(np.abs(back - w)) < 1e-10


def test_inverse_near_boundary():
    s = make_c147(1, 0.1, 0.05)
    w = (1 + 1e-6) * np.exp(1j * np.linspace(0, 2 * np.pi, 64, endpoint=False))
    assert np.max(np.abs(eval_map_inverse(s, eval_map(s, w)) - w)) < 1e-8


def test_inverse_rejects_interior():
    with pytest.raises(InversionError):
        eval_map_inverse(make_ellipse(2, 1), 0.1 + 0.1j)


def test_area_examples():
    assert area(make_disk()) == pytest.approx(math.pi)
    assert area(make_ellipse(2, 1)) == pytest.approx(2 * math.pi)
    assert area(make_segment(1, 0)) == pytest.approx(0, abs=1e-15)
    assert make_segment(1, 0).degenerate
    rng = np.random.default_rng(3)
    for _ in range(5):
        b = rng.uniform(0.1, 2)
        a = b + rng.uniform(0.01, 2)
        assert area(make_ellipse(a, b)) == pytest.approx(math.pi * a * b)


def test_negative_area_rejected():
    with pytest.raises(ValueError):
        ShapeSpec(1, (2,))
    with pytest.raises(ValueError):
        ShapeSpec(0, (0.1,))


def test_boundary_examples():
    assert np.allclose(boundary(make_disk(), 4), [1, 1j, -1, -1j])
    assert np.allclose(boundary(make_ellipse(2, 1), 4), [2, 1j, -2, -1j])
    with pytest.raises(ValueError):
        boundary(make_disk(), 2)


def test_boundary_on_unit_circle_preimage(rng):
    s = random_shape(rng)
    pts = boundary(s, 64)
    w = eval_map_inverse(s, pts * (1 + 1e-9))
    assert np.max(np.abs(np.abs(w) - 1)) < 1e-6


def test_symmetry_order():
    assert symmetry_order(make_disk()) == 0
    assert symmetry_order(ShapeSpec(1, (0, 0, 0.2))) == 4
    assert symmetry_order(make_ellipse(2, 1)) == 2
    assert symmetry_order(make_c147(1, 0.1, 0.05)) == 1


def test_symmetry_order_matches_rotation():
    s = ShapeSpec(1, (0, 0, 0.1 + 0.05j, 0, 0, 0, 0.02))
    pts = boundary(s, 256)
    rot = boundary(s, 256) * 1j
    # rotated samples land on the same curve, shifted by a quarter of the samples
    assert np.allclose(np.roll(pts, -64), rot)


def test_ellipse_constructor():
    e = make_ellipse(2, 1)
    assert e.c1 == 1.5 and e.tail == (0.5,)
    eps = 1e-3
    assert make_ellipse(1 + eps, 1 - eps).tail[0] == pytest.approx(eps)
    for a, b in ((1, 1), (1, 2), (1, 0)):
        with pytest.raises(ValueError):
            make_ellipse(a, b)


def test_arc_constructor():
    arc = make_arc(0.5)
    assert arc.tail[0] == pytest.approx(0.75)
    assert arc.tail[1] == pytest.approx(-0.375j)
    assert abs(arc.tail[-1]) < 1e-14
    ratios = [abs(arc.tail[j + 1] / arc.tail[j]) for j in range(5)]
    assert np.allclose(ratios, 0.5)
    assert abs(make_arc(0.99).tail[0]) < 0.02
    with pytest.raises(ValueError):
        make_arc(1.0)
    # image of the unit circle is the arc itself: zero area
    assert arc.degenerate


def test_segment_constructor():
    s = make_segment(1, 0)
    t = np.linspace(0, 2 * np.pi, 50)
    assert np.allclose(eval_map(s, np.exp(1j * t)), 2 * np.cos(t))
    v = boundary(make_segment(0.7, math.pi / 2), 32)
    assert np.max(np.abs(v.real)) < 1e-12
    with pytest.raises(ValueError):
        make_segment(0, 0)


def test_c147_constructor():
    s = make_c147(1, 0.1, 0.05)
    assert area(s) == pytest.approx(math.pi * (1 - 0.04 - 0.0175))
    with pytest.raises(ValueError):
        make_c147(1, 0.5, 0.3)
    with pytest.raises(ValueError):
        make_c147(1, 0, 0.1)


def test_json_roundtrip():
    s = make_c147(1 + 0.5j, 0.1j, -0.05)
    assert ShapeSpec.from_json(s.to_json()) == s


def test_self_intersection_diagnostic():
    assert not boundary_self_intersects(make_ellipse(2, 1))
    # a figure-eight polyline crosses itself
    t = np.linspace(0, 2 * np.pi, 100, endpoint=False) + 0.01
    assert boundary_self_intersects(np.sin(t) + 1j * np.sin(2 * t))


def test_inside_solid():
    e = make_ellipse(2, 1)
    inside = inside_solid(e, np.array([0, 1.9, 0.9j, 2.1, 1.1j, 3 + 3j]))
    assert inside.tolist() == [True, True, True, False, False, False]
