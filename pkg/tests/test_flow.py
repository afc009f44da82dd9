import cmath
import math

import numpy as np
import pytest

from hydrodetect.flow import (
    BranchCutError,
    PotentialCoeffs,
    StealthVerdict,
    classify_stealth,
    ellipse_potential_closed_form,
    eval_fluid_velocity,
    eval_potential,
    stream_boundary_residual,
    zeta_coeffs,
)
from hydrodetect.rigid import Configuration, RigidVelocity, rigid_velocity_field
from hydrodetect.seqcore import CoeffSeq
from hydrodetect.shape import (
    InversionError,
    eval_map,
    eval_map_derivative,
    make_arc,
    make_c147,
    make_disk,
    make_ellipse,
    make_segment,
)

from conftest import random_config, random_shape


def nonzero(zeta, tol=1e-14):
    return {k: v for k, v in zeta.zeta.items() if abs(v) > tol}


def test_zeta_ellipse_translation():
    z = nonzero(zeta_coeffs(make_ellipse(2, 1), RigidVelocity(0, 1)))
    assert list(z) == [-1] and z[-1] == pytest.approx(1.0)


def test_zeta_ellipse_rotation():
    z = nonzero(zeta_coeffs(make_ellipse(2, 1), RigidVelocity(1, 0)))
    assert list(z) == [-2] and z[-2] == pytest.approx(0.75j)


def test_zeta_arc_stealth():
    z = zeta_coeffs(make_arc(0.5), RigidVelocity(1, -1.5))
    assert np.max(np.abs(z.zeta.values)) < 1e-12


def test_zeta_support_negative():
    s = make_c147(1, 0.1, 0.05)
    z = zeta_coeffs(s, RigidVelocity(0.3, 1 - 1j))
    assert z.zeta.hi <= -1 and z.zeta.lo >= -15
    with pytest.raises(ValueError):
        PotentialCoeffs(CoeffSeq({0: 1}))


def test_zeta_real_linear(rng):
    s = random_shape(rng)
    u1, u2 = RigidVelocity(0.4, 1 - 2j), RigidVelocity(-1.1, 0.3j)
    total = RigidVelocity(u1.omega + u2.omega, u1.w0 + u2.w0)
    lhs = zeta_coeffs(s, total).zeta
    rhs = zeta_coeffs(s, u1).zeta + zeta_coeffs(s, u2).zeta
    assert lhs.allclose(rhs, rtol=0, atol=1e-14)
    scaled = zeta_coeffs(s, RigidVelocity(-2.5 * u1.omega, -2.5 * u1.w0)).zeta
    assert scaled.allclose(zeta_coeffs(s, u1).zeta * -2.5, rtol=0, atol=1e-14)


def test_far_field():
    cfg = Configuration.make(0, 0, 0, 1)
    z = 1e6 * cmath.exp(0.4j)
    assert z * eval_potential(make_ellipse(2, 1), cfg, z) == pytest.approx(1.5, rel=1e-5)


def test_potential_on_boundary_matches_zeta(rng):
    s = random_shape(rng)
    cfg = random_config(rng)
    zeta = zeta_coeffs(s, cfg.velocity)
    e = (1 + 1e-12) * np.exp(1j * np.linspace(0, 2 * np.pi, 32, endpoint=False))
    x = cfg.r + cmath.exp(1j * cfg.alpha) * eval_map(s, e)
    assert np.allclose(eval_potential(s, cfg, x), zeta(e), atol=1e-9)


@pytest.mark.parametrize(
    "shape, vel, verdict",
    [
        (make_disk(), RigidVelocity(1, 0), StealthVerdict.ROTATING_DISK),
        (make_arc(0.5), RigidVelocity(1, -1.5), StealthVerdict.TANGENT_ARC),
        (make_arc(0.3), RigidVelocity(2, 2 * (0.3 - 1 / 0.3)), StealthVerdict.TANGENT_ARC),
        (make_segment(1, 0), RigidVelocity(0, 1), StealthVerdict.TANGENT_SEGMENT),
        (make_segment(0.7, 1.0), RigidVelocity(0, -2 * cmath.exp(1.0j)), StealthVerdict.TANGENT_SEGMENT),
    ],
)
def test_stealth_families(shape, vel, verdict):
    assert classify_stealth(shape, vel) is verdict
    assert str(classify_stealth(shape, vel)) == verdict.value
    cfg = Configuration.make(0.6, 0.2 - 0.1j, vel.omega, vel.w0)
    pts = cfg.r + 3 * np.exp(1j * np.linspace(0, 2 * np.pi, 20, endpoint=False))
    assert np.max(np.abs(eval_potential(shape, cfg, pts))) < 1e-12
    assert np.max(np.abs(eval_fluid_velocity(shape, cfg, pts))) < 1e-12
    assert stream_boundary_residual(shape, cfg) < 1e-12


def test_not_stealth():
    assert classify_stealth(make_ellipse(2, 1), RigidVelocity(1, 0)) is StealthVerdict.NOT_STEALTH
    assert classify_stealth(make_ellipse(2, 1), RigidVelocity(0, 1j)) is StealthVerdict.NOT_STEALTH
    # translating disk and arc moving off-tangent are not stealth
    assert classify_stealth(make_disk(), RigidVelocity(0, 1)) is StealthVerdict.NOT_STEALTH
    assert classify_stealth(make_arc(0.5), RigidVelocity(1, -1.6)) is StealthVerdict.NOT_STEALTH
    assert classify_stealth(make_segment(1, 0), RigidVelocity(0, 1j)) is StealthVerdict.NOT_STEALTH
    with pytest.raises(ValueError):
        classify_stealth(make_disk(), RigidVelocity(0, 0))


def test_stream_residual_random(rng):
    for _ in range(10):
        s = random_shape(rng)
        assert stream_boundary_residual(s, random_config(rng), M=256) < 1e-9
    cfg = random_config(rng)
    assert stream_boundary_residual(make_ellipse(2, 1), cfg) < 1e-10


def test_stream_residual_negative_control():
    e = make_ellipse(2, 1)
    vel = RigidVelocity(0.5, 1 + 0.5j)
    zeta = zeta_coeffs(e, vel).zeta
    bad = PotentialCoeffs(zeta + CoeffSeq({-1: 0.1}))
    assert stream_boundary_residual(e, vel, zeta=bad) > 1e-3
    with pytest.raises(ValueError):
        stream_boundary_residual(e, vel, M=4)


def test_slip_on_boundary(rng):
    # u at the boundary from the body-frame formula, w on the unit circle
    for _ in range(5):
        s = random_shape(rng)
        cfg = random_config(rng)
        zeta = zeta_coeffs(s, cfg.velocity)
        e = np.exp(2j * np.pi * np.arange(64) / 64)
        rot = cmath.exp(1j * cfg.alpha)
        fp = eval_map_derivative(s, e)
        u = -np.conj(zeta.derivative(e) / (rot * fp))
        n = rot * e * fp / np.abs(fp)
        v = rigid_velocity_field(cfg, cfg.r + rot * eval_map(s, e))
        assert np.max(np.abs(np.real((u - v) * np.conj(n)))) < 1e-8


def test_slip_offset_converges(rng):
    s = random_shape(rng)
    cfg = random_config(rng)
    e = np.exp(2j * np.pi * np.arange(64) / 64)
    fp = eval_map_derivative(s, e)
    rot = cmath.exp(1j * cfg.alpha)
    n = rot * e * fp / np.abs(fp)
    errs = []
    for h in (1e-3, 1e-4, 1e-5):
        x = cfg.r + rot * eval_map(s, e) + h * n
        u = eval_fluid_velocity(s, cfg, x)
        v = rigid_velocity_field(cfg, x)
        errs.append(np.max(np.abs(np.real((u - v) * np.conj(n)))))
    # first order in the offset
    assert 5 < errs[0] / errs[1] < 20 and 5 < errs[1] / errs[2] < 20


def test_velocity_matches_finite_difference(rng):
    s = random_shape(rng)
    cfg = random_config(rng)
    z, h = cfg.r + 2.5 * s.l1_norm() * cmath.exp(0.7j), 1e-6
    dxi = (eval_potential(s, cfg, z + h) - eval_potential(s, cfg, z - h)) / (2 * h)
    assert eval_fluid_velocity(s, cfg, z) == pytest.approx(-dxi.conjugate(), rel=1e-7)


def test_velocity_decay():
    cfg = Configuration.make(0.3, 0.5, 0.7, 1 + 1j)
    s = make_c147(1, 0.1, 0.05)
    u1 = abs(eval_fluid_velocity(s, cfg, 1e3))
    u2 = abs(eval_fluid_velocity(s, cfg, 1e4))
    assert u1 / u2 == pytest.approx(100, rel=1e-2)


def test_inside_rejected():
    cfg = Configuration.make(0, 0, 1, 0)
    with pytest.raises(InversionError):
        eval_potential(make_ellipse(2, 1), cfg, 0.5)


def test_closed_form_matches_general(rng):
    for _ in range(5):
        b = rng.uniform(0.3, 1.5)
        a = b + rng.uniform(0.1, 1.5)
        cfg = random_config(rng)
        z = cfg.r + (a + 0.05 + rng.uniform(0, 3, 20)) * np.exp(1j * rng.uniform(0, 2 * np.pi, 20))
        ref = eval_potential(make_ellipse(a, b), cfg, z)
        got = ellipse_potential_closed_form(a, b, cfg, z)
        assert np.max(np.abs(got - ref) / np.abs(ref)) < 1e-9


def test_closed_form_limits():
    cfg = Configuration.make(0.8, 1j, 0, 0)
    assert ellipse_potential_closed_form(2, 1, cfg, 5) == 0
    cfg = Configuration.make(0.8, 1j, 0.0, 0.6 - 0.2j)
    z = 1j + 1e7
    lead = (-3 * cfg.w0.conjugate() + 9 * cfg.w0) * cmath.exp(0.8j) / 4
    assert (z - 1j) * ellipse_potential_closed_form(2, 1, cfg, z) == pytest.approx(lead, rel=1e-6)


def test_closed_form_branch_cut():
    cfg = Configuration.make(0, 0, 1, 1)
    with pytest.raises(BranchCutError):
        ellipse_potential_closed_form(2, 1, cfg, 0.5)
    with pytest.raises(BranchCutError):
        ellipse_potential_closed_form(2, 1, cfg, 0)
    assert math.isfinite(abs(ellipse_potential_closed_form(2, 1, cfg, 0.5j)))
