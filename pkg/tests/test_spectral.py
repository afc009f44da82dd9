import cmath
import math

import numpy as np
import pytest

from hydrodetect.flow import eval_potential
from hydrodetect.rigid import Configuration
from hydrodetect.shape import ShapeSpec, make_arc, make_c147, make_disk, make_ellipse
from hydrodetect.spectral import (
    ClosedFormProvider,
    MomentTable,
    StealthPotentialError,
    TableProvider,
    binomial_matrix,
    geometry_coeffs,
    geometry_coeffs_bruteforce,
    gn_apply,
    invert_moments,
    localize_chebyshev,
    moments_closed_form,
    moments_contour,
    pascal_exponential,
    singularity_radius,
    theta_matrix,
    transport,
)

from conftest import random_config, random_shape


def test_geometry_matches_bruteforce(rng):
    for _ in range(20):
        s = random_shape(rng)
        N = int(rng.integers(1, 9))
        g = geometry_coeffs(s, N)
        for constraint in ("le-1", "le0"):
            b = geometry_coeffs_bruteforce(s, N, c_constraint=constraint)
            for name in "ABC":
                x, y = getattr(g, name), getattr(b, name)
                scale = max(np.max(np.abs(y)), 1.0)
                assert np.max(np.abs(x - y)) <= 1e-12 * scale


def test_geometry_ellipse():
    g = geometry_coeffs(make_ellipse(2, 1), 4)
    assert g.A[0] == pytest.approx(0.75)
    assert g.B[0] == pytest.approx(2.25)
    assert abs(g.C[0]) < 1e-15
    assert abs(g.A[1]) < 1e-15 and abs(g.B[1]) < 1e-15


def test_geometry_disk():
    g = geometry_coeffs_bruteforce(make_disk(1.3), 3)
    assert g.A[0] == 0
    assert g.B[0] == pytest.approx(1.69)


def test_geometry_c147_table():
    c1, c4, c7 = 1.1 + 0.3j, 0.12 - 0.05j, 0.04 + 0.03j
    g = geometry_coeffs(make_c147(c1, c4, c7), 8)
    a2 = abs(c1) ** 2
    expected = {
        ("A", 4): c1**4 * c4,
        ("A", 7): c1**7 * c7,
        ("B", 1): a2,
        ("B", 6): a2 * c1**4 * c4,
        ("C", 3): c1**3 * c4.conjugate() * c7,
        ("C", 5): a2 * c1**4 * c4,
        ("C", 8): (a2 + 3 * abs(c4) ** 2) * c1**7 * c7,
    }
    for name in "ABC":
        for k in range(1, 9):
            want = expected.get((name, k), 0)
            assert getattr(g, name)[k - 1] == pytest.approx(want, abs=1e-13)


def test_zero_pattern_mod4():
    s = ShapeSpec(1.2 - 0.1j, (0, 0, 0.1 + 0.05j, 0, 0, 0, 0.03j))
    g = geometry_coeffs(s, 16)
    for n in range(1, 17):
        if abs(g.A[n - 1]) > 1e-14:
            assert n % 4 == 3
        if abs(g.B[n - 1]) > 1e-14:
            assert n % 4 == 1
        if abs(g.C[n - 1]) > 1e-14:
            assert n % 4 == 0


def test_closed_form_ellipse():
    cfg = Configuration.make(0, 0, 0, 1)
    e = make_ellipse(2, 1)
    lam = moments_closed_form(e, cfg, 0, 4)
    assert lam[1] == pytest.approx(1.5) and abs(lam[2]) < 1e-15
    for nu in (1 + 1j, -3):
        assert moments_closed_form(e, cfg, nu, 4)[1] == pytest.approx(1.5)


def test_closed_form_stealth_arc():
    cfg = Configuration.make(0.4, 0.3j, 1, -1.5)
    off = Configuration.make(0.4, 0.3j, 1, -1.6)
    for nu in (0, 2 - 1j):
        # round-off in zeta is amplified by |r - nu|^(N-1), as is any signal
        ref = moments_closed_form(make_arc(0.5), off, nu, 10).scale()
        assert moments_closed_form(make_arc(0.5), cfg, nu, 10).scale() < 1e-12 * ref


def test_two_route_oracle(rng):
    for _ in range(10):
        s = random_shape(rng)
        cfg = random_config(rng)
        nu = complex(rng.normal(), rng.normal())
        ref = moments_closed_form(s, cfg, nu, 10)
        radius = 1.5 * s.l1_norm()
        got = moments_contour(lambda z: eval_potential(s, cfg, z), nu, 10, radius, Q=512, center=cfg.r)
        for n in range(1, 11):
            tol = 1e-8 * max(abs(ref[n]), 1e-8 * ref.scale())
            assert abs(got[n] - ref[n]) <= tol


def test_contour_pure_power():
    lam = moments_contour(lambda z: 1j / z**6, 0, 10, 1.0, Q=512)
    assert lam[6] == pytest.approx(1j, abs=1e-12)
    others = np.delete(lam.lambdas, 5)
    assert np.max(np.abs(others)) < 1e-12


def test_contour_radius_independent():
    s = make_c147(1, 0.1, 0.05)
    cfg = Configuration.make(0.5, 0.2, 0.3, 1j)
    f = lambda z: eval_potential(s, cfg, z)  # noqa: E731
    a = moments_contour(f, 0.2, 8, 1.5, Q=512)
    b = moments_contour(f, 0.2, 8, 3.0, Q=512)
    assert np.max(np.abs(a.lambdas - b.lambdas)) < 1e-10 * max(a.scale(), 1)


def test_theta_matrix_examples(rng):
    assert theta_matrix(0.3, 0.7, 1) == pytest.approx(np.array([[cmath.exp(0.7j)]]))
    assert np.allclose(theta_matrix(0, 0, 6), np.eye(6))
    u = cmath.exp(1j * rng.uniform(0, 6)) * rng.uniform(0.1, 1)
    T = theta_matrix(u, rng.uniform(0, 6), 12)
    assert np.allclose(np.linalg.solve(T, T), np.eye(12), atol=1e-12)
    assert np.allclose(np.abs(np.diag(T)), 1)


def test_pascal_exponential_exact():
    for N in (1, 5, 20):
        P = pascal_exponential(N)
        ref = [[math.comb(n, k) if k <= n else 0 for k in range(N)] for n in range(N)]
        assert P == ref
    assert np.array_equal(binomial_matrix(20), np.array(pascal_exponential(20), dtype=float))


def test_invert_moments_roundtrip(rng):
    for _ in range(5):
        s = random_shape(rng)
        cfg = random_config(rng)
        nu = complex(rng.normal(), rng.normal())
        N = 8
        g = geometry_coeffs(s, N)
        table = moments_closed_form(s, cfg, nu, N, g)
        m = invert_moments(table, cfg.r, cfg.alpha)
        w0, om = cfg.w0, cfg.omega
        want = -g.A * w0.conjugate() + g.B * w0 + 1j * om * g.C
        assert np.max(np.abs(m - want)) < 1e-10 * max(1, np.max(np.abs(want)))


def test_first_moment_c147():
    c1 = 1 + 0.2j
    s = make_c147(c1, 0.1, 0.05)
    cfg = Configuration.make(0.9, 0.4 - 0.3j, 0.6, 0.7 + 0.2j)
    table = moments_closed_form(s, cfg, 1j, 4)
    m = invert_moments(table, cfg.r, cfg.alpha)
    assert m[0] == pytest.approx(cmath.exp(-0.9j) * table[1])
    assert m[0] == pytest.approx(abs(c1) ** 2 * cfg.w0)


def test_gn_apply(rng):
    g = geometry_coeffs(make_ellipse(2, 1), 3)
    assert np.all(gn_apply(g, [0, 0, 0]) == 0)
    assert gn_apply(g, [1, 0, 0])[0] == pytest.approx(1.5)
    g = geometry_coeffs(random_shape(rng), 6)
    U = rng.normal(size=3)
    want = -g.A * complex(U[0], -U[1]) + g.B * complex(U[0], U[1]) + 1j * U[2] * g.C
    assert np.allclose(gn_apply(g, U), want, atol=1e-14)
    with pytest.raises(ValueError):
        gn_apply(g, [1, 2])


def test_truncation_property(rng):
    # shapes agreeing on c_k for k >= -N-1 share lambda_n for n <= N-1 when
    # omega = 0; the rotation term pairs arbitrarily deep tail coefficients
    N = 5
    base = random_shape(rng, max_tail=4)
    tail = list(base.tail) + [0.0] * (N + 1 - len(base.tail))
    other = ShapeSpec(base.c1, tuple(tail[: N + 1]) + (0.01, 0.02j))
    cfg = Configuration.make(1.1, 0.2 - 0.4j, 0.0, 0.8 + 0.3j)
    a = moments_closed_form(base, cfg, 0.3, N - 1)
    b = moments_closed_form(other, cfg, 0.3, N - 1)
    assert np.allclose(a.lambdas, b.lambdas, atol=1e-13)
    spun = Configuration.make(1.1, 0.2 - 0.4j, 1.0, 0.8 + 0.3j)
    a = moments_closed_form(base, spun, 0.3, N - 1)
    b = moments_closed_form(other, spun, 0.3, N - 1)
    assert not np.allclose(a.lambdas, b.lambdas, atol=1e-8)


def test_transport_exact(rng):
    s = random_shape(rng)
    cfg = random_config(rng)
    a = moments_closed_form(s, cfg, 0, 10)
    b = moments_closed_form(s, cfg, 0.5 - 0.25j, 10)
    moved = transport(a, 0.5 - 0.25j)
    assert np.allclose(moved.lambdas, b.lambdas, rtol=1e-10, atol=1e-12)


def test_singularity_radius_ellipse():
    e = make_ellipse(2, 1)
    cfg = Configuration.make(0, 0, 0, 1)
    R0 = singularity_radius(moments_closed_form(e, cfg, 0, 40))
    assert abs(R0 - math.sqrt(3)) / math.sqrt(3) < 0.05
    R2 = singularity_radius(moments_closed_form(e, cfg, 2, 40))
    assert abs(R2 - (2 + math.sqrt(3))) / (2 + math.sqrt(3)) < 0.05


def test_singularity_radius_special_cases():
    lam = moments_contour(lambda z: 1j / z**6, 0, 40, 1.0, Q=512)
    assert singularity_radius(lam) == 0.0
    # single pole at distance 0.7: lambda_j = 0.7^(j-1)
    pole = MomentTable(0, 0.7 ** np.arange(40))
    assert singularity_radius(pole) == pytest.approx(0.7, rel=1e-10)
    assert singularity_radius(pole, method="max") == pytest.approx(0.7, rel=0.02)
    with pytest.raises(ValueError):
        singularity_radius(pole, method="bogus")
    with pytest.raises(ValueError):
        singularity_radius(MomentTable(0, np.ones(10)), j_min=5)


def test_localize_chebyshev_ellipse():
    cfg = Configuration.make(math.pi / 6, 1 + 2j, 0, 1)
    provider = ClosedFormProvider(make_ellipse(2, 1), cfg, 40)
    nu = localize_chebyshev(provider, (-1, 3, 0, 4), grid=41)
    assert abs(nu - (1 + 2j)) < 0.1


def test_localize_chebyshev_disk():
    cfg = Configuration.make(0, 0.5 - 0.5j, 0, 1)
    provider = ClosedFormProvider(make_disk(), cfg, 40)
    nu = localize_chebyshev(provider, (-1.5, 2.5, -2.5, 1.5), grid=21)
    assert abs(nu - cfg.r) < 1


def test_localize_chebyshev_stealth():
    cfg = Configuration.make(0, 0, 1, 0)
    with pytest.raises(StealthPotentialError):
        localize_chebyshev(ClosedFormProvider(make_disk(), cfg, 20), (-1, 1, -1, 1), grid=5)


def test_table_provider():
    cfg = Configuration.make(0.3, 0.2j, 0.5, 1)
    s = make_c147(1, 0.1, 0.05)
    tables = [moments_closed_form(s, cfg, nu, 12) for nu in (0, 1)]
    p = TableProvider(tables)
    assert np.array_equal(p(1).lambdas, tables[1].lambdas)
    ref = moments_closed_form(s, cfg, 0.9 + 0.1j, 12)
    assert np.allclose(p(0.9 + 0.1j).lambdas, ref.lambdas, atol=1e-12)
    with pytest.raises(ValueError):
        TableProvider([])


def test_table_json_roundtrip():
    t = MomentTable(1 - 2j, [1, 2j, -3])
    back = MomentTable.from_json(t.to_json())
    assert back.nu == t.nu and np.array_equal(back.lambdas, t.lambdas)
    with pytest.raises(IndexError):
        t[0]
