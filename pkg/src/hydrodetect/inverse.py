"""Detection algorithms: recover position and velocity from Laurent moments.

Every detector takes a *moment provider*, a callable ``nu -> MomentTable``,
so the same code runs on synthetic closed-form data and on moments obtained
by contour integration of a measured potential.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .rigid import Configuration, Position, RigidVelocity, wrap_angle
from .shape import ShapeSpec, make_ellipse, symmetry_order
from .spectral import (
    GeometryCoeffs,
    MomentTable,
    geometry_coeffs,
    gn_matrix,
    invert_moments,
    localize_chebyshev,
    singularity_radius,
    transport,
    transported_moments,
)

__all__ = [
    "DetectionResult",
    "DetectionError",
    "RankDeficientError",
    "BezoutError",
    "recover_velocity",
    "detect_ellipse",
    "detect_quarter_symmetric",
    "detect_quarter_full",
    "detect_c147",
    "bezout_angle",
    "extended_gcd",
    "ZERO_REL",
]

MomentProvider = Callable[[complex], MomentTable]

# relative threshold deciding that a moment "vanishes"
ZERO_REL = 1e-9
# relative threshold deciding that a geometry coefficient vanishes
GEOM_REL = 1e-10


class DetectionError(ArithmeticError):
    pass


class RankDeficientError(DetectionError):
    """``G_N`` has rank < 3: the velocity is not identifiable from ``N`` moments."""


class BezoutError(ValueError):
    def __init__(self, gcd: int):
        super().__init__(f"exponents share the factor {gcd}; angle known only mod 2*pi/{gcd}")
        self.gcd = gcd


@dataclass
class DetectionResult:
    """Solutions found by a detector.

    ``resolved`` records what the data determine: ``r`` and ``w_world``
    (bool), ``alpha_mod`` (the integer ``m`` such that alpha is known mod
    ``2 pi / m``, or ``None``), and ``omega_abs_only``.  When alpha is not
    resolved, ``configurations`` holds one representative with ``alpha = 0``,
    ``w0 = w_world`` and ``omega = |omega|``.
    """

    configurations: list[Configuration]
    resolved: dict
    residual: float
    method: str
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            if isinstance(v, dict):
                return {k: enc(x) for k, x in v.items()}
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            return v

        return {
            "method": self.method,
            "configurations": [c.to_json() for c in self.configurations],
            "resolved": enc(self.resolved),
            "residual": float(self.residual),
            "extras": enc(self.extras),
        }


# -- helpers ---------------------------------------------------------------

def _geom_for(shape: ShapeSpec, N: int, geom: GeometryCoeffs | None) -> GeometryCoeffs:
    if geom is None or geom.N < N:
        geom = geometry_coeffs(shape, N)
    return geom.truncate(N)


def _geom_nonzero(vec: np.ndarray, rho: float) -> np.ndarray:
    k = np.arange(1, vec.size + 1)
    return np.abs(vec) > GEOM_REL * rho ** (k + 1)


def _unit(z: complex) -> complex:
    a = abs(z)
    if a == 0:
        raise DetectionError("phase of a vanishing quantity requested")
    return z / a


def _row_weights(shape: ShapeSpec, N: int, shift: float = 0.0) -> np.ndarray:
    # moments grow roughly like ||c||_1^n, and re-expanding them over a distance
    # |r - nu| amplifies their rounding like (||c||_1 + |r - nu|)^n; weight each
    # row by the inverse of that level before least squares
    rho = max(shape.l1_norm() + abs(shift), 1e-300)
    return rho ** -np.arange(1, N + 1, dtype=float)


def _moment_misfit(shape, cfg, table, geom) -> float:
    from .spectral import moments_closed_form

    pred = moments_closed_form(shape, cfg, table.nu, table.N, geom)
    scale = max(table.scale(), 1e-300)
    return float(np.max(np.abs(pred.lambdas - table.lambdas)) / scale)


def extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``a x + b y = g = gcd(a, b)``."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def bezout_angle(constraints: Sequence[tuple[int, complex]]) -> float:
    """Angle ``alpha`` in ``[0, 2 pi)`` from phases ``e^{i n alpha}`` with coprime ``n``.

    >>> round(bezout_angle([(3, cmath.exp(2.1j)), (5, cmath.exp(3.5j))]), 12)
    0.7
    """
    if not constraints:
        raise ValueError("no constraints given")
    g, coeffs = 0, []
    for n, e in constraints:
        n = int(n)
        if n < 1:
            raise ValueError("exponents must be positive integers")
        if abs(abs(e) - 1.0) > 1e-6:
            raise ValueError(f"phase e^(i*{n}*alpha) has modulus {abs(e):.3g}, expected 1")
        if g == 0:
            g, coeffs = n, [1]
        else:
            g, x, y = extended_gcd(g, n)
            coeffs = [c * x for c in coeffs] + [y]
    if g != 1:
        raise BezoutError(g)
    prod = 1.0 + 0j
    for (n, e), u in zip(constraints, coeffs):
        prod *= _unit(complex(e)) ** u
    return wrap_angle(cmath.phase(prod))


# -- velocity from a known position ------------------------------------------

def recover_velocity(
    geom: GeometryCoeffs,
    pos: Position,
    table: MomentTable,
    shape: ShapeSpec | None = None,
    rank_tol: float = 1e-10,
    return_residual: bool = False,
):
    """Least-squares velocity ``U`` from ``G_N U = Theta_N^{-1} Lambda_N``.

    The ``2N x 3`` real system stacks real and imaginary parts.  Rows are
    scaled by ``(||c||_1 + |r - nu|)^{-n}`` when ``shape`` is supplied.
    """
    N = min(table.N, geom.N)
    g = geom.truncate(N)
    m = invert_moments(MomentTable(table.nu, table.lambdas[:N]), pos.r, pos.alpha)
    G = gn_matrix(g)
    w = _row_weights(shape, N, abs(pos.r - table.nu)) if shape is not None else np.ones(N)
    Gr = np.vstack([(G * w[:, None]).real, (G * w[:, None]).imag])
    mr = np.concatenate([(m * w).real, (m * w).imag])
    s = np.linalg.svd(Gr, compute_uv=False)
    if s.size < 3 or s[0] == 0 or s[2] <= rank_tol * s[0]:
        raise RankDeficientError(
            f"G_N has numerical rank < 3 with N={N} (singular values {s}); "
            "shape admits stealth motions or N is too small"
        )
    U, *_ = np.linalg.lstsq(Gr, mr, rcond=None)
    vel = RigidVelocity.from_vector(U)
    if not return_residual:
        return vel
    denom = np.linalg.norm(mr)
    res = np.linalg.norm(Gr @ U - mr)
    residual = float(res / denom) if denom > 0 else float(res)
    return vel, residual


# -- ellipse -----------------------------------------------------------------

def _ellipse_c2(a: float, b: float) -> float:
    """Coefficient linking ``lambda_2(r)`` to ``i omega e^{2 i alpha}``.

    Compared against the forward model before use.
    """
    formula = (a * a - b * b) * (a + b) ** 2 / 16.0
    oracle = geometry_coeffs(make_ellipse(a, b), 2).C[1]
    if abs(oracle - formula) > 1e-12 * max(1.0, abs(formula)):
        raise AssertionError(f"ellipse lambda_2 constant mismatch: {formula} vs {oracle}")
    return formula


def detect_ellipse(
    a: float,
    b: float,
    potential: Callable | None,
    moment_provider: MomentProvider,
    search_box: tuple[float, float, float, float] | None = None,
    grid: int = 41,
    n_fit: int = 16,
) -> DetectionResult:
    """Recover an ellipse's configuration (up to the ``(alpha+pi, -w0)`` symmetry).

    1. locate ``r`` as the Chebyshev centre of the branch cut (grid minimum of
       the singularity radius, then Nelder-Mead on it);
    2. get ``alpha mod pi`` from the direction in which the singularity radius
       grows fastest around ``r``;
    3. polish ``(r, alpha)`` by least squares on the moment equations with the
       velocity eliminated;
    4. read ``w0`` from ``lambda_1`` and ``omega`` from ``lambda_2(r)``.
    """
    if not (a > b > 0):
        raise ValueError("need a > b > 0")
    half_cut = math.sqrt(a * a - b * b)
    if half_cut < 1e-6 * a:
        raise DetectionError("a - b too small: branch cut degenerates, alpha unobservable")
    shape = make_ellipse(a, b)
    t0 = moment_provider(0j)
    N = t0.N
    j_min = max(1, N // 2)
    if N < j_min + 8:
        raise ValueError("moment provider must supply at least 16 moments")
    scale0 = t0.scale()
    R0 = singularity_radius(t0, j_min)
    if R0 == 0 or scale0 == 0:
        raise DetectionError("singularity radius vanishes: stealth-like input, impossible for an ellipse")

    # 1. coarse location
    if search_box is None:
        ext = 1.05 * R0
        search_box = (-ext, ext, -ext, ext)
    r_grid = localize_chebyshev(moment_provider, search_box, grid, j_min)

    def radius_at(p):
        return singularity_radius(moment_provider(complex(p[0], p[1])), j_min)

    step = max((search_box[1] - search_box[0]), (search_box[3] - search_box[2])) / (grid - 1)
    nm = optimize.minimize(
        radius_at,
        [r_grid.real, r_grid.imag],
        method="Nelder-Mead",
        options={"xatol": 1e-6, "fatol": 1e-12, "initial_simplex": [
            [r_grid.real, r_grid.imag],
            [r_grid.real + step, r_grid.imag],
            [r_grid.real, r_grid.imag + step],
        ]},
    )
    r_coarse = complex(*nm.x)

    # 2. orientation: radius is largest when probing along the cut
    eps = 0.5 * half_cut
    betas = np.linspace(0.0, math.pi, 90, endpoint=False)
    radii = []
    for beta in betas:
        up = singularity_radius(moment_provider(r_coarse + eps * cmath.exp(1j * beta)), j_min)
        dn = singularity_radius(moment_provider(r_coarse - eps * cmath.exp(1j * beta)), j_min)
        radii.append(up + dn)
    alpha_coarse = float(betas[int(np.argmax(radii))])

    # 3. least-squares polish of (r, alpha)
    nf = min(n_fit, N)
    geom = geometry_coeffs(shape, nf)
    G = gn_matrix(geom)
    w = _row_weights(shape, nf)
    Gw = G * w[:, None]
    Gr = np.vstack([Gw.real, Gw.imag])
    Gpinv = np.linalg.pinv(Gr)
    table_r = transport(moment_provider(r_coarse), r_coarse)
    table_r = MomentTable(table_r.nu, table_r.lambdas[:nf])
    mscale = max(np.max(np.abs(invert_moments(table_r, r_coarse, 0.0) * w)), 1e-300)

    def resid(p):
        m = invert_moments(table_r, complex(p[0], p[1]), p[2]) * w / mscale
        mr = np.concatenate([m.real, m.imag])
        return mr - Gr @ (Gpinv @ mr)

    best = None
    for da in (0.0, -0.1, 0.1):
        sol = optimize.least_squares(
            resid, [r_coarse.real, r_coarse.imag, alpha_coarse + da], xtol=1e-15, ftol=1e-15, gtol=1e-15
        )
        if best is None or sol.cost < best.cost:
            best = sol
    r = complex(best.x[0], best.x[1])
    alpha = wrap_angle(best.x[2]) % math.pi

    # 4. velocity
    lam_r = transported_moments(moment_provider(r), r)
    e1 = cmath.exp(1j * alpha)
    mu = lam_r[0] / e1 / (a + b)
    w0 = (mu + mu.conjugate()).real / b + (mu - mu.conjugate()) / a
    w0 = complex(w0)
    c2 = _ellipse_c2(a, b)
    om_c = lam_r[1] / (1j * c2 * e1 * e1)
    omega = om_c.real

    cfg = Configuration.make(alpha, r, omega, w0)
    twin = Configuration.make(alpha + math.pi, r, omega, -w0)
    table_check = moment_provider(0j)
    residual = _moment_misfit(shape, cfg, table_check, None)
    extras = {
        "r_grid": r_grid,
        "r_singularity": r_coarse,
        "alpha_scan": alpha_coarse,
        "polish_cost": float(best.cost),
        "omega_imag_defect": float(abs(om_c.imag) / max(abs(om_c), 1e-300)),
    }
    if potential is not None:
        zfar = r + 1e4 * (a + 1.0)
        extras["lambda1_far_field_defect"] = float(
            abs(complex(potential(zfar)) * (zfar - r) - lam_r[0]) / max(abs(lam_r[0]), 1e-300)
        )
    return DetectionResult(
        configurations=[cfg, twin],
        resolved={"r": True, "alpha_mod": 2, "w_world": True, "omega_abs_only": False},
        residual=residual,
        method="ellipse",
        extras=extras,
    )


# -- pi/2-symmetric solids -----------------------------------------------------

def _quarter_partial(shape, moment_provider, nu, geom, N):
    table = moment_provider(nu)
    N = table.N if N is None else min(N, table.N)
    table = MomentTable(table.nu, table.lambdas[:N])
    geom = _geom_for(shape, N, geom)
    rho = shape.l1_norm()
    lam = table.lambdas
    scale = table.scale()
    if scale == 0:
        raise DetectionError("all moments vanish: stealth input")
    c_nz = np.flatnonzero(_geom_nonzero(geom.C, rho)) + 1
    B1 = geom.B[0].real
    if abs(lam[0]) > ZERO_REL * scale:
        branch = "lambda1"
        if N < 2:
            raise DetectionError("need at least 2 moments")
        r = table.nu + lam[1] / lam[0]
        w_world = complex(lam[0] / B1)
        q = transported_moments(table, r)
        if c_nz.size == 0:
            raise DetectionError("no nonzero C_m within N; raise N")
        m = int(c_nz[0])
        omega_abs = float(abs(q[m - 1]) / abs(geom.C[m - 1]))
    else:
        branch = "pure-rotation"
        w_world = 0j
        cand = [m for m in c_nz if m < N and abs(lam[m - 1]) > ZERO_REL * scale]
        if not cand:
            raise DetectionError("no index m with C_m != 0 and lambda_m != 0 within N; raise N")
        m = int(cand[0])
        r = table.nu + lam[m] / (m * lam[m - 1])
        omega_abs = float(abs(lam[m - 1]) / abs(geom.C[m - 1]))
    return table, geom, r, w_world, omega_abs, branch, m


def _consistency(moment_provider, r, nu, branch, m):
    """Residual of the relation that fixed ``r``, checked at a second point."""
    nu2 = nu + 1.0 + 0.5j
    t2 = moment_provider(nu2)
    lam = t2.lambdas
    scale = max(t2.scale(), 1e-300)
    if branch == "lambda1":
        return float(abs(lam[0] * (nu2 - r) + lam[1]) / scale)
    return float(abs(lam[m] - m * lam[m - 1] * (r - nu2)) / scale)


def detect_quarter_symmetric(
    shape: ShapeSpec,
    moment_provider: MomentProvider,
    nu: complex = 0j,
    geom: GeometryCoeffs | None = None,
    N: int | None = None,
) -> DetectionResult:
    """Partial detection for shapes invariant under a quarter turn.

    Recovers ``r``, the fixed-frame velocity ``w_world = e^{i alpha} w0`` and
    ``|omega|``; the orientation and the sign of ``omega`` stay unresolved.
    """
    m_sym = symmetry_order(shape)
    if m_sym % 4 != 0:
        raise ValueError(f"shape symmetry order {m_sym} is not a multiple of 4")
    table, geom, r, w_world, omega_abs, branch, m = _quarter_partial(shape, moment_provider, nu, geom, N)
    residual = _consistency(moment_provider, r, nu, branch, m)
    rep = Configuration.make(0.0, r, omega_abs, w_world)
    return DetectionResult(
        configurations=[rep],
        resolved={"r": True, "alpha_mod": None, "w_world": True, "omega_abs_only": True},
        residual=residual,
        method="symmetric",
        extras={"r": r, "w_world": w_world, "omega_abs": omega_abs, "branch": branch, "m": m},
    )


def detect_quarter_full(
    shape: ShapeSpec,
    moment_provider: MomentProvider,
    nu: complex = 0j,
    geom: GeometryCoeffs | None = None,
    N: int | None = None,
) -> DetectionResult:
    """Full detection for quarter-turn symmetric shapes when two coefficients
    four indices apart are available; falls back to the partial result."""
    partial = detect_quarter_symmetric(shape, moment_provider, nu, geom, N)
    table = moment_provider(nu)
    Nt = table.N if N is None else min(N, table.N)
    table = MomentTable(table.nu, table.lambdas[:Nt])
    geom = _geom_for(shape, Nt, geom)
    rho = shape.l1_norm()
    r = partial.extras["r"]
    w_world = partial.extras["w_world"]
    omega_abs = partial.extras["omega_abs"]
    q = transported_moments(table, r)
    qscale = max(np.max(np.abs(q)), 1e-300)
    q_nz = np.abs(q) > ZERO_REL * qscale

    def pairs(vec):
        nz = _geom_nonzero(vec, rho)
        return [m for m in range(1, Nt - 3) if nz[m - 1] and nz[m + 3] and q_nz[m - 1] and q_nz[m + 3]]

    e4 = None
    used = None
    moving = abs(w_world) > ZERO_REL * max(abs(w_world), omega_abs, 1e-300)
    rotating = omega_abs > ZERO_REL * max(abs(w_world), omega_abs, 1e-300)
    if rotating and pairs(geom.C):
        m = pairs(geom.C)[0]
        e4 = q[m + 3] * geom.C[m - 1] / (q[m - 1] * geom.C[m + 3])
        used = ("C", m)
    elif moving:
        for name, vec in (("A", geom.A), ("B", geom.B)):
            ps = pairs(vec)
            if ps:
                m = ps[0]
                e4 = q[m + 3] * vec[m - 1] / (q[m - 1] * vec[m + 3])
                used = (name, m)
                break
    if e4 is None:
        partial.extras["full"] = False
        partial.method = "symmetric-full(partial)"
        return partial

    e4_modulus = abs(e4)
    e4 = _unit(e4)
    alpha0 = wrap_angle(cmath.phase(e4) / 4.0)
    omega = 0.0
    if rotating:
        c_nz = np.flatnonzero(_geom_nonzero(geom.C, rho)) + 1
        mc = int(c_nz[0])
        e_m = e4 ** (mc // 4)
        omega = (q[mc - 1] / (1j * geom.C[mc - 1] * e_m)).real
    configs = []
    for j in range(4):
        a = alpha0 + j * math.pi / 2.0
        configs.append(Configuration.make(a, r, omega, cmath.exp(-1j * a) * w_world))
    residual = _moment_misfit(shape, configs[0], table, geom)
    return DetectionResult(
        configurations=configs,
        resolved={"r": True, "alpha_mod": 4, "w_world": True, "omega_abs_only": False},
        residual=residual,
        method="symmetric-full",
        extras={**partial.extras, "full": True, "pair": used, "e4_modulus": e4_modulus},
    )


# -- the c_1 / c_-4 / c_-7 family ------------------------------------------------

def _c147_case(case, table, r, geom, shape):
    """Solve one of the three cases once ``r`` is known; returns a Configuration."""
    q = transported_moments(table, r)  # q_n = e^{i n alpha} m_n
    A, B, C = geom.A, geom.B, geom.C
    phases = {}
    if case == "general":
        # q1 = e^{ia} B1 w0, q3 = e^{3ia} i omega C3, q4 = -e^{4ia} A4 conj(w0)
        w_abs = abs(q[0]) / abs(B[0])
        om_abs = abs(q[2]) / abs(C[2])
        phases = {
            "e3_signed": q[2] / (1j * C[2] * om_abs),  # sign(omega) e^{3 i alpha}
            "e5": -q[0] * q[3] / (B[0] * A[3] * w_abs**2),
        }
        # Bezout 2*3 - 5 = 1; the even power removes the sign of omega
        alpha = bezout_angle([(3, _unit(phases["e3_signed"])), (5, _unit(phases["e5"]))])
        w0 = q[0] / (cmath.exp(1j * alpha) * B[0])
        omega = (q[2] / (1j * C[2] * cmath.exp(3j * alpha))).real
    elif case == "translation":
        # q6 = e^{6ia} B6 w0, q7 = -e^{7ia} A7 conj(w0)
        w_abs = abs(q[0]) / abs(B[0])
        phases = {
            "e5": q[5] * B[0] / (q[0] * B[5]),
            "e8": -q[0] * q[6] / (B[0] * A[6] * w_abs**2),
        }
        alpha = bezout_angle([(5, _unit(phases["e5"])), (8, _unit(phases["e8"]))])
        w0 = q[0] / (cmath.exp(1j * alpha) * B[0])
        omega = 0.0
    elif case == "rotation":
        # q3, q5, q8 are all e^{i n a} i omega C_n
        phases = {
            "e2": q[4] * C[2] / (q[2] * C[4]),
            "e3": q[7] * C[4] / (q[4] * C[7]),
        }
        alpha = bezout_angle([(2, _unit(phases["e2"])), (3, _unit(phases["e3"]))])
        w0 = 0j
        omega = (q[2] / (1j * C[2] * cmath.exp(3j * alpha))).real
    else:
        raise ValueError(case)
    cfg = Configuration.make(alpha, r, omega, w0)
    return cfg, _moment_misfit(shape, cfg, table, geom), phases


def detect_c147(
    shape: ShapeSpec,
    moment_provider: MomentProvider,
    nu: complex = 0j,
    geom: GeometryCoeffs | None = None,
) -> DetectionResult:
    """Full detection for shapes with only ``c_1, c_-4, c_-7`` nonzero."""
    support = {1} | {-(j + 1) for j, t in enumerate(shape.tail) if t != 0}
    if support != {1, -4, -7}:
        raise ValueError(f"shape support {sorted(support)} is not {{1, -4, -7}}")
    table = moment_provider(nu)
    if table.N < 8:
        raise ValueError("need at least 8 moments")
    N = table.N
    geom = _geom_for(shape, N, geom)
    lam = table.lambdas
    scale = table.scale()
    if scale == 0:
        raise DetectionError("all moments vanish: impossible for this shape with nonzero velocity")

    candidates = []
    lam1_small = abs(lam[0]) <= ZERO_REL * scale
    if lam1_small:
        if abs(lam[2]) <= ZERO_REL * scale:
            raise DetectionError("lambda_1 and lambda_3 both vanish: stealth-like input")
        r = table.nu + lam[3] / (3.0 * lam[2])
        candidates.append(("rotation", r))
    else:
        r = table.nu + lam[1] / lam[0]
        q = transported_moments(table, r)
        qs = max(np.max(np.abs(q)), 1e-300)
        ratio = abs(q[2]) / qs
        if ratio > 1e-6:
            candidates.append(("general", r))
        elif ratio <= ZERO_REL:
            candidates.append(("translation", r))
        else:
            # ambiguous magnitude: keep both readings, choose by residual
            candidates += [("general", r), ("translation", r)]
    results = []
    for case, r in candidates:
        try:
            cfg, res, phases = _c147_case(case, table, r, geom, shape)
        except (DetectionError, BezoutError, ZeroDivisionError):
            continue
        results.append((res, case, cfg, phases))
    if not results:
        raise DetectionError("no case of the c147 algorithm applies to these moments")
    results.sort(key=lambda t: t[0])
    res, case, cfg, phases = results[0]
    return DetectionResult(
        configurations=[cfg],
        resolved={"r": True, "alpha_mod": 1, "w_world": True, "omega_abs_only": False},
        residual=res,
        method="c147",
        extras={
            "case": case,
            "candidates": [{"case": c, "residual": float(rr)} for rr, c, _, _ in results],
            "phase_moduli_defect": float(max((abs(abs(v) - 1) for v in phases.values()), default=0.0)),
        },
    )
