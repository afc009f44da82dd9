"""Families of non-detectable solids sharing one potential.

The stream function ``psi = cos(n theta) r^{-n} = Im(i / z^n)`` has n-fold
symmetry.  A level set of

    g(x) = (omega/2) |x - s|^2 - psi(x) - level

around ``s`` is the boundary of a solid rotating about ``s`` with angular
velocity ``omega`` whose fluid potential is ``i / z^n``.  Placing ``s`` at the
n rotated points ``s_k = rho e^{2 pi i (k-1)/n}`` gives n congruent solids,
at n different positions, all producing the same potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rigid import Configuration, RigidVelocity, equivalent

__all__ = [
    "CounterexampleError",
    "LevelSetShape",
    "FamilyReport",
    "stream_function",
    "shared_potential",
    "level_function",
    "build_family",
    "verify_family",
    "hausdorff",
]

BISECT_TOL = 1e-12
CLOSURE_TOL = 1e-9
SCAN_SAMPLES = 4096

# sign conventions for the constant in the Dirichlet condition
MINUS_LEVEL = "minus-level"  # g = omega/2 |x-s|^2 - psi - level
PLUS_C = "plus-C"  # psi = omega/2 |x-s|^2 + C with C = level, i.e. g uses -level


class CounterexampleError(ValueError):
    """No closed level set of ``g`` around ``s`` for the requested level."""


def stream_function(n: int, x):
    """``psi(x) = Re(x^{-n}) = Im(i x^{-n})``, Cartesian form (no polar seam)."""
    x = np.asarray(x, dtype=complex)
    return np.imag(1j * x ** (-n))


def stream_gradient(n: int, x):
    """``grad psi`` as a complex number ``d_1 psi + i d_2 psi``."""
    # psi = Re(h) with h = x^{-n}; grad Re(h) = conj(h')
    x = np.asarray(x, dtype=complex)
    return np.conj(-n * x ** (-n - 1))


def shared_potential(n: int):
    """The common potential ``xi(z) = i / z^n`` of every family member."""

    def xi(z):
        z = np.asarray(z, dtype=complex)
        out = 1j * z ** (-n)
        return complex(out) if out.ndim == 0 else out

    return xi


def level_function(n: int, omega: float, s: complex, level: float, x):
    """``g(x) = (omega/2)|x - s|^2 - psi(x) - level``."""
    x = np.asarray(x, dtype=complex)
    return 0.5 * omega * np.abs(x - s) ** 2 - stream_function(n, x) - level


@dataclass(frozen=True, eq=False)
class LevelSetShape:
    """One member of a counterexample family."""

    n: int
    omega: float
    s: complex
    level: float  # effective level used in g (after the sign convention)
    boundary: np.ndarray = field(repr=False)
    index: int = 0
    convention: str = MINUS_LEVEL

    @property
    def velocity(self) -> RigidVelocity:
        return RigidVelocity(self.omega, 0j)

    def configuration(self) -> Configuration:
        """Pose relative to member 0 translated to the origin."""
        return Configuration.make(2.0 * math.pi * self.index / self.n, self.s, self.omega, 0j)

    def residual(self) -> float:
        return float(np.max(np.abs(level_function(self.n, self.omega, self.s, self.level, self.boundary))))


def _scan_roots(n, omega, s, level, dirs, r_lo, r_hi, target):
    """Radial roots of g along each unit direction, closest to ``target``."""
    t = np.linspace(r_lo, r_hi, SCAN_SAMPLES)
    pts = s + dirs[:, None] * t[None, :]
    with np.errstate(over="ignore", invalid="ignore"):
        g = level_function(n, omega, s, level, pts)
    sgn = np.sign(g)
    change = (sgn[:, :-1] * sgn[:, 1:] < 0) & np.isfinite(g[:, :-1]) & np.isfinite(g[:, 1:])
    if not change.any(axis=1).all():
        return None
    # bracket nearest to the predicted circle
    mid = 0.5 * (t[:-1] + t[1:])
    dist = np.where(change, np.abs(mid - target)[None, :], np.inf)
    k = np.argmin(dist, axis=1)
    a = t[k].copy()
    b = t[k + 1].copy()
    ga = g[np.arange(len(dirs)), k]
    # bisection, all rays at once
    while np.max(b - a) > BISECT_TOL:
        m = 0.5 * (a + b)
        gm = level_function(n, omega, s, level, s + dirs * m)
        left = np.sign(gm) == np.sign(ga)
        a = np.where(left, m, a)
        ga = np.where(left, gm, ga)
        b = np.where(left, b, m)
    return 0.5 * (a + b)


def _member(n, omega, s, level, angles):
    lev = level
    target = math.sqrt(2.0 * lev / omega) if lev > 0 else 0.0
    r_hi = 10.0 * math.sqrt(2.0 * abs(lev) / omega + 1.0)
    # the extra ray at angle0 + 2 pi closes the curve
    dirs = np.exp(1j * np.append(angles, angles[0] + 2.0 * math.pi))
    radii = _scan_roots(n, omega, s, lev, dirs, 0.1, r_hi, target)
    if radii is None:
        return None
    pts = s + dirs * radii
    if abs(pts[-1] - pts[0]) > CLOSURE_TOL:
        return None
    return pts[:-1]


def build_family(
    n: int, omega: float, rho: float, level: float, resolution: int = 512
) -> list[LevelSetShape]:
    """Build the ``n`` congruent members around ``s_k = rho e^{2 pi i (k-1)/n}``.

    ``level`` is signed.  The curve is first sought for
    ``g = omega/2 |x-s|^2 - psi - level``; if no closed curve exists (for
    instance ``level <= 0``) the opposite constant, ``-level``, is tried.
    The convention that produced the curve is stored on each member.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not omega > 0:
        raise ValueError("omega must be positive")
    if not rho > 0:
        raise ValueError("rho must be positive")
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    base = 2.0 * math.pi * np.arange(resolution) / resolution
    s1 = complex(rho, 0.0)
    for convention, lev in ((MINUS_LEVEL, float(level)), (PLUS_C, -float(level))):
        first = _member(n, omega, s1, lev, base)
        if first is None:
            continue
        family = [LevelSetShape(n, omega, s1, lev, first, 0, convention)]
        for k in range(1, n):
            rot = 2.0 * math.pi * k / n
            sk = s1 * complex(math.cos(rot), math.sin(rot))
            pts = _member(n, omega, sk, lev, base + rot)
            if pts is None:
                raise CounterexampleError(f"member {k + 1} failed although member 1 closed")
            family.append(LevelSetShape(n, omega, sk, lev, pts, k, convention))
        return family
    raise CounterexampleError(
        f"no closed level set around s for level={level} under either sign convention"
    )


def hausdorff(p: np.ndarray, q: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point sets in the plane."""
    from scipy.spatial.distance import directed_hausdorff

    a = np.column_stack([np.real(p), np.imag(p)])
    b = np.column_stack([np.real(q), np.imag(q)])
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


@dataclass
class FamilyReport:
    """Per-member residuals of the boundary checks."""

    convention: str
    level: float
    dirichlet: list[float]
    slip: list[float]
    potential: list[float]
    congruence: list[float]
    simple: list[bool]
    winding: list[int]
    distinct_positions: bool

    def max_residual(self) -> float:
        return max(self.dirichlet + self.slip + self.potential + self.congruence)

    def ok(self, tol: float = 1e-6) -> bool:
        return (
            self.max_residual() < tol
            and all(self.simple)
            and all(w == 1 for w in self.winding)
            and self.distinct_positions
        )

    def to_json(self) -> dict:
        return {
            "convention": self.convention,
            "level": self.level,
            "dirichlet": self.dirichlet,
            "slip": self.slip,
            "potential": self.potential,
            "congruence": self.congruence,
            "simple": self.simple,
            "winding": self.winding,
            "distinct_positions": self.distinct_positions,
            "ok": self.ok(),
        }


def _winding(points: np.ndarray, s: complex) -> int:
    d = np.angle(np.roll(points, -1) - s) - np.angle(points - s)
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    return int(round(d.sum() / (2.0 * np.pi)))


def verify_family(family: list[LevelSetShape]) -> FamilyReport:
    """Check the boundary conditions that make ``i/z^n`` the potential of every member."""
    from .shape import boundary_self_intersects

    if not family:
        raise ValueError("empty family")
    n = family[0].n
    dirichlet, slip, potential, congruence, simple, winding = [], [], [], [], [], []
    ref = family[0].boundary
    for mem in family:
        x = mem.boundary
        psi = stream_function(n, x)
        # (a) psi - omega/2 |x-s|^2 = -level along the boundary
        dirichlet.append(float(np.max(np.abs(psi - 0.5 * mem.omega * np.abs(x - mem.s) ** 2 + mem.level))))
        # (b) tangential derivative of psi against omega tau.(x - s), per segment
        y = np.roll(x, -1)
        seg = y - x
        length = np.abs(seg)
        dpsi = (stream_function(n, y) - psi) / length
        mid = 0.5 * (x + y) - mem.s
        rigid = mem.omega * np.real(np.conj(seg) * mid) / length
        slip.append(float(np.max(np.abs(dpsi - rigid))))
        # (c) Im(i/z^n) against the polar form cos(n theta) r^{-n}
        r, th = np.abs(x), np.angle(x)
        potential.append(float(np.max(np.abs(np.imag(shared_potential(n)(x)) - np.cos(n * th) * r ** (-n)))))
        rot = np.exp(2j * math.pi * mem.index / n)
        congruence.append(hausdorff(ref * rot, x))
        simple.append(not boundary_self_intersects(x))
        winding.append(_winding(x, mem.s))
    cfgs = [m.configuration() for m in family]
    distinct = all(
        not equivalent(cfgs[i], cfgs[j], 1)
        for i in range(len(cfgs))
        for j in range(i + 1, len(cfgs))
    )
    return FamilyReport(
        family[0].convention, family[0].level, dirichlet, slip, potential,
        congruence, simple, winding, distinct,
    )
