"""Tracking a solid from time-resolved moment measurements.

Knowing the pose at ``t = 0``, the pose ODE

    d/dt (r, alpha) = P G_N^+ Theta_N(r - nu, alpha)^{-1} Lambda_N(t, nu),
    P = [[e^{i alpha}, i e^{i alpha}, 0], [0, 0, 1]]

is integrated with the classical fourth-order Runge-Kutta scheme.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .rigid import Position, RigidVelocity
from .shape import ShapeSpec
from .spectral import (
    GeometryCoeffs,
    MomentTable,
    geometry_coeffs,
    gn_matrix,
    invert_moments,
    moments_closed_form,
)
from .rigid import Configuration

__all__ = [
    "TimeSeriesMeasurement",
    "Trajectory",
    "TrackingError",
    "synthesize_timeseries",
    "track",
    "velocity_operator",
]

DIVERGENCE_RADIUS = 1e6


class TrackingError(ArithmeticError):
    """Integration left the region where the pose ODE is trustworthy."""


@dataclass(frozen=True)
class TimeSeriesMeasurement:
    """Moment tables at increasing times, all about the same ``nu`` with the same ``N``."""

    times: np.ndarray
    tables: tuple[MomentTable, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        tables = tuple(self.tables)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least 2 samples")
        if t.size != len(tables):
            raise ValueError("times and tables differ in length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        nu, N = tables[0].nu, tables[0].N
        if any(tb.nu != nu or tb.N != N for tb in tables):
            raise ValueError("all tables must share nu and N")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "tables", tables)

    @property
    def nu(self) -> complex:
        return self.tables[0].nu

    @property
    def N(self) -> int:
        return self.tables[0].N

    def matrix(self) -> np.ndarray:
        """``(samples, N)`` complex array of the moments."""
        return np.array([tb.lambdas for tb in self.tables])

    def interpolant(self) -> Callable[[float], np.ndarray]:
        """Cubic spline of every moment component (complex-valued)."""
        spl = CubicSpline(self.times, self.matrix(), axis=0)
        return lambda t: spl(t)

    def to_jsonl(self) -> list[dict]:
        return [dict(t=float(t), **tb.to_json()) for t, tb in zip(self.times, self.tables)]

    @classmethod
    def from_jsonl(cls, rows: Sequence[dict]) -> "TimeSeriesMeasurement":
        return cls([r["t"] for r in rows], tuple(MomentTable.from_json(r) for r in rows))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    poses: tuple[Position, ...]
    velocities: tuple[RigidVelocity, ...]

    def rows(self):
        """``(t, Re r, Im r, alpha, Re w_world, Im w_world, omega)`` per node."""
        for t, p, v in zip(self.times, self.poses, self.velocities):
            ww = v.world(p.alpha)
            yield (float(t), p.r.real, p.r.imag, p.alpha, ww.real, ww.imag, v.omega)


def synthesize_timeseries(
    shape: ShapeSpec,
    pose_path: Callable[[float], tuple[complex, float, complex, float]],
    nu: complex,
    N: int,
    times: Sequence[float],
    geom: GeometryCoeffs | None = None,
) -> TimeSeriesMeasurement:
    """Ground-truth moments along ``pose_path(t) = (r, alpha, dr/dt, dalpha/dt)``."""
    if geom is None or geom.N < N:
        geom = geometry_coeffs(shape, N)
    tables = []
    for t in times:
        r, a, dr, da = pose_path(float(t))
        w0 = cmath.exp(-1j * a) * complex(dr)
        cfg = Configuration.make(a, r, da, w0)
        tables.append(moments_closed_form(shape, cfg, nu, N, geom))
    return TimeSeriesMeasurement(np.asarray(times, dtype=float), tuple(tables))


def velocity_operator(geom: GeometryCoeffs, shape: ShapeSpec, rank_tol: float = 1e-10) -> np.ndarray:
    """Real ``3 x 2N`` least-squares pseudo-inverse of ``G_N`` (row-equilibrated).

    The returned matrix acts on ``concat(Re(w m), Im(w m))`` with
    ``w_n = ||c||_1^{-n}``; see :func:`_velocity`.
    """
    N = geom.N
    w = max(shape.l1_norm(), 1e-300) ** -np.arange(1, N + 1, dtype=float)
    G = gn_matrix(geom) * w[:, None]
    Gr = np.vstack([G.real, G.imag])
    s = np.linalg.svd(Gr, compute_uv=False)
    if s[0] == 0 or s[2] <= rank_tol * s[0]:
        raise np.linalg.LinAlgError(
            f"G_N has numerical rank < 3 at N={N}; raise N or the shape admits stealth motions"
        )
    return np.linalg.pinv(Gr), w


def _velocity(pinv, w, lam, nu, r, alpha):
    m = invert_moments(MomentTable(nu, lam), r, alpha) * w
    return pinv @ np.concatenate([m.real, m.imag])


def track(
    shape: ShapeSpec,
    initial: Position,
    data: TimeSeriesMeasurement,
    step: float = 1e-3,
    N: int | None = None,
    geom: GeometryCoeffs | None = None,
    t_end: float | None = None,
    interpolant: Callable[[float], np.ndarray] | None = None,
) -> Trajectory:
    """Integrate the pose ODE from ``initial`` at ``data.times[0]`` to ``t_end``.

    ``N`` defaults to ``min(12, data.N)``.  ``interpolant`` overrides the
    cubic spline of the samples (``t -> Lambda_N(t)``).  The last step is
    shortened to land on ``t_end`` exactly.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    N = min(12, data.N) if N is None else N
    if N > data.N:
        raise ValueError(f"N={N} exceeds the {data.N} measured moments")
    if geom is None or geom.N < N:
        geom = geometry_coeffs(shape, N)
    geom = geom.truncate(N)
    pinv, w = velocity_operator(geom, shape)
    t0 = float(data.times[0])
    t_end = float(data.times[-1]) if t_end is None else float(t_end)
    if not t0 <= t_end <= data.times[-1]:
        raise ValueError("t_end outside the measured interval")
    lam_of = interpolant or data.interpolant()
    nu = data.nu

    def rhs(t, r, a):
        # a runaway pose overflows the powers of (nu - r); caught below as divergence
        with np.errstate(over="ignore", invalid="ignore"):
            U = _velocity(pinv, w, np.asarray(lam_of(t))[:N], nu, r, a)
        e = cmath.exp(1j * a)
        return e * complex(U[0], U[1]), float(U[2]), U

    r, a = complex(initial.r), float(initial.alpha)
    times, poses, vels = [t0], [Position(a, r)], []
    t = t0
    nsteps = math.ceil((t_end - t0) / step - 1e-9) if t_end > t0 else 0
    for k in range(nsteps):
        h = min(step, t_end - t)
        k1r, k1a, U = rhs(t, r, a)
        if not vels:
            vels.append(RigidVelocity.from_vector(U))
        k2r, k2a, _ = rhs(t + h / 2, r + h / 2 * k1r, a + h / 2 * k1a)
        k3r, k3a, _ = rhs(t + h / 2, r + h / 2 * k2r, a + h / 2 * k2a)
        k4r, k4a, _ = rhs(t + h, r + h * k3r, a + h * k3a)
        r = r + h / 6 * (k1r + 2 * k2r + 2 * k3r + k4r)
        a = a + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        t = t0 + (k + 1) * step if k + 1 < nsteps else t_end
        if not (cmath.isfinite(r) and math.isfinite(a)) or abs(r - nu) > DIVERGENCE_RADIUS:
            raise TrackingError(f"trajectory diverged at t={t:.6g} (|r - nu| = {abs(r - nu):.3g})")
        times.append(t)
        poses.append(Position(a, r))
        vels.append(RigidVelocity.from_vector(rhs(t, r, a)[2]))
    if not vels:
        vels.append(RigidVelocity.from_vector(rhs(t0, r, a)[2]))
    return Trajectory(np.array(times), tuple(poses), tuple(vels))
