"""Positions, rigid velocities and configurations of the solid.

The rotation centre of the velocity field is always the reference point ``r``
of the solid, so ``v(x) = i*omega*(x - r) + e^{i alpha} w0``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

__all__ = [
    "Position",
    "RigidVelocity",
    "Configuration",
    "equivalent",
    "rigid_velocity_field",
    "wrap_angle",
    "ANGLE_TOL",
]

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-9


def wrap_angle(alpha: float) -> float:
    """Reduce an angle to ``[0, 2 pi)``."""
    a = math.fmod(float(alpha), TWO_PI)
    if a < 0:
        a += TWO_PI
    # fmod of values just below 0 can round to exactly 2 pi
    return 0.0 if a >= TWO_PI else a


def angle_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle."""
    d = wrap_angle(a - b)
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class Position:
    alpha: float
    r: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", wrap_angle(self.alpha))
        object.__setattr__(self, "r", complex(self.r))


@dataclass(frozen=True)
class RigidVelocity:
    omega: float
    w0: complex

    def __post_init__(self):
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "w0", complex(self.w0))

    def world(self, alpha: float) -> complex:
        """Translational velocity in the fixed frame, ``e^{i alpha} w0``."""
        return cmath.exp(1j * alpha) * self.w0

    def as_vector(self) -> tuple[float, float, float]:
        """``U = (Re w0, Im w0, omega)``."""
        return (self.w0.real, self.w0.imag, self.omega)

    @classmethod
    def from_vector(cls, U) -> "RigidVelocity":
        return cls(omega=float(U[2]), w0=complex(U[0], U[1]))


@dataclass(frozen=True)
class Configuration:
    position: Position
    velocity: RigidVelocity = field(default_factory=lambda: RigidVelocity(0.0, 0j))

    @property
    def alpha(self) -> float:
        return self.position.alpha

    @property
    def r(self) -> complex:
        return self.position.r

    @property
    def omega(self) -> float:
        return self.velocity.omega

    @property
    def w0(self) -> complex:
        return self.velocity.w0

    @classmethod
    def make(cls, alpha: float, r: complex, omega: float, w0: complex) -> "Configuration":
        return cls(Position(alpha, r), RigidVelocity(omega, w0))

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "r": [self.r.real, self.r.imag],
            "omega": self.omega,
            "w0": [self.w0.real, self.w0.imag],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Configuration":
        return cls.make(
            alpha=float(obj["alpha"]),
            r=complex(*obj["r"]),
            omega=float(obj["omega"]),
            w0=complex(*obj["w0"]),
        )


def equivalent(
    cfg1: Configuration,
    cfg2: Configuration,
    symmetry_order: int,
    tol: float = ANGLE_TOL,
) -> bool:
    """True when both configurations describe the same physical state.

    ``symmetry_order`` is the ``m`` of the shape's ``m``-fold rotational
    symmetry; the angle may then differ by a multiple of ``2 pi / m`` provided
    the body-frame velocity is counter-rotated by the same amount.
    """
    m = int(symmetry_order)
    if m < 1:
        raise ValueError(f"symmetry order must be >= 1, got {symmetry_order}")
    scale = 1.0 + max(abs(cfg1.r), abs(cfg2.r))
    if abs(cfg1.r - cfg2.r) > tol * scale:
        return False
    if abs(cfg1.omega - cfg2.omega) > tol * (1.0 + abs(cfg1.omega)):
        return False
    vscale = 1.0 + abs(cfg1.w0)
    for j in range(m):
        shift = TWO_PI * j / m
        if angle_distance(cfg2.alpha, cfg1.alpha + shift) > tol:
            continue
        if abs(cfg2.w0 - cmath.exp(-1j * shift) * cfg1.w0) <= tol * vscale:
            return True
    return False


def rigid_velocity_field(cfg: Configuration, x):
    """Complex rigid velocity ``i omega (x - r) + e^{i alpha} w0`` at ``x``.

    Works elementwise on numpy arrays.
    """
    return 1j * cfg.omega * (x - cfg.r) + cfg.velocity.world(cfg.alpha)
