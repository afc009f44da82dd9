"""Forward problem: the complex potential generated by a moving solid."""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .rigid import Configuration, RigidVelocity
from .seqcore import CoeffSeq, conv, reflect
from .shape import (
    ShapeSpec,
    eval_map,
    eval_map_derivative,
    eval_map_inverse,
)

__all__ = [
    "PotentialCoeffs",
    "StealthVerdict",
    "zeta_coeffs",
    "eval_potential",
    "eval_fluid_velocity",
    "stream_boundary_residual",
    "ellipse_potential_closed_form",
    "classify_stealth",
    "stealth_threshold",
    "BranchCutError",
]


class BranchCutError(ValueError):
    """Point lies on the branch cut of the closed-form ellipse potential."""


@dataclass(frozen=True)
class PotentialCoeffs:
    """Coefficients of ``zeta(w) = sum_{k<=-1} zeta_k w^k`` in the body frame."""

    zeta: CoeffSeq

    def __post_init__(self):
        if self.zeta.values.size and self.zeta.hi > -1:
            raise ValueError("potential coefficients live on negative indices only")

    def _dense(self):
        # returns (powers, coefficients) for k = lo..-1
        z = self.zeta
        if not z.values.size:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=complex)
        ks = np.arange(z.lo, -1 + 1)
        return ks, z.window(z.lo, -1)

    def __call__(self, w):
        """``zeta(w)`` for ``|w| >= 1``."""
        w = np.asarray(w, dtype=complex)
        ks, cs = self._dense()
        inv = 1.0 / w
        acc = np.zeros_like(w)
        for c in cs:  # cs[0] is the most negative power
            acc = (acc + c) * inv
        return complex(acc) if acc.ndim == 0 else acc

    def derivative(self, w):
        """``zeta'(w)`` from the termwise derivative ``k zeta_k w^{k-1}``."""
        w = np.asarray(w, dtype=complex)
        ks, cs = self._dense()
        inv = 1.0 / w
        acc = np.zeros_like(w)
        for k, c in zip(ks, cs):
            acc = (acc + k * c) * inv
        acc = acc * inv
        return complex(acc) if acc.ndim == 0 else acc

    def is_zero(self, tol: float) -> bool:
        return bool(np.all(np.abs(self.zeta.values) <= tol))


def zeta_coeffs(shape: ShapeSpec, vel: RigidVelocity) -> PotentialCoeffs:
    """``zeta_k = -conj(w0) c_k + w0 c^check_k + i omega (c^check * c)_k``, ``k <= -1``."""
    c = shape.seq
    cc = reflect(c)
    full = c * (-vel.w0.conjugate()) + cc * vel.w0 + conv(cc, c) * (1j * vel.omega)
    lo = min(full.lo, -1)
    return PotentialCoeffs(CoeffSeq.from_dense(lo, full.window(lo, -1)))


def _body_coords(cfg: Configuration, z):
    return (np.asarray(z, dtype=complex) - cfg.r) * cmath.exp(-1j * cfg.alpha)


def eval_potential(shape: ShapeSpec, cfg: Configuration, z, zeta: PotentialCoeffs | None = None):
    """Complex potential ``xi(z) = zeta(f^{-1}((z - r) e^{-i alpha}))``.

    ``z`` must lie in the fluid; inversion failures raise
    :class:`~hydrodetect.shape.InversionError`.
    """
    if zeta is None:
        zeta = zeta_coeffs(shape, cfg.velocity)
    w = eval_map_inverse(shape, _body_coords(cfg, z))
    return zeta(w)


def eval_fluid_velocity(shape: ShapeSpec, cfg: Configuration, z, zeta: PotentialCoeffs | None = None):
    """Fluid velocity ``u = -conj(xi'(z))`` by the chain rule through ``f^{-1}``.

    The boundary identity behind :func:`zeta_coeffs` fixes ``Im xi`` with the
    opposite orientation to ``grad psi = (grad phi)^perp``, so ``xi`` is minus
    the physical potential. The sign here makes ``u`` satisfy the slip condition
    ``u . n = v . n``.
    """
    if zeta is None:
        zeta = zeta_coeffs(shape, cfg.velocity)
    w = np.asarray(eval_map_inverse(shape, _body_coords(cfg, z)))
    fp = np.asarray(eval_map_derivative(shape, w))
    if np.any(fp == 0):
        raise ZeroDivisionError("f'(w) = 0: evaluation point touches a critical point of the map")
    dxi = np.asarray(zeta.derivative(w)) * cmath.exp(-1j * cfg.alpha) / fp
    out = -np.conj(dxi)
    return complex(out) if out.ndim == 0 else out


def stream_boundary_residual(
    shape: ShapeSpec,
    cfg_or_vel,
    M: int = 256,
    zeta: PotentialCoeffs | None = None,
) -> float:
    """Deviation from constancy of the boundary stream-function identity.

    Along ``f(e^{it})`` the quantity
    ``Im zeta + Im(conj(w0) f) - (omega/2)|f|^2`` must be constant.
    """
    if M < 8:
        raise ValueError("need M >= 8 boundary samples")
    vel = cfg_or_vel.velocity if isinstance(cfg_or_vel, Configuration) else cfg_or_vel
    if zeta is None:
        zeta = zeta_coeffs(shape, vel)
    e = np.exp(2j * np.pi * np.arange(M) / M)
    fz = eval_map(shape, e, check=False)
    s = np.imag(zeta(e)) + np.imag(np.conj(vel.w0) * fz) - 0.5 * vel.omega * np.abs(fz) ** 2
    return float(np.max(np.abs(s - s.mean())))


def ellipse_potential_closed_form(a: float, b: float, cfg: Configuration, z):
    """Closed-form potential of an ellipse (principal square root).

    Holomorphic off the segment ``r + t sqrt(a^2-b^2) e^{i alpha}``,
    ``|t| <= 1``.
    """
    z = np.asarray(z, dtype=complex)
    d = z - cfg.r
    e1 = cmath.exp(1j * cfg.alpha)
    c2 = (a * a - b * b)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = 1.0 - c2 * e1 * e1 / (d * d)
    # principal sqrt is discontinuous exactly on arg in (-inf, 0]
    on_cut = (np.imag(arg) == 0) & (np.real(arg) <= 0) | (d == 0)
    if np.any(on_cut):
        raise BranchCutError("evaluation point lies on the branch cut")
    den = 1.0 + np.sqrt(arg)
    w0, om = cfg.w0, cfg.omega
    t1 = (-(c2) * np.conj(w0) + (a + b) ** 2 * w0) * e1 / (2.0 * d * den)
    t2 = 1j * c2 * (a + b) ** 2 * e1 * e1 * om / (4.0 * d * d * den * den)
    out = t1 + t2
    return complex(out) if out.ndim == 0 else out


class StealthVerdict(enum.Enum):
    ROTATING_DISK = "RotatingDisk"
    TANGENT_ARC = "TangentArc"
    TANGENT_SEGMENT = "TangentSegment"
    NOT_STEALTH = "NotStealth"

    def __str__(self):
        return self.value


def stealth_threshold(shape: ShapeSpec, vel: RigidVelocity, rel: float = 1e-12) -> float:
    n1 = shape.l1_norm()
    return rel * n1 * (abs(vel.w0) + abs(vel.omega) * n1)


def classify_stealth(shape: ShapeSpec, vel: RigidVelocity) -> StealthVerdict:
    """Decide whether the motion leaves the fluid at rest, and which kind."""
    if vel.omega == 0 and vel.w0 == 0:
        raise ValueError("zero velocity: stealth classification is vacuous")
    zeta = zeta_coeffs(shape, vel)
    if not zeta.is_zero(stealth_threshold(shape, vel)):
        return StealthVerdict.NOT_STEALTH
    tail = shape.tail
    if not tail:
        return StealthVerdict.ROTATING_DISK
    if len(tail) == 1 and math.isclose(abs(tail[0]), abs(shape.c1), rel_tol=1e-9):
        return StealthVerdict.TANGENT_SEGMENT
    return StealthVerdict.TANGENT_ARC
