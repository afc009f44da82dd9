"""Conformal description of the solid's shape.

The fluid region around the reference shape is the image of ``|z| > 1`` under

    f(z) = c_1 z + sum_{k <= -1} c_k z^k

with a finite tail ``c_{-1}, ..., c_{-M}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np

from .seqcore import CoeffSeq

__all__ = [
    "ShapeSpec",
    "InversionError",
    "eval_map",
    "eval_map_derivative",
    "eval_map_inverse",
    "area",
    "boundary",
    "symmetry_order",
    "boundary_self_intersects",
    "inside_solid",
    "make_disk",
    "make_ellipse",
    "make_arc",
    "make_segment",
    "make_c147",
    "AREA_TOL",
]

AREA_TOL = 1e-9


class InversionError(ArithmeticError):
    """Newton inversion of the conformal map did not reach an exterior root."""


@dataclass(frozen=True, eq=False)
class ShapeSpec:
    """Coefficients ``c_1`` and ``tail[j] = c_{-(j+1)}`` of the exterior map."""

    c1: complex
    tail: tuple[complex, ...] = ()

    def __post_init__(self):
        c1 = complex(self.c1)
        tail = tuple(complex(t) for t in self.tail)
        # trailing zeros carry no information
        while tail and tail[-1] == 0:
            tail = tail[:-1]
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "tail", tail)
        if c1 == 0:
            raise ValueError("c1 must be nonzero")
        a = area(self)
        if a < -AREA_TOL * max(1.0, abs(c1) ** 2):
            raise ValueError(f"negative area {a:.6g}: not the exterior map of a solid")

    @property
    def M(self) -> int:
        """Truncation order (length of the tail)."""
        return len(self.tail)

    @property
    def degenerate(self) -> bool:
        """Zero-area shapes (segments, arcs)."""
        return abs(area(self)) <= AREA_TOL * max(1.0, abs(self.c1) ** 2)

    @cached_property
    def seq(self) -> CoeffSeq:
        """The full sequence ``c`` (``c_0 = 0``, ``c_k = 0`` for ``k >= 2``)."""
        entries = {1: self.c1}
        entries.update({-(j + 1): v for j, v in enumerate(self.tail)})
        return CoeffSeq(entries)

    def coeff(self, k: int) -> complex:
        if k == 1:
            return self.c1
        if k <= -1 and -k <= len(self.tail):
            return self.tail[-k - 1]
        return 0j

    def l1_norm(self) -> float:
        return abs(self.c1) + float(sum(abs(t) for t in self.tail))

    def max_radius(self) -> float:
        """Upper bound for ``|f(z)|`` on the unit circle."""
        return self.l1_norm()

    def to_json(self) -> dict:
        return {
            "c1": [self.c1.real, self.c1.imag],
            "tail": [[t.real, t.imag] for t in self.tail],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ShapeSpec":
        return cls(complex(*obj["c1"]), tuple(complex(*t) for t in obj.get("tail", [])))

    def __eq__(self, other):
        if not isinstance(other, ShapeSpec):
            return NotImplemented
        return self.c1 == other.c1 and self.tail == other.tail

    def __hash__(self):
        return hash((self.c1, self.tail))


def _poly_eval(shape: ShapeSpec, w: np.ndarray) -> np.ndarray:
    # Horner in 1/w for the tail
    inv = 1.0 / w
    acc = np.zeros_like(w)
    for t in reversed(shape.tail):
        acc = (acc + t) * inv
    return shape.c1 * w + acc


def _poly_deriv(shape: ShapeSpec, w: np.ndarray) -> np.ndarray:
    inv = 1.0 / w
    acc = np.zeros_like(w)
    # sum_k k c_{-k} w^{-k-1}, k = 1..M
    for k in range(len(shape.tail), 0, -1):
        acc = (acc - k * shape.tail[k - 1]) * inv
    return shape.c1 + acc * inv


def eval_map(shape: ShapeSpec, z, check: bool = True):
    """Evaluate ``f(z)`` for ``|z| >= 1`` (scalar or array)."""
    w = np.asarray(z, dtype=complex)
    if check and np.any(np.abs(w) < 1.0 - 1e-12):
        raise ValueError("eval_map is defined on |z| >= 1 only")
    out = _poly_eval(shape, w)
    return complex(out) if out.ndim == 0 else out


def eval_map_derivative(shape: ShapeSpec, z):
    w = np.asarray(z, dtype=complex)
    out = _poly_deriv(shape, w)
    return complex(out) if out.ndim == 0 else out


def _newton(shape, z, w, max_iter, tol):
    """Vectorised Newton on f(w) = z; returns (w, converged mask)."""
    done = np.zeros(z.shape, dtype=bool)
    scale = tol * (1.0 + np.abs(z))
    for _ in range(max_iter):
        act = ~done
        if not act.any():
            break
        wa = w[act]
        g = _poly_eval(shape, wa) - z[act]
        dg = _poly_deriv(shape, wa)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = g / dg
        step = np.where(np.isfinite(step), step, 0.0)
        new = wa - step
        # damping: never let the iterate fall deep inside the unit disk
        for _ in range(30):
            bad = np.abs(new) < 0.5
            if not bad.any():
                break
            step = np.where(bad, 0.5 * step, step)
            new = wa - step
        w[act] = new
        # quadratic convergence: the next correction would be far below eps
        conv = np.abs(step) <= 1e-14 * (1.0 + np.abs(new))
        done[np.flatnonzero(act)[conv]] = True
    res = np.abs(_poly_eval(shape, w) - z)
    ok = (res <= scale) & (np.abs(w) > 1.0)
    return w, ok


def eval_map_inverse(shape: ShapeSpec, z, max_iter: int = 100, tol: float = 1e-12):
    """Solve ``f(w) = z`` for the exterior root ``|w| > 1``.

    Newton from ``z / c1``; points that fail are retried by continuation along
    the ray from infinity.  Raises :class:`InversionError` for points inside
    (or too close to) the solid.
    """
    zz = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    w, ok = _newton(shape, zz, zz / shape.c1, max_iter, tol)
    if not ok.all():
        idx = np.flatnonzero(~ok)
        zb = zz[idx]
        far = 1e3 * (1.0 + shape.l1_norm())
        # start well outside and walk in along z * t, t decreasing to 1
        t0 = np.maximum(far / np.maximum(np.abs(zb), 1e-300), 1.0)
        wb = zb * t0 / shape.c1
        for s in np.linspace(0.0, 1.0, 65)[1:]:
            target = zb * (t0 ** (1.0 - s))
            wb, _ = _newton(shape, target, wb, 20, tol)
        wb, okb = _newton(shape, zb, wb, max_iter, tol)
        w[idx] = wb
        ok[idx] = okb
    if not ok.all():
        bad = zz[~ok]
        raise InversionError(
            f"{bad.size} point(s) could not be mapped to |w| > 1 "
            f"(first: {bad[0]:.6g}); inside or too close to the solid"
        )
    w = w.reshape(np.shape(z))
    return complex(w) if w.ndim == 0 else w


def area(shape: ShapeSpec) -> float:
    """Area of the solid, ``pi * sum_k k |c_k|^2``."""
    s = abs(shape.c1) ** 2 - sum((j + 1) * abs(t) ** 2 for j, t in enumerate(shape.tail))
    return math.pi * s


def boundary(shape: ShapeSpec, M: int) -> np.ndarray:
    """``M`` counterclockwise samples ``f(e^{2 pi i j / M})`` of the boundary."""
    if M < 3:
        raise ValueError("need at least 3 boundary samples")
    t = 2.0 * np.pi * np.arange(M) / M
    return eval_map(shape, np.exp(1j * t), check=False)


def symmetry_order(shape: ShapeSpec) -> int:
    """Largest ``m`` with ``e^{2 pi i/m} S0 = S0``; 0 for the disk (every ``m``)."""
    ks = [j + 1 for j, t in enumerate(shape.tail) if t != 0]
    # k - 1 over the support: 0 for c_1, -(j+1) - 1 for c_{-(j+1)}
    return reduce(math.gcd, (k + 1 for k in ks), 0)


def _segments_cross(p: np.ndarray) -> bool:
    a = p
    b = np.roll(p, -1)
    n = len(p)
    ax, ay, bx, by = a.real, a.imag, b.real, b.imag

    def orient(px, py, qx, qy, rx, ry):
        return (qx - px) * (ry - py) - (qy - py) * (rx - px)

    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        d1 = orient(ax[i], ay[i], bx[i], by[i], ax[j], ay[j])
        d2 = orient(ax[i], ay[i], bx[i], by[i], bx[j], by[j])
        d3 = orient(ax[j], ay[j], bx[j], by[j], ax[i], ay[i])
        d4 = orient(ax[j], ay[j], bx[j], by[j], bx[i], by[i])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return True
    return False


def boundary_self_intersects(shape_or_points, M: int = 256) -> bool:
    """Diagnostic: does the sampled boundary polyline cross itself?

    Accepts a :class:`ShapeSpec` or a closed polyline of complex points.
    Not enforced anywhere; univalence of ``f`` is trusted input.
    """
    if isinstance(shape_or_points, ShapeSpec):
        pts = boundary(shape_or_points, M)
    else:
        pts = np.asarray(shape_or_points, dtype=complex)
    return _segments_cross(pts)


def inside_solid(shape: ShapeSpec, z, M: int = 1024) -> np.ndarray:
    """Even-odd test of body-frame points against the sampled boundary."""
    z = np.asarray(z, dtype=complex)
    p = boundary(shape, M)
    q = np.roll(p, -1)
    x, y = z.real[..., None], z.imag[..., None]
    straddle = (p.imag > y) != (q.imag > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = p.real + (y - p.imag) * (q.real - p.real) / (q.imag - p.imag)
    crossings = np.sum(straddle & (x < xc), axis=-1)
    return crossings % 2 == 1


# -- constructors --------------------------------------------------------

def make_disk(radius: float = 1.0) -> ShapeSpec:
    if radius <= 0:
        raise ValueError("radius must be positive")
    return ShapeSpec(radius)


def make_ellipse(a: float, b: float) -> ShapeSpec:
    """Ellipse with semi-axes ``a > b > 0``, major axis along the real line."""
    if not (a > b > 0):
        raise ValueError(f"need a > b > 0, got a={a}, b={b} (use make_disk for a == b)")
    return ShapeSpec((a + b) / 2.0, ((a - b) / 2.0,))


def make_arc(h: float, tol: float = 1e-14) -> ShapeSpec:
    """Circular arc, image of the unit circle under ``z + (1-h^2)/(z + i h)``.

    The geometric tail ``c_k = (1-h^2)(-ih)^{-k-1}`` is truncated once
    ``|c_{-M}| < tol``.
    """
    if not (0 < h < 1):
        raise ValueError(f"arc parameter h must lie in (0, 1), got {h}")
    q = 1.0 - h * h
    tail = []
    k = -1
    while True:
        ck = q * (-1j * h) ** (-k - 1)
        tail.append(ck)
        if abs(ck) < tol:
            break
        k -= 1
    return ShapeSpec(1.0, tuple(tail))


def make_segment(R: float, theta: float) -> ShapeSpec:
    """Segment of half-length ``2R`` at angle ``theta``."""
    if R <= 0:
        raise ValueError("R must be positive")
    e = complex(math.cos(theta), math.sin(theta))
    return ShapeSpec(R * e, (R * e,))


def make_c147(c1: complex, cm4: complex, cm7: complex) -> ShapeSpec:
    """Shape with only ``c_1``, ``c_{-4}`` and ``c_{-7}`` nonzero."""
    if c1 == 0 or cm4 == 0 or cm7 == 0:
        raise ValueError("c1, c_-4 and c_-7 must all be nonzero")
    if abs(c1) ** 2 - 4 * abs(cm4) ** 2 - 7 * abs(cm7) ** 2 <= 0:
        raise ValueError("coefficients give a non-positive area")
    return ShapeSpec(c1, (0, 0, 0, cm4, 0, 0, cm7))
