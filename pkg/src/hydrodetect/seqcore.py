"""Finitely supported bilateral complex sequences.

A :class:`CoeffSeq` stores the entries ``a_k`` for ``k`` in a contiguous index
window ``[lo, lo + len(values))``; everything outside the window is zero.
Arithmetic never prunes small entries on its own, use :meth:`CoeffSeq.prune`.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

__all__ = ["CoeffSeq", "conv", "conv_power", "reflect", "delta"]


class CoeffSeq:
    """Immutable complex sequence ``(a_k)_{k in Z}`` with finite support."""

    __slots__ = ("_lo", "_values")

    def __init__(self, entries: Mapping[int, complex] | None = None):
        entries = dict(entries or {})
        if not entries:
            self._lo = 0
            self._values = np.zeros(0, dtype=complex)
        else:
            lo, hi = min(entries), max(entries)
            values = np.zeros(hi - lo + 1, dtype=complex)
            for k, v in entries.items():
                values[k - lo] = v
            self._lo = int(lo)
            self._values = values
        self._values.setflags(write=False)

    @classmethod
    def from_dense(cls, lo: int, values: Iterable[complex]) -> "CoeffSeq":
        """Build from a dense block whose first entry has index ``lo``."""
        obj = cls.__new__(cls)
        arr = np.array(values, dtype=complex)
        if arr.ndim != 1:
            raise ValueError("dense values must be one-dimensional")
        obj._lo = int(lo) if arr.size else 0
        obj._values = arr
        arr.setflags(write=False)
        return obj

    # -- access ---------------------------------------------------------
    @property
    def lo(self) -> int:
        return self._lo

    @property
    def hi(self) -> int:
        """Largest stored index (``lo - 1`` when empty)."""
        return self._lo + self._values.size - 1

    @property
    def values(self) -> np.ndarray:
        """Read-only dense view of the stored window."""
        return self._values

    def __getitem__(self, k: int) -> complex:
        i = k - self._lo
        if 0 <= i < self._values.size:
            return complex(self._values[i])
        return 0j

    def support(self) -> list[int]:
        """Indices carrying a nonzero entry."""
        return [self._lo + int(i) for i in np.flatnonzero(self._values)]

    def items(self) -> list[tuple[int, complex]]:
        return [(k, self[k]) for k in self.support()]

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Dense copy of entries ``lo..hi`` inclusive, zero-filled."""
        out = np.zeros(max(hi - lo + 1, 0), dtype=complex)
        a, b = max(lo, self._lo), min(hi, self.hi)
        if a <= b:
            out[a - lo : b - lo + 1] = self._values[a - self._lo : b - self._lo + 1]
        return out

    def l1_norm(self) -> float:
        return float(np.abs(self._values).sum())

    def prune(self, eps: float = 0.0) -> "CoeffSeq":
        """Drop entries with modulus ``<= eps`` and trim the window."""
        vals = np.where(np.abs(self._values) > eps, self._values, 0)
        nz = np.flatnonzero(vals)
        if nz.size == 0:
            return CoeffSeq()
        return CoeffSeq.from_dense(self._lo + int(nz[0]), vals[nz[0] : nz[-1] + 1])

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other: "CoeffSeq") -> "CoeffSeq":
        if not isinstance(other, CoeffSeq):
            return NotImplemented
        if not self._values.size:
            return other
        if not other._values.size:
            return self
        lo, hi = min(self._lo, other._lo), max(self.hi, other.hi)
        return CoeffSeq.from_dense(lo, self.window(lo, hi) + other.window(lo, hi))

    def __neg__(self) -> "CoeffSeq":
        return CoeffSeq.from_dense(self._lo, -self._values)

    def __sub__(self, other: "CoeffSeq") -> "CoeffSeq":
        return self + (-other)

    def __mul__(self, scalar: complex) -> "CoeffSeq":
        if isinstance(scalar, CoeffSeq):
            return NotImplemented
        return CoeffSeq.from_dense(self._lo, self._values * complex(scalar))

    __rmul__ = __mul__

    def conj(self) -> "CoeffSeq":
        return CoeffSeq.from_dense(self._lo, self._values.conj())

    def allclose(self, other: "CoeffSeq", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        lo, hi = min(self._lo, other._lo), max(self.hi, other.hi)
        a, b = self.window(lo, hi), other.window(lo, hi)
        scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoeffSeq):
            return NotImplemented
        return self.allclose(other, rtol=0.0)

    def __hash__(self) -> int:
        p = self.prune()
        return hash((p._lo, p._values.tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v:.6g}" for k, v in self.items())
        return f"CoeffSeq({{{body}}})"


def delta(k: int = 0) -> CoeffSeq:
    """Unit sequence with a single 1 at index ``k``."""
    return CoeffSeq({k: 1.0})


def conv(a: CoeffSeq, b: CoeffSeq) -> CoeffSeq:
    """Convolution ``(a*b)_k = sum_j a_{k-j} b_j``."""
    if not a.values.size or not b.values.size:
        return CoeffSeq()
    return CoeffSeq.from_dense(a.lo + b.lo, np.convolve(a.values, b.values))


def conv_power(c: CoeffSeq, k: int) -> CoeffSeq:
    """Iterated convolution ``c^k`` with ``c^0 = delta_0``."""
    if k < 0:
        raise ValueError(f"convolution power must be nonnegative, got {k}")
    out = delta(0)
    for _ in range(k):
        out = conv(c, out)
    return out


def reflect(c: CoeffSeq) -> CoeffSeq:
    """Reflection-conjugation: ``result_k = conj(c_{-k})``."""
    if not c.values.size:
        return CoeffSeq()
    return CoeffSeq.from_dense(-c.hi, c.values[::-1].conj())
