"""Laurent moments of the potential and the shape's geometry coefficients.

For an expansion point ``nu`` the potential reads
``xi(z) = sum_{j>=1} lambda_j(nu) / (z - nu)^j``.  The moments are linked to
the velocity ``U = (Re w0, Im w0, omega)`` by

    Lambda_N(nu) = Theta_N(r - nu, alpha) G_N U

where ``Theta_N`` only depends on the position and ``G_N`` only on the shape.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import comb

from .rigid import Configuration, RigidVelocity
from .flow import zeta_coeffs
from .shape import ShapeSpec

__all__ = [
    "MomentTable",
    "GeometryCoeffs",
    "geometry_coeffs",
    "geometry_coeffs_bruteforce",
    "moments_closed_form",
    "moments_contour",
    "theta_matrix",
    "invert_moments",
    "transported_moments",
    "gn_apply",
    "gn_matrix",
    "singularity_radius",
    "localize_chebyshev",
    "pascal_exponential",
    "binomial_matrix",
    "transport",
    "TableProvider",
    "ClosedFormProvider",
    "StealthPotentialError",
]


class StealthPotentialError(ValueError):
    """The potential vanishes identically; nothing can be localised."""


@dataclass(frozen=True)
class MomentTable:
    """Moments ``lambdas[j-1] = lambda_j(nu)``, ``j = 1..N``."""

    nu: complex
    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=complex)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("lambdas must be a nonempty vector")
        lam.setflags(write=False)
        object.__setattr__(self, "nu", complex(self.nu))
        object.__setattr__(self, "lambdas", lam)

    @property
    def N(self) -> int:
        return self.lambdas.size

    def __getitem__(self, j: int) -> complex:
        """1-based access, ``table[j] = lambda_j``."""
        if j < 1:
            raise IndexError("moments are indexed from 1")
        return complex(self.lambdas[j - 1])

    def scale(self) -> float:
        return float(np.max(np.abs(self.lambdas)))

    def to_json(self) -> dict:
        return {
            "nu": [self.nu.real, self.nu.imag],
            "lambdas": [[v.real, v.imag] for v in self.lambdas.tolist()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MomentTable":
        return cls(complex(*obj["nu"]), [complex(*p) for p in obj["lambdas"]])


@dataclass(frozen=True)
class GeometryCoeffs:
    """Vectors ``A[k-1] = cal-A_k`` etc. for ``k = 1..N``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C"):
            v = np.array(getattr(self, name), dtype=complex)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if not (self.A.shape == self.B.shape == self.C.shape):
            raise ValueError("A, B, C must have equal length")

    @property
    def N(self) -> int:
        return self.A.size

    def truncate(self, N: int) -> "GeometryCoeffs":
        if N > self.N:
            raise ValueError(f"only {self.N} coefficients available")
        return GeometryCoeffs(self.A[:N], self.B[:N], self.C[:N])


# -- geometry coefficients -----------------------------------------------

def _d_sequence(shape: ShapeSpec, vel: RigidVelocity) -> tuple[int, np.ndarray]:
    """``d_k = (k+1) zeta_{k+1}`` for ``k <= -1``, returned as (lo, values up to -2)."""
    z = zeta_coeffs(shape, vel).zeta
    ks = np.arange(z.lo, 0)  # zeta indices lo..-1
    vals = ks * z.window(z.lo, -1)
    # d_{k} with k = zeta index - 1
    return z.lo - 1, vals


def geometry_coeffs(shape: ShapeSpec, N: int) -> GeometryCoeffs:
    """Geometry coefficients from ``(d * c^k)_{-1}`` at three unit velocities.

    ``(d * c^k)_{-1} = -A_k conj(w0) + B_k w0 + i omega C_k`` is real-linear in
    the velocity, so evaluating it at ``w0 = 1``, ``w0 = i`` and ``omega = 1``
    separates the three sequences.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    basis = (RigidVelocity(0.0, 1.0), RigidVelocity(0.0, 1j), RigidVelocity(1.0, 0j))
    ds = [_d_sequence(shape, v) for v in basis]
    lo = min(d[0] for d in ds)
    D = np.zeros((3, -1 - lo), dtype=complex)  # d indices lo..-2
    for i, (dlo, vals) in enumerate(ds):
        D[i, dlo - lo : dlo - lo + vals.size] = vals
    # (d*c^k)_{-1} = sum_j d_j (c^k)_{-1-j}; j = lo..-2 -> (c^k) indices -1-lo..1
    c = shape.seq
    cvals, clo = c.values, c.lo
    pw = np.array([1.0 + 0j])  # c^0 on window [plo, phi]
    plo = 0
    vals = np.zeros((3, N), dtype=complex)
    for k in range(1, N + 1):
        pw = np.convolve(cvals, pw)
        plo = plo + clo
        # later powers only need indices >= 1 - (N - k)
        keep = 1 - (N - k)
        if plo < keep:
            pw = pw[keep - plo :]
            plo = keep
        phi = plo + pw.size - 1
        # gather (c^k)_{-1-j} for j = -2 .. lo  (index 1 .. -1-lo)
        idx = np.arange(1, -lo)  # c^k indices 1..-1-lo
        seg = np.zeros(idx.size, dtype=complex)
        a, b = max(1, plo), min(-1 - lo, phi)
        if a <= b:
            seg[a - 1 : b] = pw[a - plo : b - plo + 1]
        # j = -1 - idx, D column = j - lo
        cols = -1 - idx - lo
        vals[:, k - 1] = D[:, cols] @ seg
    v1, v2, v3 = vals
    A = (-v1 - 1j * v2) / 2.0
    B = (v1 - 1j * v2) / 2.0
    C = -1j * v3
    k = np.arange(1, N + 1)
    return GeometryCoeffs(-A / k, -B / k, -C / k)


def _multiset_sums(values: dict[int, complex], count: int) -> dict[int, complex]:
    """``S(t) = sum over (i_1..i_count) in supp^count with sum t of prod c_{i}``.

    Enumerates multisets and weights each by its number of orderings.
    """
    out: dict[int, complex] = defaultdict(complex)
    if count == 0:
        out[0] = 1.0
        return out
    support = sorted(values)
    fact = math.factorial(count)
    for combo in itertools.combinations_with_replacement(support, count):
        mult = fact
        prod = 1.0 + 0j
        for idx, grp in itertools.groupby(combo):
            n = len(list(grp))
            mult //= math.factorial(n)
            prod *= values[idx] ** n
        out[sum(combo)] += mult * prod
    return out


def geometry_coeffs_bruteforce(
    shape: ShapeSpec, N: int, c_constraint: str = "le-1"
) -> GeometryCoeffs:
    """Direct evaluation of the constrained index sums for ``A_k, B_k, C_k``.

    ``c_constraint`` selects the summation range of ``C_k``: ``"le-1"``
    (``i1 + i2 <= -1``) or ``"le0"`` (``i1 + i2 <= 0``); both give the same
    value because the extra terms carry the weight ``i1 + i2 = 0``.
    """
    if N > 10 or shape.M > 8:
        raise ValueError("brute-force enumeration limited to N <= 10 and M <= 8")
    if c_constraint not in ("le-1", "le0"):
        raise ValueError("c_constraint must be 'le-1' or 'le0'")
    bound = -1 if c_constraint == "le-1" else 0
    coef = {k: shape.coeff(k) for k in [1] + [-(j + 1) for j in range(shape.M)]}
    coef = {k: v for k, v in coef.items() if v != 0}
    cbar_neg = {-k: v.conjugate() for k, v in coef.items()}  # i -> conj(c_{-i})
    A = np.zeros(N, dtype=complex)
    B = np.zeros(N, dtype=complex)
    C = np.zeros(N, dtype=complex)
    for k in range(1, N + 1):
        S = _multiset_sums(coef, k)
        a = b = cc = 0j
        for i1, v in coef.items():
            if i1 <= -1:
                a += i1 * v * S.get(-i1, 0)
        for i1, v in cbar_neg.items():
            if i1 <= -1:
                b += i1 * v * S.get(-i1, 0)
        for i1, v1 in cbar_neg.items():
            for i2, v2 in coef.items():
                s = i1 + i2
                if s <= bound:
                    cc += s * v1 * v2 * S.get(-s, 0)
        A[k - 1], B[k - 1], C[k - 1] = a, b, cc
    k = np.arange(1, N + 1)
    return GeometryCoeffs(-A / k, -B / k, -C / k)


# -- operators -------------------------------------------------------------

def binomial_matrix(N: int) -> np.ndarray:
    """Lower-triangular ``P[n-1, k-1] = binom(n-1, k-1)`` (float)."""
    n = np.arange(N)
    return np.tril(comb(n[:, None], n[None, :], exact=False))


def pascal_exponential(N: int) -> list[list[int]]:
    """``exp(S_N D_N)`` by its finite power series in exact arithmetic.

    ``S_N D_N`` is nilpotent, so the series stops after ``N`` terms.  Raises if
    an entry is not an integer.
    """
    L = [[Fraction(0)] * N for _ in range(N)]
    for n in range(1, N):
        L[n][n - 1] = Fraction(n)  # (S D Z)_{n+1} = n Z_n (1-based)
    total = [[Fraction(int(i == j)) for j in range(N)] for i in range(N)]
    term = [row[:] for row in total]
    for p in range(1, N):
        term = [
            [sum(term[i][m] * L[m][j] for m in range(N)) / p for j in range(N)]
            for i in range(N)
        ]
        for i in range(N):
            for j in range(N):
                total[i][j] += term[i][j]
    out = []
    for row in total:
        if any(v.denominator != 1 for v in row):
            raise ArithmeticError("non-integer entry in exp(S D)")
        out.append([int(v) for v in row])
    return out


def theta_matrix(u: complex, alpha: float, N: int) -> np.ndarray:
    """``Theta_N(u, alpha)[n-1, k-1] = binom(n-1, k-1) e^{i k alpha} u^{n-k}``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(1, N + 1)
    P = binomial_matrix(N)
    expo = n[:, None] - n[None, :]
    upow = np.where(expo >= 0, complex(u) ** np.maximum(expo, 0), 0)
    return P * upow * np.exp(1j * alpha * n)[None, :]


def gn_matrix(geom: GeometryCoeffs) -> np.ndarray:
    """Complex ``N x 3`` matrix of the real-linear map ``G_N``."""
    return np.column_stack([-geom.A + geom.B, 1j * (geom.A + geom.B), 1j * geom.C])


def gn_apply(geom: GeometryCoeffs, U: Sequence[float]) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.shape != (3,):
        raise ValueError("U must be a real 3-vector")
    return gn_matrix(geom) @ U


def _transport_vector(lam: np.ndarray, shift: complex) -> np.ndarray:
    """``out_n = sum_k binom(n-1, k-1) shift^{n-k} lam_k``."""
    N = lam.size
    n = np.arange(N)
    expo = n[:, None] - n[None, :]
    powers = np.where(expo >= 0, complex(shift) ** np.maximum(expo, 0), 0)
    return (binomial_matrix(N) * powers) @ lam


def moments_closed_form(
    shape: ShapeSpec,
    cfg: Configuration,
    nu: complex,
    N: int,
    geom: GeometryCoeffs | None = None,
) -> MomentTable:
    """``lambda_n(nu) = sum_k binom(n-1,k-1) e^{ik alpha} (r-nu)^{n-k} m_k``."""
    if geom is None or geom.N < N:
        geom = geometry_coeffs(shape, N)
    geom = geom.truncate(N)
    m = gn_apply(geom, cfg.velocity.as_vector())
    lam = theta_matrix(cfg.r - nu, cfg.alpha, N) @ m
    return MomentTable(nu, lam)


def transported_moments(table: MomentTable, r: complex) -> np.ndarray:
    """``q_n = sum_k binom(n-1,k-1) (nu - r)^{n-k} lambda_k(nu)`` = ``lambda_n(r)``."""
    return _transport_vector(table.lambdas, table.nu - r)


def invert_moments(table: MomentTable, r: complex, alpha: float) -> np.ndarray:
    """``Theta_N(r - nu, alpha)^{-1} Lambda_N``, in closed form."""
    q = transported_moments(table, r)
    n = np.arange(1, table.N + 1)
    return np.exp(-1j * n * alpha) * q


def transport(table: MomentTable, nu: complex) -> MomentTable:
    """Re-expand the first ``N`` moments about another point (exact)."""
    return MomentTable(nu, _transport_vector(table.lambdas, table.nu - nu))


# -- contour route -----------------------------------------------------------

def moments_contour(
    potential: Callable[[np.ndarray], np.ndarray],
    nu: complex,
    N: int,
    radius: float,
    Q: int | None = None,
    center: complex | None = None,
) -> MomentTable:
    """Moments by trapezoidal quadrature of ``(1/2 pi i) oint xi(z)(z-nu)^{n-1} dz``.

    The circle ``|z - center| = radius`` (``center`` defaults to ``nu``) must
    enclose the solid.  Since ``(z - nu)^{n-1}`` is entire, ``nu`` itself need
    not lie inside the circle.
    """
    if Q is None:
        Q = max(256, 8 * N)
    if Q < 16:
        raise ValueError("need at least 16 quadrature nodes")
    c0 = complex(nu if center is None else center)
    e = np.exp(2j * np.pi * np.arange(Q) / Q)
    z = c0 + radius * e
    xi = np.asarray(potential(z), dtype=complex)
    # dz = i radius e dtheta; 1/(2 pi i) * 2 pi / Q * i radius e
    weights = xi * radius * e / Q
    zn = z - nu
    lam = np.empty(N, dtype=complex)
    pw = np.ones(Q, dtype=complex)
    for n in range(N):
        lam[n] = np.sum(weights * pw)
        pw = pw * zn
    return MomentTable(nu, lam)


# -- singularities -----------------------------------------------------------

def _envelope_fit(j, y, beta_range=(-1.5, 0.0)):
    # log|lambda_j| ~ j log R + beta log j + const, beta clamped to the
    # range spanned by poles (0) and square-root branch points (-3/2)
    X = np.column_stack([j, np.log(j), np.ones(j.size)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    if not beta_range[0] <= coef[1] <= beta_range[1]:
        beta = min(max(coef[1], beta_range[0]), beta_range[1])
        X2 = np.column_stack([j, np.ones(j.size)])
        c2, *_ = np.linalg.lstsq(X2, y - beta * np.log(j), rcond=None)
        coef = np.array([c2[0], beta, c2[1]])
    return coef


def singularity_radius(
    table: MomentTable,
    j_min: int | None = None,
    zero_tol: float = 1e-14,
    method: str = "fit",
) -> float:
    """Estimate ``R(nu) = limsup |lambda_j|^{1/j}`` from ``j_min..N``.

    ``method="max"`` is the plain root test, ``max |lambda_j|^{1/j}``.  It
    converges slowly: a square-root branch point contributes a
    ``j^{-3/2}`` prefactor and at ``N = 40`` the estimate sits roughly 10%
    low.  ``method="fit"`` (default) fits the upper envelope of
    ``log|lambda_j|`` with a linear term plus a ``log j`` correction and
    discards dips caused by interfering singularities at equal distance.
    Entries below ``zero_tol`` are skipped; returns 0 when all vanish.
    """
    if method not in ("fit", "max"):
        raise ValueError(f"unknown method {method!r}")
    N = table.N
    if j_min is None:
        j_min = max(1, N // 2)
    if N < j_min + 8:
        raise ValueError(f"need N >= j_min + 8 (N={N}, j_min={j_min})")
    j = np.arange(j_min, N + 1)
    mag = np.abs(table.lambdas[j_min - 1 :])
    keep = mag > zero_tol
    if not keep.any():
        return 0.0
    j, y = j[keep], np.log(mag[keep])
    root = float(np.exp(y / j).max())
    if method == "max" or j.size < 4:
        return root
    sel = np.ones(j.size, dtype=bool)
    for _ in range(20):
        coef = _envelope_fit(j[sel], y[sel])
        res = y - (coef[0] * j + coef[1] * np.log(j) + coef[2])
        new = res > -0.25
        if new.sum() < 4 or np.array_equal(new, sel):
            break
        sel = new
    return float(np.exp(coef[0]))


def localize_chebyshev(
    moment_provider: Callable[[complex], MomentTable],
    search_box: tuple[float, float, float, float],
    grid: int = 41,
    j_min: int | None = None,
) -> complex:
    """Grid minimiser of the singularity radius over ``(xmin, xmax, ymin, ymax)``."""
    xmin, xmax, ymin, ymax = search_box
    xs = np.linspace(xmin, xmax, grid)
    ys = np.linspace(ymin, ymax, grid)
    best, best_nu = math.inf, None
    any_nonzero = False
    for y in ys:
        for x in xs:
            nu = complex(x, y)
            R = singularity_radius(moment_provider(nu), j_min)
            if R > 0:
                any_nonzero = True
            if R < best:
                best, best_nu = R, nu
    if not any_nonzero:
        raise StealthPotentialError("all singularity radii vanish: the potential is identically zero")
    return best_nu


# -- providers -----------------------------------------------------------------

@dataclass
class ClosedFormProvider:
    """``nu -> MomentTable`` from the exact forward model (synthetic data)."""

    shape: ShapeSpec
    cfg: Configuration
    N: int
    geom: GeometryCoeffs | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.geom is None or self.geom.N < self.N:
            self.geom = geometry_coeffs(self.shape, self.N)

    def __call__(self, nu: complex) -> MomentTable:
        return moments_closed_form(self.shape, self.cfg, nu, self.N, self.geom)


class TableProvider:
    """``nu -> MomentTable`` built from measured tables by exact re-expansion.

    The table whose expansion point is closest to the request is transported.
    """

    def __init__(self, tables: Iterable[MomentTable]):
        self.tables = list(tables)
        if not self.tables:
            raise ValueError("need at least one moment table")
        self.N = min(t.N for t in self.tables)

    def __call__(self, nu: complex) -> MomentTable:
        nu = complex(nu)
        src = min(self.tables, key=lambda t: abs(t.nu - nu))
        if src.nu == nu:
            return MomentTable(nu, src.lambdas[: self.N])
        lam = src.lambdas[: self.N]
        return transport(MomentTable(src.nu, lam), nu)
