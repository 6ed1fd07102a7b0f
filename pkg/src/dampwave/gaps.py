"""Eigenvalue gaps: gap quotients, exact lattice bounds and Diophantine witnesses.

For a box with ``xi = L_1^2 / L_2^2`` the rescaled eigenvalues are
``mu_n = n_1^2 + xi n_2^2``. A rational ``xi = p/q`` forces every nonzero
gap ``|mu_n - mu_m|`` to be at least ``1/q``; an irrational ``xi`` lets gaps
collapse, which is exhibited by explicit witness pairs built from
continued-fraction convergents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import NamedTuple, Sequence

import mpmath
import numpy as np

from .envelope import power_envelope
from .errors import InsufficientData, InvalidArgument, NumericalFailure, ResourceLimit
from .spectral import RectangleDomain, Spectrum

WITNESS_DPS = 60


# ---------------------------------------------------------------------------
# gap quotient and gamma_1
# ---------------------------------------------------------------------------


def _quotient(lm1, l, lp1):
    return lm1 / (l - lm1) + lp1 / (lp1 - l)


def gap_quotient(spectrum: Spectrum, k: int, exact: bool = False):
    """``lam_{k-1}/(lam_k - lam_{k-1}) + lam_{k+1}/(lam_{k+1} - lam_k)`` with ``lam_0 = 0``.

    The quotient is scale invariant, so for spectra carrying exact values it
    is evaluated in rational arithmetic; ``exact=True`` returns the Fraction.
    """
    if not 1 <= k <= len(spectrum) - 1:
        raise InvalidArgument(f"gap quotient needs 1 <= k <= {len(spectrum) - 1}, got {k}")
    if spectrum.is_exact:
        lm1 = spectrum.entry(k - 1).exact if k > 1 else Fraction(0)
        q = _quotient(lm1, spectrum.entry(k).exact, spectrum.entry(k + 1).exact)
        return q if exact else float(q)
    if exact:
        raise InvalidArgument("exact quotient needs a spectrum with exact eigenvalues")
    lam = spectrum.eigenvalues
    lm1 = lam[k - 2] if k > 1 else 0.0
    return float(_quotient(lm1, lam[k - 1], lam[k]))


def gap_quotients(spectrum: Spectrum) -> np.ndarray:
    """All quotients for k = 1 .. len(spectrum) - 1."""
    if len(spectrum) < 2:
        raise InsufficientData("gap quotients need two eigenvalues")
    if spectrum.is_exact:
        v = [Fraction(0)] + spectrum.exact_values()
        return np.array([float(_quotient(v[i - 1], v[i], v[i + 1])) for i in range(1, len(v) - 1)])
    lam = np.concatenate(([0.0], spectrum.eigenvalues))
    return _quotient(lam[:-2], lam[1:-1], lam[2:])


@dataclass(frozen=True, eq=False)
class GapReport:
    k: np.ndarray
    lam: np.ndarray
    gap: np.ndarray
    quotient: np.ndarray
    gamma1: float
    c0: float
    lambda_star: float
    lambda_star_k: int
    raw_slope: float

    def bound(self) -> np.ndarray:
        return self.c0 * self.lam**self.gamma1

    def rows(self) -> list[tuple]:
        return [(int(k), float(l), float(g), float(q), float(b))
                for k, l, g, q, b in zip(self.k, self.lam, self.gap, self.quotient, self.bound())]


def fit_gamma1(spectrum: Spectrum, min_points: int = 20, window: float = 0.5) -> GapReport:
    """Envelope fit ``G_k <= c0 * lam_k**gamma1`` with ``gamma1`` clamped at 0."""
    if len(spectrum) < min_points + 1:
        raise InsufficientData(f"need at least {min_points + 1} distinct eigenvalues")
    lam_all = spectrum.eigenvalues
    quot = gap_quotients(spectrum)
    lam = lam_all[:-1]
    slope, c0 = power_envelope(lam, quot, min_points=min_points, window=window)
    gamma1 = slope
    if slope < 0:
        gamma1, c0 = 0.0, float(np.max(quot))
    ratios = lam_all[:-1] / lam_all[1:]
    i = int(np.argmin(ratios))
    return GapReport(np.arange(1, len(lam) + 1), lam, np.diff(lam_all), quot, float(gamma1), float(c0),
                     float(ratios[i]), i + 1, float(slope))


# ---------------------------------------------------------------------------
# rational ratios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalRatio:
    p: int
    q: int

    def __post_init__(self):
        if not (isinstance(self.p, (int, np.integer)) and isinstance(self.q, (int, np.integer))):
            raise InvalidArgument("p and q must be integers")
        if self.p < 1 or self.q < 1:
            raise InvalidArgument("p and q must be positive")
        if math.gcd(int(self.p), int(self.q)) != 1:
            raise InvalidArgument(f"{self.p}/{self.q} is not in lowest terms")

    @classmethod
    def from_fraction(cls, value) -> "RationalRatio":
        f = Fraction(value)
        return cls(f.numerator, f.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


class GapBound(NamedTuple):
    bound: Fraction
    attained: Fraction


def lattice_values(ratio: RationalRatio, search_cap: int) -> np.ndarray:
    """Sorted distinct ``q * mu_n = q n_1^2 + p n_2^2`` for ``1 <= n_i <= search_cap`` (exact integers)."""
    n2 = np.arange(1, search_cap + 1, dtype=np.int64) ** 2
    top = (ratio.p + ratio.q) * int(search_cap) ** 2
    if top >= 2**62:
        raise ResourceLimit("lattice values exceed 64-bit integers")
    return np.unique((ratio.q * n2[:, None] + ratio.p * n2[None, :]).ravel())


def rational_gap_bound(ratio: RationalRatio, search_cap: int) -> GapBound:
    """The bound ``1/q`` and the smallest positive gap found by exhaustive search."""
    if search_cap < 4:
        raise InvalidArgument("search_cap must be >= 4")
    vals = lattice_values(ratio, search_cap)
    attained = Fraction(int(np.min(np.diff(vals))), ratio.q)
    return GapBound(Fraction(1, ratio.q), attained)


def multi_d_gap_bound(ratios: Sequence[RationalRatio], max_bits: int = 63) -> Fraction:
    """``1 / lcm(q_2, ..., q_N)`` for ``mu_n = n_1^2 + sum_j (p_j/q_j) n_j^2``."""
    if len(ratios) < 2:
        raise InvalidArgument("need at least two ratios (N >= 3)")
    q = reduce(math.lcm, (int(r.q) for r in ratios), 1)
    if q.bit_length() > max_bits:
        raise ResourceLimit(f"lcm of denominators needs {q.bit_length()} bits")
    return Fraction(1, q)


# ---------------------------------------------------------------------------
# irrational witnesses
# ---------------------------------------------------------------------------


def convergents(xi, depth: int = 200, dps: int = WITNESS_DPS) -> list[tuple[int, int]]:
    """Continued-fraction convergents ``(p, q)`` of ``xi``, evaluated with mpmath.

    The list stops early when ``xi`` is rational to the working precision.
    """
    out = []
    with mpmath.workdps(dps):
        x = mpmath.mpmathify(xi) if not callable(xi) else xi()
        h0, h1, k0, k1 = 0, 1, 1, 0
        floor_tol = mpmath.mpf(10) ** (-(dps - 10))
        for _ in range(depth):
            a = int(mpmath.floor(x))
            h0, h1 = h1, a * h1 + h0
            k0, k1 = k1, a * k1 + k0
            out.append((h1, k1))
            frac = x - a
            if frac < floor_tol:
                break
            x = 1 / frac
    return out


@dataclass(frozen=True)
class GapWitness:
    k: int
    j: int
    n: tuple[int, int]
    m: tuple[int, int]
    mu_n: float
    mu_m: float
    gap: float
    side: str
    # gap re-evaluated at extended precision, as a decimal string
    gap_extended: str


def _xi_value(xi, dps):
    with mpmath.workdps(dps):
        return +(xi() if callable(xi) else mpmath.mpmathify(xi))


def irrational_gap_witness(xi, epsilon: float, side: str = "above", depth: int = 200,
                           dps: int = WITNESS_DPS) -> GapWitness:
    """Pair of lattice points whose ``mu``-values differ by ``8|k - j xi|`` in ``(0, epsilon)``.

    ``side="above"`` scans convergents ``k/j > xi`` and returns
    ``n = (2k+1, 2j-1)``, ``m = (2k-1, 2j+1)``; ``side="below"`` scans
    convergents under ``xi`` with the roles of the two points exchanged;
    ``side="any"`` takes whichever qualifying convergent comes first.
    ``xi`` may be a number, a decimal string or a zero-argument callable
    returning an mpmath value at the working precision.
    """
    if side not in ("above", "below", "any"):
        raise InvalidArgument(f"unknown side {side!r}")
    if not epsilon > 0:
        raise InvalidArgument("epsilon must be positive")
    x = _xi_value(xi, dps)
    if not x > 0:
        raise InvalidArgument("xi must be positive")
    with mpmath.workdps(dps):
        target = mpmath.mpf(epsilon) / 8
        for k, j in convergents(xi, depth, dps):
            if k < 1 or j < 1:
                continue
            err = k - j * x
            if err > 0 and side in ("above", "any") and err < target:
                n, m, which = (2 * k + 1, 2 * j - 1), (2 * k - 1, 2 * j + 1), "above"
            elif err < 0 and side in ("below", "any") and -err < target:
                n, m, which = (2 * k - 1, 2 * j + 1), (2 * k + 1, 2 * j - 1), "below"
            else:
                continue
            mu_n = n[0] ** 2 + x * n[1] ** 2
            mu_m = m[0] ** 2 + x * m[1] ** 2
            gap = mu_n - mu_m
            if not 0 < gap < mpmath.mpf(epsilon):
                raise NumericalFailure(f"witness gap {gap} outside (0, {epsilon}) at {dps} digits")
            return GapWitness(k, j, n, m, float(mu_n), float(mu_m), float(gap), which,
                              mpmath.nstr(gap, dps - 10))
    raise ResourceLimit(f"no qualifying convergent within depth {depth}")


# ---------------------------------------------------------------------------
# Roth-type check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RothCheck:
    c0_empirical: float
    argmin_k: int | None
    flag: str
    subunit_gaps: int
    min_gap: float
    rational_bound: float | None = None


def roth_gap_check(spectrum: Spectrum, epsilon: float, min_entries: int = 50) -> RothCheck:
    """``min (lam_{k+1} - lam_k) lam_k^{1+epsilon}`` over gaps below 1.

    For exactly grouped (rational-ratio) spectra the check does not apply;
    the smallest gap is reported together with the lattice bound
    ``(pi/L_1)^2 / q``.
    """
    if len(spectrum) < 2:
        raise InsufficientData("Roth check needs at least two eigenvalues")
    if not isinstance(spectrum.domain, RectangleDomain):
        raise InvalidArgument("Roth check applies to rectangle spectra")
    if not epsilon > 0:
        raise InvalidArgument("epsilon must be positive")
    lam = spectrum.eigenvalues
    gaps = np.diff(lam)
    min_gap = float(gaps.min())
    if spectrum.grouping == "exact":
        bound = float(spectrum.scale)
        return RothCheck(math.inf, None, "rational: Roth check inapplicable", int(np.sum(gaps < 1)),
                         min_gap, bound)
    if len(spectrum) < min_entries:
        raise InsufficientData(f"Roth check needs at least {min_entries} eigenvalues")
    sub = np.nonzero(gaps < 1)[0]
    if len(sub) == 0:
        return RothCheck(math.inf, None, "no sub-unit gaps", 0, min_gap)
    vals = gaps[sub] * lam[sub] ** (1 + epsilon)
    i = int(np.argmin(vals))
    return RothCheck(float(vals[i]), int(sub[i]) + 1, "ok", len(sub), min_gap)
