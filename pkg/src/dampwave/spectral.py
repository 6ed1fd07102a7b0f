"""Spectra of the stiffness operator L for the supported scenario families.

Four builders are provided:

* ``build_spectrum_1d_constant``: Dirichlet Laplacian on an interval.
* ``build_spectrum_1d_piecewise``: two-piece constant coefficient, solved by
  interface matching (closed form for the half/half, 1|4 example).
* ``build_spectrum_sturm_liouville``: general ``-(a u')' + q u = lam rho u``
  by a flux-form finite-difference discretisation.
* ``build_spectrum_rectangle``: Dirichlet Laplacian on a box, grouped into
  distinct eigenvalues with their lattice index sets.

Every eigenfunction is represented by a mode object exposing ``value`` and
``gradient`` so that damping forms can be integrated against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import (
    InsufficientData,
    InvalidArgument,
    NumericalFailure,
    ResourceLimit,
    SpectralPositivityError,
    Unsupported,
)

TOL_GROUP = 1e-9
RATIO_MAX_DENOMINATOR = 10_000
RATIO_REL_TOL = 1e-12


# ---------------------------------------------------------------------------
# domains and coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain1D:
    length: float = math.pi

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidArgument("interval length must be positive")

    @property
    def dim(self) -> int:
        return 1

    @property
    def lengths(self) -> tuple[float]:
        return (float(self.length),)


@dataclass(frozen=True)
class RectangleDomain:
    lengths: tuple[float, ...]
    # optional exact values of L_1^2 / L_j^2 for j >= 2
    ratios: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if len(lengths) < 2:
            raise InvalidArgument("a rectangle needs at least two side lengths")
        if any(not v > 0 for v in lengths):
            raise InvalidArgument("side lengths must be positive")
        if self.ratios is not None:
            ratios = tuple(Fraction(r) for r in self.ratios)
            if len(ratios) != len(lengths) - 1:
                raise InvalidArgument("need one exact ratio per side after the first")
            object.__setattr__(self, "ratios", ratios)

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def area(self) -> float:
        return float(np.prod(self.lengths))

    def squared_ratios(self) -> list[Fraction | None]:
        """``L_1^2 / L_j^2`` for j >= 2, as a Fraction when it is recognisably rational."""
        if self.ratios is not None:
            return list(self.ratios)
        out = []
        l1 = self.lengths[0]
        for lj in self.lengths[1:]:
            r = (l1 / lj) ** 2
            f = Fraction(r).limit_denominator(RATIO_MAX_DENOMINATOR)
            out.append(f if abs(float(f) - r) <= RATIO_REL_TOL * r else None)
        return out


@dataclass(frozen=True)
class Coefficient1D:
    """Coefficients of ``-(a u')' + q u = lam rho u`` on an interval.

    ``kind`` is ``"constant"``, ``"piecewise"`` or ``"smooth"``. Piecewise data
    describe ``a`` only (``rho = 1``, ``q = 0``); smooth data carry callables.
    """

    kind: str
    value: float = 1.0
    breakpoints: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    a: Callable | None = None
    rho: Callable | None = None
    q: Callable | None = None

    @classmethod
    def constant(cls, value: float = 1.0) -> "Coefficient1D":
        if not value > 0:
            raise InvalidArgument("coefficient must be positive")
        return cls("constant", value=float(value))

    @classmethod
    def piecewise(cls, breakpoints: Sequence[float], values: Sequence[float]) -> "Coefficient1D":
        bp = tuple(float(b) for b in breakpoints)
        vals = tuple(float(v) for v in values)
        if len(vals) != len(bp) + 1:
            raise InvalidArgument("need one more value than breakpoints")
        if any(v <= 0 for v in vals):
            raise InvalidArgument("coefficient values must be positive")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise InvalidArgument("breakpoints must be strictly increasing")
        return cls("piecewise", breakpoints=bp, values=vals)

    @classmethod
    def smooth(cls, a: Callable, rho: Callable | None = None, q: Callable | None = None) -> "Coefficient1D":
        return cls("smooth", a=a, rho=rho, q=q)

    def functions(self) -> tuple[Callable, Callable, Callable]:
        """Vectorised ``(a, rho, q)``."""
        one = lambda x: np.ones_like(np.asarray(x, dtype=float))
        zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
        if self.kind == "constant":
            return (lambda x: self.value * one(x)), one, zero
        if self.kind == "piecewise":
            bp, vals = np.array(self.breakpoints), np.array(self.values)
            return (lambda x: vals[np.searchsorted(bp, np.asarray(x, dtype=float), side="right")]), one, zero
        wrap = lambda f, default: default if f is None else (lambda x: f(np.asarray(x, dtype=float)) * one(x))
        return wrap(self.a, one), wrap(self.rho, one), wrap(self.q, zero)

    def validate(self, domain: Domain1D, floor: float = 1e-12, samples: int = 2001) -> None:
        if self.kind == "piecewise" and self.breakpoints:
            if self.breakpoints[0] <= 0 or self.breakpoints[-1] >= domain.length:
                raise InvalidArgument("breakpoints must lie inside the interval")
        a, rho, _ = self.functions()
        x = np.linspace(0.0, domain.length, samples)
        if np.min(a(x)) < floor or np.min(rho(x)) < floor:
            raise InvalidArgument("a and rho must be bounded below by a positive constant")


# ---------------------------------------------------------------------------
# eigenfunction descriptors
# ---------------------------------------------------------------------------


def _points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if dim == 1:
        return x[..., None] if (x.ndim == 0 or x.shape[-1:] != (1,)) else x
    if x.shape[-1] != dim:
        raise InvalidArgument(f"expected points with {dim} coordinates")
    return x


@dataclass(frozen=True)
class SineMode:
    """Product of normalised Dirichlet sines ``prod_j sqrt(2/L_j) sin(n_j pi x_j / L_j)``."""

    n: tuple[int, ...]
    lengths: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.array(self.n, dtype=float) * np.pi / np.array(self.lengths)

    def _factors(self, x):
        p = _points(x, self.dim)
        k = self.wavenumbers
        amp = np.sqrt(2.0 / np.array(self.lengths))
        return amp * np.sin(k * p), amp * k * np.cos(k * p)

    def value(self, x) -> np.ndarray:
        s, _ = self._factors(x)
        out = np.prod(s, axis=-1)
        return out

    def gradient(self, x) -> np.ndarray:
        s, c = self._factors(x)
        grads = []
        for j in range(self.dim):
            g = c[..., j].copy()
            for i in range(self.dim):
                if i != j:
                    g = g * s[..., i]
            grads.append(g)
        g = np.stack(grads, axis=-1)
        return g[..., 0] if self.dim == 1 else g


@dataclass(frozen=True)
class PiecewiseMode:
    """Eigenfunction of a two-piece constant-coefficient problem on (0, L).

    ``phi = A sin(kappa_1 x)`` on (0, b) and ``C sin(kappa_2 (L - x))`` on (b, L)
    with ``kappa_i = sqrt(mu / a_i)``; ``A`` is fixed by normalisation in the
    inner product weighted by ``weights`` (1 for the divergence form, 1/a_i for
    the non-divergence form).
    """

    mu: float
    breakpoint: float
    length: float
    a_left: float
    a_right: float
    ratio: float  # C / A
    weights: tuple[float, float] = (1.0, 1.0)
    tag: str = ""

    @property
    def dim(self) -> int:
        return 1

    @property
    def kappas(self) -> tuple[float, float]:
        s = math.sqrt(self.mu)
        return s / math.sqrt(self.a_left), s / math.sqrt(self.a_right)

    @property
    def amplitude(self) -> float:
        k1, k2 = self.kappas
        b, d = self.breakpoint, self.length - self.breakpoint
        sq = lambda k, h: h / 2 - math.sin(2 * k * h) / (4 * k)
        norm2 = self.weights[0] * sq(k1, b) + self.weights[1] * self.ratio**2 * sq(k2, d)
        return 1.0 / math.sqrt(norm2)

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k1, k2 = self.kappas
        left = np.sin(k1 * x)
        right = self.ratio * np.sin(k2 * (self.length - x))
        return self.amplitude * np.where(x < self.breakpoint, left, right)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k1, k2 = self.kappas
        left = k1 * np.cos(k1 * x)
        right = -self.ratio * k2 * np.cos(k2 * (self.length - x))
        return self.amplitude * np.where(x < self.breakpoint, left, right)


@dataclass(frozen=True, eq=False)
class GridMode:
    """Eigenfunction known through samples on a grid (linear interpolation)."""

    x: np.ndarray
    samples: np.ndarray
    derivative: np.ndarray

    @property
    def dim(self) -> int:
        return 1

    def value(self, x) -> np.ndarray:
        return np.interp(x, self.x, self.samples)

    def gradient(self, x) -> np.ndarray:
        return np.interp(x, self.x, self.derivative)

    def points_per_oscillation(self) -> float:
        crossings = np.count_nonzero(np.diff(np.signbit(self.samples[1:-1])))
        return 2.0 * (len(self.x) - 1) / (crossings + 1)


# ---------------------------------------------------------------------------
# spectrum container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralEntry:
    index: int
    value: float
    modes: tuple
    index_set: tuple[tuple[int, ...], ...] | None = None
    exact: Fraction | None = None
    tag: str | None = None

    @property
    def multiplicity(self) -> int:
        return len(self.modes)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Distinct eigenvalues in increasing order with their eigenspaces.

    ``grouping`` records how equal eigenvalues were identified: ``"simple"``
    (1D, no grouping needed), ``"exact"`` (integer arithmetic) or ``"float"``
    (tolerance ``tol_group * lambda``). When ``grouping == "exact"`` or the
    family is closed-form, ``entry.exact * scale`` reproduces ``entry.value``.
    """

    entries: tuple[SpectralEntry, ...]
    family: str
    domain: object
    grouping: str = "simple"
    scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.entries:
            raise InvalidArgument("empty spectrum")
        vals = np.array([e.value for e in self.entries])
        if vals[0] <= 0:
            raise SpectralPositivityError(f"least eigenvalue {vals[0]} is not positive")
        if np.any(np.diff(vals) <= 0):
            raise NumericalFailure("eigenvalues are not strictly increasing")

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        out = np.array([e.value for e in self.entries])
        out.flags.writeable = False
        return out

    @cached_property
    def multiplicities(self) -> np.ndarray:
        out = np.array([e.multiplicity for e in self.entries])
        out.flags.writeable = False
        return out

    @cached_property
    def mode_offsets(self) -> np.ndarray:
        """``mode_offsets[k-1]`` is the flat index of the first mode of eigenspace ``k``."""
        out = np.concatenate(([0], np.cumsum(self.multiplicities)))
        out.flags.writeable = False
        return out

    @property
    def is_exact(self) -> bool:
        return all(e.exact is not None for e in self.entries)

    def exact_values(self) -> list[Fraction]:
        if not self.is_exact:
            raise InvalidArgument("spectrum carries no exact eigenvalues")
        return [e.exact for e in self.entries]

    @property
    def lambda_star(self) -> float:
        if len(self) < 2:
            raise InsufficientData("lambda_star needs two eigenvalues")
        lam = self.eigenvalues
        return float(np.min(lam[:-1] / lam[1:]))

    def entry(self, k: int) -> SpectralEntry:
        """Eigenspace number ``k`` (1-based)."""
        if not 1 <= k <= len(self):
            raise InvalidArgument(f"k={k} outside 1..{len(self)}")
        return self.entries[k - 1]

    @cached_property
    def modes(self) -> tuple:
        return tuple(m for e in self.entries for m in e.modes)

    @property
    def mode_eigenvalues(self) -> np.ndarray:
        return np.repeat(self.eigenvalues, self.multiplicities)

    @property
    def mode_count(self) -> int:
        return int(self.multiplicities.sum())

    def head(self, count: int) -> "Spectrum":
        """The first ``count`` eigenspaces."""
        if count < 1:
            raise InvalidArgument("count must be >= 1")
        return Spectrum(self.entries[:count], self.family, self.domain, self.grouping, self.scale, dict(self.meta))

    def head_modes(self, max_modes: int) -> "Spectrum":
        """Largest prefix of whole eigenspaces holding at most ``max_modes`` modes."""
        cum = np.cumsum(self.multiplicities)
        count = int(np.searchsorted(cum, max_modes, side="right"))
        if count == 0:
            raise InvalidArgument("first eigenspace alone exceeds max_modes")
        return self.head(count)

    def records(self) -> list[tuple]:
        rows = []
        for e in self.entries:
            label = e.tag if e.tag is not None else (
                ";".join(",".join(map(str, n)) for n in e.index_set) if e.index_set else "")
            rows.append((e.index, e.value, e.multiplicity, label))
        return rows


def _renumber(entries: list[SpectralEntry]) -> tuple[SpectralEntry, ...]:
    return tuple(
        SpectralEntry(i + 1, e.value, e.modes, e.index_set, e.exact, e.tag) for i, e in enumerate(entries)
    )


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_spectrum_1d_constant(domain: Domain1D, k_max: int, a: float = 1.0) -> Spectrum:
    """Eigenpairs of ``-a u''`` with Dirichlet conditions: ``a (k pi / L)^2``."""
    if k_max < 1:
        raise InvalidArgument("k_max must be >= 1")
    if not a > 0:
        raise InvalidArgument("coefficient must be positive")
    scale = a * (math.pi / domain.length) ** 2
    entries = [
        SpectralEntry(k, scale * k * k, (SineMode((k,), domain.lengths),), exact=Fraction(k * k))
        for k in range(1, k_max + 1)
    ]
    return Spectrum(tuple(entries), "interval-constant", domain, "simple", scale)


def is_half_half_example(domain: Domain1D, coeff: Coefficient1D) -> bool:
    """True for a = 1 on (0, pi/2) and 4 on (pi/2, pi)."""
    return (
        coeff.kind == "piecewise"
        and len(coeff.breakpoints) == 1
        and math.isclose(domain.length, math.pi, rel_tol=1e-14)
        and math.isclose(coeff.breakpoints[0], math.pi / 2, rel_tol=1e-14)
        and coeff.values == (1.0, 4.0)
    )


def half_half_branches(mu_max: float, form: str = "divergence") -> list[tuple[float, str, float]]:
    """Closed-form eigenvalues of the 1|4 half/half problem below ``mu_max``.

    Returns ``(mu, tag, ratio)`` with ``ratio = C / A`` in the representation of
    :class:`PiecewiseMode`. The branch ``16 m^2`` is common to both forms; the
    second branch is ``16 (n + theta/pi)^2`` with ``tan(theta)^2 = 5`` for the
    divergence form ``-(a u')'`` and ``tan(theta)^2 = 2`` for ``-a u''``.
    """
    if form not in ("divergence", "nondivergence"):
        raise InvalidArgument(f"unknown form {form!r}")
    tan2 = 5.0 if form == "divergence" else 2.0
    theta = math.atan(math.sqrt(tan2))
    cos_theta = 1.0 / math.sqrt(1.0 + tan2)
    # branch-1 amplitude on the right piece, written as C sin(2m(pi - x))
    flux = 4.0 if form == "divergence" else 1.0
    out = []
    m = 1
    while 16 * m * m <= mu_max:
        out.append((16.0 * m * m, f"1,{m}", -2.0 * (-1) ** m / flux))
        m += 1
    n_hi = int(math.sqrt(mu_max / 16.0)) + 2
    for n in range(-n_hi, n_hi + 1):
        mu = 16.0 * (n + theta / math.pi) ** 2
        if mu <= mu_max:
            out.append((mu, f"2,{n}", (-1) ** n * 2.0 * cos_theta))
    out.sort()
    return out


def secular_function(s, b: float, length: float, a1: float, a2: float, form: str = "divergence"):
    """Interface-matching determinant at ``s = sqrt(mu)``; zeros are eigenvalues."""
    s = np.asarray(s, dtype=float)
    r1, r2 = math.sqrt(a1), math.sqrt(a2)
    k1, k2 = s / r1, s / r2
    d = length - b
    c1, c2 = (a1 / r1, a2 / r2) if form == "divergence" else (1.0 / r1, 1.0 / r2)
    return c1 * np.cos(k1 * b) * np.sin(k2 * d) + c2 * np.cos(k2 * d) * np.sin(k1 * b)


def _interface_ratio(mu: float, b: float, length: float, a1: float, a2: float, form: str) -> float:
    k1, k2 = math.sqrt(mu / a1), math.sqrt(mu / a2)
    d = length - b
    c1, c2 = (a1, a2) if form == "divergence" else (1.0, 1.0)
    s2 = math.sin(k2 * d)
    f2 = c2 * k2 * math.cos(k2 * d)
    # whichever matching condition is better conditioned
    if abs(s2) * k2 >= abs(f2) / max(c2, 1.0) * 0.5 and abs(s2) > 1e-8:
        return math.sin(k1 * b) / s2
    return -c1 * k1 * math.cos(k1 * b) / f2


def build_spectrum_1d_piecewise(domain: Domain1D, coeff: Coefficient1D, k_max: int,
                                form: str = "divergence", scan_refine: int = 32) -> Spectrum:
    """Two-piece constant coefficient spectrum by interface matching.

    ``form="divergence"`` solves ``-(a u')' = mu u`` (``u`` and ``a u'``
    continuous). ``form="nondivergence"`` solves ``-a u'' = mu u`` (``u`` and
    ``u'`` continuous), which is self-adjoint in ``L^2(dx / a)``.
    """
    if k_max < 1:
        raise InvalidArgument("k_max must be >= 1")
    if coeff.kind != "piecewise":
        raise InvalidArgument("expected a piecewise-constant coefficient")
    if len(coeff.breakpoints) != 1:
        raise Unsupported("only two-piece coefficients; use build_spectrum_sturm_liouville")
    if form not in ("divergence", "nondivergence"):
        raise InvalidArgument(f"unknown form {form!r}")
    coeff.validate(domain)
    L = domain.length
    b = coeff.breakpoints[0]
    a1, a2 = coeff.values
    weights = (1.0, 1.0) if form == "divergence" else (1.0 / a1, 1.0 / a2)

    def mode(mu, ratio, tag=""):
        return PiecewiseMode(mu, b, L, a1, a2, ratio, weights, tag)

    if is_half_half_example(domain, coeff):
        mu_max = 16.0
        while True:
            branches = half_half_branches(mu_max, form)
            if len(branches) >= k_max + 1:
                break
            mu_max *= 2
        entries = [
            SpectralEntry(k + 1, mu, (mode(mu, ratio, tag),), tag=tag)
            for k, (mu, tag, ratio) in enumerate(branches[:k_max])
        ]
        return Spectrum(tuple(entries), f"interval-piecewise-{form}", domain, "simple",
                        meta={"closed_form": True, "form": form})

    # average root spacing in s from the travel time through both pieces
    travel = b / math.sqrt(a1) + (L - b) / math.sqrt(a2)
    step = math.pi / travel / scan_refine
    roots = []
    s_lo = step * 1e-3
    f_lo = float(secular_function(s_lo, b, L, a1, a2, form))
    s_cap = (k_max + 4) * math.pi / travel * 4
    while len(roots) < k_max:
        s_hi = s_lo + step
        if s_hi > s_cap:
            raise NumericalFailure(f"bracketed only {len(roots)} of {k_max} roots below s={s_cap:.3g}")
        f_hi = float(secular_function(s_hi, b, L, a1, a2, form))
        if f_lo == 0.0:
            roots.append(s_lo)
        elif f_lo * f_hi < 0:
            roots.append(brentq(lambda s: float(secular_function(s, b, L, a1, a2, form)),
                                s_lo, s_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        s_lo, f_lo = s_hi, f_hi
    entries = []
    for k, s in enumerate(roots[:k_max]):
        mu = s * s
        entries.append(SpectralEntry(k + 1, mu, (mode(mu, _interface_ratio(mu, b, L, a1, a2, form)),)))
    return Spectrum(tuple(entries), f"interval-piecewise-{form}", domain, "simple",
                    meta={"closed_form": False, "form": form})


def build_spectrum_sturm_liouville(domain: Domain1D, coeff: Coefficient1D, grid_size: int,
                                   k_max: int) -> Spectrum:
    """Finite-difference eigenpairs of ``-(a u')' + q u = lam rho u``, Dirichlet.

    ``grid_size`` is the number of cells. ``a`` is sampled at cell midpoints
    (flux form, exact for coefficients that jump on a node); ``rho`` and ``q``
    are averaged over the two half-cells touching each node. Eigenvectors are
    normalised in the discrete ``rho``-weighted inner product.
    """
    if k_max < 1:
        raise InvalidArgument("k_max must be >= 1")
    if grid_size < 20 * k_max:
        raise InvalidArgument(f"grid_size must be >= 20*k_max = {20 * k_max}")
    coeff.validate(domain)
    a, rho, q = coeff.functions()
    L = domain.length
    N = int(grid_size)
    h = L / N
    x = np.linspace(0.0, L, N + 1)
    xi = x[1:-1]
    a_mid = a((x[:-1] + x[1:]) / 2)
    rho_n = (rho(xi - h / 4) + rho(xi + h / 4)) / 2
    q_n = (q(xi - h / 4) + q(xi + h / 4)) / 2
    diag = (a_mid[:-1] + a_mid[1:]) / h**2 + q_n
    off = -a_mid[1:-1] / h**2
    w = 1.0 / np.sqrt(rho_n)
    try:
        lam, vec = eigh_tridiagonal(diag * w * w, off * w[:-1] * w[1:], select="i",
                                    select_range=(0, k_max - 1))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"symmetric tridiagonal eigensolver failed: {exc}") from exc
    if lam[0] <= 0:
        raise SpectralPositivityError(f"least eigenvalue {lam[0]:.6g} is not positive")
    phi = vec * w[:, None]
    phi /= np.sqrt(h * np.sum(rho_n[:, None] * phi**2, axis=0))
    entries = []
    for k in range(k_max):
        full = np.concatenate(([0.0], phi[:, k], [0.0]))
        # fix the sign so that phi'(0) > 0
        if full[1] < 0:
            full = -full
        entries.append(SpectralEntry(k + 1, float(lam[k]), (GridMode(x, full, np.gradient(full, h)),)))
    return Spectrum(tuple(entries), "interval-sturm-liouville", domain, "simple",
                    meta={"grid_size": N, "rho_nodes": rho_n})


def _enumerate_lattice(bounds: list[int], weights: np.ndarray, cap: float) -> np.ndarray:
    """All n in (N*)^N with sum(weights * n^2) <= cap, as an (M, N) int array."""
    pts = np.arange(1, bounds[0] + 1, dtype=np.int64)[:, None]
    for j in range(1, len(bounds)):
        partial = (weights[:j] * pts.astype(float) ** 2).sum(axis=1)
        nj = np.arange(1, bounds[j] + 1, dtype=np.int64)
        rem = (cap - partial)[:, None] - weights[j] * nj.astype(float)[None, :] ** 2
        keep = rem >= -1e-9 * cap
        rows, cols = np.nonzero(keep)
        pts = np.column_stack([pts[rows], nj[cols]])
    return pts


def build_spectrum_rectangle(domain: RectangleDomain, lambda_cap: float, tuple_budget: int = 20_000_000,
                             tol_group: float = TOL_GROUP) -> Spectrum:
    """Dirichlet Laplacian eigenvalues ``sum (n_j pi / L_j)^2 <= lambda_cap``.

    Equal values are grouped exactly whenever every ``L_1^2 / L_j^2`` is
    rational (integers ``D n_1^2 + sum D xi_j n_j^2`` with ``D`` the lcm of the
    denominators), otherwise with the relative tolerance ``tol_group``.
    """
    L = np.array(domain.lengths)
    weights = (np.pi / L) ** 2
    lam_min = float(weights.sum())
    if not lambda_cap > lam_min:
        raise InvalidArgument(f"lambda_cap must exceed the ground state {lam_min:.6g}")
    bounds = [int(math.floor(math.sqrt(lambda_cap / w))) for w in weights]
    # volume of the positive orthant of the ellipsoid
    n_dim = len(L)
    estimate = (math.pi ** (n_dim / 2) / math.gamma(n_dim / 2 + 1)) * np.prod(np.sqrt(lambda_cap / weights)) / 2**n_dim
    if estimate > tuple_budget:
        raise ResourceLimit(f"about {estimate:.3g} lattice tuples exceed the budget {tuple_budget}")
    pts = _enumerate_lattice(bounds, weights, lambda_cap)
    ratios = domain.squared_ratios()
    exact = all(r is not None for r in ratios)
    if exact:
        D = reduce(math.lcm, [r.denominator for r in ratios], 1)
        iw = np.array([D] + [r.numerator * (D // r.denominator) for r in ratios], dtype=object)
        ints = np.array([int(v) for v in (pts.astype(object) ** 2 * iw).sum(axis=1)], dtype=object)
        scale = float(weights[0]) / D
        if max(ints) < 2**62:
            ints = ints.astype(np.int64)
        order = np.lexsort(tuple(pts[:, j] for j in range(n_dim - 1, -1, -1)) + (ints,))
        pts, ints = pts[order], ints[order]
        keys = ints
        brk = np.nonzero(np.diff(keys) != 0)[0] + 1
        grouping = "exact"
    else:
        vals = (pts.astype(float) ** 2 * weights).sum(axis=1)
        order = np.lexsort(tuple(pts[:, j] for j in range(n_dim - 1, -1, -1)) + (vals,))
        pts, vals = pts[order], vals[order]
        brk = np.nonzero(np.diff(vals) > tol_group * vals[1:])[0] + 1
        grouping = "float"
        scale = 1.0
    starts = np.concatenate(([0], brk))
    stops = np.concatenate((brk, [len(pts)]))
    entries = []
    lengths = tuple(domain.lengths)
    for k, (i0, i1) in enumerate(zip(starts, stops)):
        group = pts[i0:i1]
        nset = tuple(tuple(int(v) for v in row) for row in sorted(map(tuple, group)))
        modes = tuple(SineMode(n, lengths) for n in nset)
        if exact:
            fr = Fraction(int(ints[i0]), D)
            value = float(weights[0]) * float(fr)
        else:
            fr = None
            value = float(np.mean((group.astype(float) ** 2 * weights).sum(axis=1)))
        entries.append(SpectralEntry(k + 1, value, modes, nset, fr))
    meta = {"lambda_cap": float(lambda_cap), "tuples": int(len(pts)), "tol_group": tol_group}
    if exact:
        meta["denominator"] = D
    return Spectrum(tuple(entries), "rectangle", domain, grouping, scale, meta)


def weyl_count(domain: RectangleDomain, lam: float) -> float:
    """Leading Weyl term ``|Omega| lam / (4 pi)`` (two dimensions)."""
    if domain.dim != 2:
        raise InvalidArgument("area law implemented for N = 2")
    return domain.area * lam / (4 * math.pi)


# ---------------------------------------------------------------------------
# Liouville asymptotics
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LiouvilleAsymptotics:
    ell: float
    xi: Callable
    C1: float
    C2: float
    leading: float
    residuals: np.ndarray
    candidates: dict
    matches: str

    @property
    def residual_bound(self) -> float:
        return float(np.max(np.abs(self.residuals)))


def liouville_asymptotics(spectrum: Spectrum, coeff: Coefficient1D, min_modes: int = 20) -> LiouvilleAsymptotics:
    """Least-squares fit ``lam_k ~ A k^2 + C1`` against the travel length.

    ``ell = int sqrt(rho / a)`` over the interval. Both ``ell^2`` and
    ``(pi / ell)^2`` are reported as candidates for ``A`` (for ``a = 1`` on
    ``(0, pi)`` only the latter equals the exact coefficient 1); ``matches``
    names the closer one.
    """
    if len(spectrum) < min_modes:
        raise InsufficientData(f"need at least {min_modes} eigenvalues")
    domain = spectrum.domain
    if not isinstance(domain, Domain1D):
        raise InvalidArgument("Liouville asymptotics apply to interval spectra")
    a, rho, _ = coeff.functions()
    L = domain.length
    speed = lambda x: np.sqrt(rho(x) / a(x))
    pts = list(coeff.breakpoints) if coeff.kind == "piecewise" else None
    ell = integrate.quad(lambda x: float(speed(x)), 0.0, L, points=pts, limit=200, epsabs=1e-13, epsrel=1e-13)[0]
    grid = np.linspace(0.0, L, 4001)
    cum = integrate.cumulative_trapezoid(speed(grid), grid, initial=0.0)
    cum *= ell / cum[-1]
    xi_scale = math.pi / ell

    def xi(x):
        return xi_scale * np.interp(x, grid, cum)

    k = np.arange(1, len(spectrum) + 1, dtype=float)
    lam = spectrum.eigenvalues
    design = np.column_stack([k**2, np.ones_like(k)])
    (A, C1), *_ = np.linalg.lstsq(design, lam, rcond=None)
    residuals = lam - (A * k**2 + C1)
    candidates = {"ell_squared": ell**2, "pi_over_ell_squared": (math.pi / ell) ** 2}
    matches = min(candidates, key=lambda name: abs(candidates[name] - A) / A)
    return LiouvilleAsymptotics(ell, xi, float(C1), math.sqrt(2.0 / ell), float(A), residuals, candidates, matches)
