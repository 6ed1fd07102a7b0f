"""Damping forms, nondegeneracy constants beta_k and the norm of B.

The damping form on eigenfunctions is

    <B phi, psi> = int b1 phi psi + int b2 grad(phi) . grad(psi)

with ``b1`` (viscous) and ``b2`` (Kelvin-Voigt) given as finite sums of box
regions, optionally with smooth tapers, plus optional pointwise samplers.
For products of Dirichlet sines on boxes the integrals separate into 1-D
tables computed in closed form (indicators) or by Gauss-Legendre quadrature
(tapers). Other eigenfunctions are integrated by composite quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import eigh, eigvalsh

from .envelope import power_envelope
from .errors import (
    AccuracyRefused,
    DegenerateDamping,
    InsufficientData,
    InvalidArgument,
    NumericalFailure,
    ResourceLimit,
)
from .spectral import GridMode, PiecewiseMode, SineMode, Spectrum

PANELS_PER_OSCILLATION = 64
MIN_PANELS_PER_OSCILLATION = 4
GL_ORDER = 4
NEAR_DEGENERATE = 1e-6
PSD_TOL = 1e-10


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


def _smoothstep(t):
    """C-infinity step from 0 at t <= 0 to 1 at t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        g = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return f / (f + g)


@dataclass(frozen=True)
class Region:
    """Axis-aligned box ``prod [lo_j, hi_j]`` carrying the constant ``value``.

    With ``taper > 0`` the profile is a smooth plateau equal to ``value`` on
    the box and decaying to zero within distance ``taper`` outside it, so it
    still satisfies the floor ``value`` on the box.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    value: float
    taper: float = 0.0

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise InvalidArgument("region bounds have different dimensions")
        if any(b <= a for a, b in zip(lo, hi)):
            raise InvalidArgument("region boxes need lo < hi on every axis")
        if self.value < 0:
            raise InvalidArgument("damping coefficients must be nonnegative")
        if self.taper < 0:
            raise InvalidArgument("taper must be nonnegative")

    @classmethod
    def interval(cls, lo: float, hi: float, value: float, taper: float = 0.0) -> "Region":
        return cls((lo,), (hi,), value, taper)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def width(self) -> float:
        """Width along the first axis (the strip width)."""
        return self.hi[0] - self.lo[0]

    def axis_profile(self, j: int) -> Callable:
        lo, hi, w = self.lo[j], self.hi[j], self.taper
        if w == 0:
            return lambda x: ((np.asarray(x) >= lo) & (np.asarray(x) <= hi)).astype(float)
        return lambda x: _smoothstep((np.asarray(x) - lo + w) / w) * _smoothstep((hi + w - np.asarray(x)) / w)

    def support(self, j: int, length: float) -> tuple[float, float]:
        return max(0.0, self.lo[j] - self.taper), min(length, self.hi[j] + self.taper)

    def __call__(self, x) -> np.ndarray:
        p = np.asarray(x, dtype=float)
        if self.dim == 1 and (p.ndim == 0 or p.shape[-1] != 1):
            p = p[..., None]
        out = np.full(p.shape[:-1], self.value)
        for j in range(self.dim):
            out = out * self.axis_profile(j)(p[..., j])
        return out


@dataclass(frozen=True)
class DampingConfig:
    """Viscous (``b1``) and Kelvin-Voigt (``b2``) damping coefficients."""

    b1_regions: tuple[Region, ...] = ()
    b2_regions: tuple[Region, ...] = ()
    b1: Callable | None = None
    b2: Callable | None = None

    def __post_init__(self):
        object.__setattr__(self, "b1_regions", tuple(self.b1_regions))
        object.__setattr__(self, "b2_regions", tuple(self.b2_regions))
        floors = [r.value for r in self.b1_regions + self.b2_regions]
        if not any(v > 0 for v in floors) and self.b1 is None and self.b2 is None:
            raise InvalidArgument("at least one damping region needs a positive floor")

    @classmethod
    def viscous(cls, *regions: Region) -> "DampingConfig":
        return cls(b1_regions=regions)

    @classmethod
    def kelvin_voigt(cls, *regions: Region) -> "DampingConfig":
        return cls(b2_regions=regions)

    @property
    def kind(self) -> str:
        has1 = bool(self.b1_regions) or self.b1 is not None
        has2 = bool(self.b2_regions) or self.b2 is not None
        return {(True, False): "viscous", (False, True): "kelvin-voigt"}.get((has1, has2), "mixed")

    def scaled(self, factor: float) -> "DampingConfig":
        scale = lambda regs: tuple(Region(r.lo, r.hi, factor * r.value, r.taper) for r in regs)
        wrap = lambda f: None if f is None else (lambda x: factor * f(x))
        return DampingConfig(scale(self.b1_regions), scale(self.b2_regions), wrap(self.b1), wrap(self.b2))

    def validate(self, lengths: Sequence[float]) -> None:
        for r in self.b1_regions + self.b2_regions:
            if r.dim != len(lengths):
                raise InvalidArgument(f"region of dimension {r.dim} on a domain of dimension {len(lengths)}")
            for a, b, L in zip(r.lo, r.hi, lengths):
                if a < 0 or b > L:
                    raise InvalidArgument("damping region extends outside the domain")


# ---------------------------------------------------------------------------
# 1-D quadrature helpers
# ---------------------------------------------------------------------------


def _gauss_nodes(a: float, b: float, panels: int, order: int = GL_ORDER, breaks: Sequence[float] = ()):
    xg, wg = np.polynomial.legendre.leggauss(order)
    cuts = sorted({a, b, *[c for c in breaks if a < c < b]})
    xs, ws = [], []
    total = b - a
    for c0, c1 in zip(cuts, cuts[1:]):
        n = max(1, int(math.ceil(panels * (c1 - c0) / total)))
        edges = np.linspace(c0, c1, n + 1)
        mid = (edges[:-1] + edges[1:]) / 2
        half = (edges[1:] - edges[:-1]) / 2
        xs.append((mid[:, None] + half[:, None] * xg).ravel())
        ws.append((half[:, None] * wg).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def _panels_for(freq: float, a: float, b: float, per_osc: int = PANELS_PER_OSCILLATION) -> int:
    oscillations = freq * (b - a) / (2 * math.pi)
    return max(per_osc, int(math.ceil(per_osc * oscillations)))


def _axis_tables(region: Region, j: int, length: float, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """``(I_ss, I_cc)`` of shape ``(kmax+1, kmax+1)`` for axis ``j``.

    ``I_ss[a, b] = (2/L) int p sin(a w x) sin(b w x)`` and
    ``I_cc[a, b] = (2/L) (a w)(b w) int p cos(a w x) cos(b w x)``, ``w = pi/L``.
    Row and column 0 are unused.
    """
    w = math.pi / length
    idx = np.arange(kmax + 1, dtype=float)
    lo, hi = region.support(j, length)
    if region.taper == 0 and lo <= 0.0 and hi >= length:
        # full span: orthogonality is exact
        return np.diag((idx > 0).astype(float)), np.diag(idx * idx * w * w)
    if region.taper == 0:
        diff = idx[:, None] - idx[None, :]
        summ = idx[:, None] + idx[None, :]

        def F(k):
            with np.errstate(divide="ignore", invalid="ignore"):
                val = (np.sin(k * w * hi) - np.sin(k * w * lo)) / (k * w)
            return np.where(k == 0, hi - lo, val)

        fd, fs = F(diff), F(summ)
        iss = (fd - fs) / length
        icc = (w * w / length) * idx[:, None] * idx[None, :] * (fd + fs)
        return iss, icc
    prof = region.axis_profile(j)
    x, wq = _gauss_nodes(lo, hi, _panels_for(2 * kmax * w, lo, hi))
    pw = prof(x) * wq
    s = np.sin(np.outer(idx, w * x))
    c = np.cos(np.outer(idx, w * x)) * (idx * w)[:, None]
    iss = (2.0 / length) * (s * pw) @ s.T
    icc = (2.0 / length) * (c * pw) @ c.T
    return iss, icc


# ---------------------------------------------------------------------------
# the form
# ---------------------------------------------------------------------------


class DampingForm:
    """Evaluates ``<B phi_i, phi_j>`` for arbitrary lists of modes of a spectrum."""

    def __init__(self, spectrum: Spectrum, damping: DampingConfig):
        self.spectrum = spectrum
        self.damping = damping
        lengths = spectrum.domain.lengths
        self.lengths = tuple(lengths)
        damping.validate(self.lengths)
        modes = spectrum.modes
        self.modes = modes
        self.sine = all(isinstance(m, SineMode) for m in modes) and damping.b1 is None and damping.b2 is None
        if self.sine:
            self.n = np.array([m.n for m in modes], dtype=np.int64)
            self._tables = None
        else:
            if len(self.lengths) != 1:
                raise InvalidArgument("quadrature assembly is implemented for interval domains")
            self._prepare_quadrature()

    # closed-form path ------------------------------------------------------

    def _build_tables(self):
        kmax = self.n.max(axis=0)
        tables = []
        for reg, kind in [(r, 1) for r in self.damping.b1_regions] + [(r, 2) for r in self.damping.b2_regions]:
            axes = [_axis_tables(reg, j, self.lengths[j], int(kmax[j])) for j in range(len(self.lengths))]
            tables.append((kind, reg.value, axes))
        self._tables = tables

    def _sine_block(self, ia: np.ndarray, ib: np.ndarray) -> np.ndarray:
        if self._tables is None:
            self._build_tables()
        na, nb = self.n[ia], self.n[ib]
        dim = na.shape[1]
        out = np.zeros((len(ia), len(ib)))
        for kind, value, axes in self._tables:
            ss = [axes[j][0][np.ix_(na[:, j], nb[:, j])] for j in range(dim)]
            if kind == 1:
                out += value * np.prod(ss, axis=0)
            else:
                for j in range(dim):
                    term = axes[j][1][np.ix_(na[:, j], nb[:, j])]
                    for i in range(dim):
                        if i != j:
                            term = term * ss[i]
                    out += value * term
        return out

    # quadrature path -------------------------------------------------------

    def _prepare_quadrature(self):
        L = self.lengths[0]
        breaks = sorted({m.breakpoint for m in self.modes if isinstance(m, PiecewiseMode)})
        top = self.spectrum.eigenvalues[-1]
        # highest spatial frequency among the modes
        freq = 2 * max(math.sqrt(top / min(m.a_left, m.a_right)) if isinstance(m, PiecewiseMode) else
                       (m.wavenumbers.max() if isinstance(m, SineMode) else math.sqrt(top))
                       for m in self.modes)
        for m in self.modes:
            if isinstance(m, GridMode) and m.points_per_oscillation() < MIN_PANELS_PER_OSCILLATION:
                raise AccuracyRefused("grid eigenfunction resolved by fewer than 4 points per oscillation")
        parts = []
        pieces = [(r, 1) for r in self.damping.b1_regions] + [(r, 2) for r in self.damping.b2_regions]
        for reg, kind in pieces:
            lo, hi = reg.support(0, L)
            x, w = _gauss_nodes(lo, hi, _panels_for(freq, lo, hi), breaks=breaks + [reg.lo[0], reg.hi[0]])
            parts.append((kind, x, w * reg(x)))
        for f, kind in ((self.damping.b1, 1), (self.damping.b2, 2)):
            if f is not None:
                x, w = _gauss_nodes(0.0, L, _panels_for(freq, 0.0, L), breaks=breaks)
                vals = np.asarray(f(x), dtype=float)
                if np.any(vals < 0):
                    raise InvalidArgument("damping samplers must be nonnegative")
                parts.append((kind, x, w * vals))
        self._quad = []
        for kind, x, w in parts:
            ev = np.array([m.value(x) if kind == 1 else m.gradient(x) for m in self.modes])
            self._quad.append((ev, w))

    def _quad_block(self, ia, ib):
        out = np.zeros((len(ia), len(ib)))
        for ev, w in self._quad:
            out += (ev[ia] * w) @ ev[ib].T
        return out

    def block(self, ia, ib=None) -> np.ndarray:
        ia = np.asarray(ia, dtype=int)
        ib = ia if ib is None else np.asarray(ib, dtype=int)
        out = self._sine_block(ia, ib) if self.sine else self._quad_block(ia, ib)
        if ib is ia:
            out = 0.5 * (out + out.T)
        return out


# ---------------------------------------------------------------------------
# Gram matrices
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class GramMatrix:
    """Damping form restricted to eigenspaces ``k_lo..k_hi`` (1-based, inclusive).

    ``matrix`` holds the full truncation when assembled densely; otherwise
    only the diagonal eigenspace blocks are stored and further sub-blocks are
    evaluated on demand through ``form``.
    """

    spectrum: Spectrum
    k_lo: int
    k_hi: int
    offsets: np.ndarray  # offsets[i] = first mode of eigenspace k_lo + i, relative to the truncation
    form: DampingForm
    matrix: np.ndarray | None = None
    blocks: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalue of each mode in the truncation."""
        return np.repeat(self.spectrum.eigenvalues[self.k_lo - 1:self.k_hi],
                         self.spectrum.multiplicities[self.k_lo - 1:self.k_hi])

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    def _global(self, k: int) -> np.ndarray:
        off = self.spectrum.mode_offsets
        return np.arange(off[k - 1], off[k])

    def block(self, k: int, k2: int | None = None) -> np.ndarray:
        k2 = k if k2 is None else k2
        for kk in (k, k2):
            if not self.k_lo <= kk <= self.k_hi:
                raise InvalidArgument(f"eigenspace {kk} not in the truncation {self.k_lo}..{self.k_hi}")
        if self.matrix is not None:
            i, j = k - self.k_lo, k2 - self.k_lo
            return self.matrix[self.offsets[i]:self.offsets[i + 1], self.offsets[j]:self.offsets[j + 1]]
        if k == k2 and self.blocks:
            return self.blocks[k - self.k_lo]
        return self.form.block(self._global(k), self._global(k2))

    def merged_block(self, ks: Sequence[int]) -> np.ndarray:
        idx = np.concatenate([self._global(k) for k in ks])
        if self.matrix is not None:
            first = self.spectrum.mode_offsets[self.k_lo - 1]
            return self.matrix[np.ix_(idx - first, idx - first)]
        return self.form.block(idx)

    def head(self, count: int) -> "GramMatrix":
        """Dense Gram matrix over the first ``count`` eigenspaces of the truncation."""
        if self.matrix is None:
            raise InvalidArgument("head() needs a dense Gram matrix")
        if not 1 <= count <= self.k_hi - self.k_lo + 1:
            raise InvalidArgument("count outside the truncation")
        n = int(self.offsets[count])
        return GramMatrix(self.spectrum, self.k_lo, self.k_lo + count - 1, self.offsets[:count + 1],
                          self.form, self.matrix[:n, :n].copy())

    def export_rows(self) -> list[tuple]:
        if self.matrix is None:
            raise InvalidArgument("export needs a dense Gram matrix")
        return [(i + 1, j + 1, float(self.matrix[i, j]))
                for i in range(self.size) for j in range(self.size)]


def _check_range(spectrum: Spectrum, k_range) -> tuple[int, int]:
    k_lo, k_hi = (1, len(spectrum)) if k_range is None else (int(k_range[0]), int(k_range[1]))
    if not 1 <= k_lo <= k_hi <= len(spectrum):
        raise InvalidArgument(f"k_range {k_range} outside 1..{len(spectrum)}")
    return k_lo, k_hi


def _offsets(spectrum: Spectrum, k_lo: int, k_hi: int) -> np.ndarray:
    return np.concatenate(([0], np.cumsum(spectrum.multiplicities[k_lo - 1:k_hi])))


def assemble_gram(spectrum: Spectrum, damping: DampingConfig, k_range=None,
                  max_modes: int = 6000, form: DampingForm | None = None) -> GramMatrix:
    """Dense Gram matrix of the damping form over eigenspaces ``k_range``."""
    k_lo, k_hi = _check_range(spectrum, k_range)
    offsets = _offsets(spectrum, k_lo, k_hi)
    if offsets[-1] > max_modes:
        raise ResourceLimit(f"{offsets[-1]} modes exceed the dense assembly budget {max_modes}")
    form = form or DampingForm(spectrum, damping)
    first = int(np.sum(spectrum.multiplicities[:k_lo - 1]))
    idx = np.arange(first, first + int(offsets[-1]))
    G = form.block(idx)
    if not np.all(np.isfinite(G)):
        raise NumericalFailure("non-finite Gram entries")
    return GramMatrix(spectrum, k_lo, k_hi, offsets, form, G)


def eigenspace_blocks(spectrum: Spectrum, damping: DampingConfig, k_range=None) -> GramMatrix:
    """Only the diagonal eigenspace blocks; cheap for large lattice spectra."""
    k_lo, k_hi = _check_range(spectrum, k_range)
    form = DampingForm(spectrum, damping)
    offsets = _offsets(spectrum, k_lo, k_hi)
    gram = GramMatrix(spectrum, k_lo, k_hi, offsets, form)
    gram.blocks = [form.block(gram._global(k)) for k in range(k_lo, k_hi + 1)]
    return gram


def _smallest(block: np.ndarray) -> float:
    if block.shape == (1, 1):
        return float(block[0, 0])
    try:
        return float(eigvalsh(block, subset_by_index=[0, 0])[0])
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"block eigensolver failed: {exc}") from exc


def compute_beta(spectrum: Spectrum, gram: GramMatrix, k: int, tol: float = PSD_TOL) -> float:
    """``beta_k = 1 / min { <B phi, phi> : phi in ker(L - lam_k), |phi| = 1 }``.

    For tolerance-grouped spectra an eigenspace within relative distance
    ``NEAR_DEGENERATE`` of a neighbour is also evaluated merged with that
    neighbour, and the largest resulting beta is returned.
    """
    block = gram.block(k)
    low = _smallest(block)
    scale = max(float(np.max(np.abs(block))), 1.0) if block.size else 1.0
    candidates = [low]
    if spectrum.grouping == "float":
        lam = spectrum.eigenvalues
        for nb in (k - 1, k + 1):
            if gram.k_lo <= nb <= gram.k_hi and abs(lam[nb - 1] - lam[k - 1]) <= NEAR_DEGENERATE * lam[k - 1]:
                candidates.append(_smallest(gram.merged_block(sorted((k, nb)))))
    worst = min(candidates)
    if worst <= tol * scale:
        raise DegenerateDamping(
            f"eigenspace {k} (lambda={spectrum.entry(k).value:.6g}) has damped mass {worst:.3g} <= 0")
    return 1.0 / worst


class NormEstimate(NamedTuple):
    value: float
    truncation: int


def estimate_norm_B(spectrum: Spectrum, gram: GramMatrix, min_entries: int = 10) -> NormEstimate:
    """Largest eigenvalue of ``D^{-1/2} G D^{-1/2}``, ``D`` the mode eigenvalues."""
    if gram.matrix is None:
        raise InvalidArgument("norm estimate needs a dense Gram matrix")
    if gram.k_lo != 1:
        raise InvalidArgument("norm estimate needs a truncation starting at the first eigenspace")
    if gram.k_hi - gram.k_lo + 1 < min_entries:
        raise InsufficientData(f"need at least {min_entries} eigenspaces")
    d = 1.0 / np.sqrt(gram.eigenvalues)
    S = gram.matrix * d[:, None] * d[None, :]
    try:
        top = eigh(S, eigvals_only=True, subset_by_index=[S.shape[0] - 1, S.shape[0] - 1])[0]
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"symmetric eigensolver failed: {exc}") from exc
    return NormEstimate(float(top), gram.size)


# ---------------------------------------------------------------------------
# beta sequences and the gamma_0 fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BetaReport:
    k: np.ndarray
    lam: np.ndarray
    multiplicity: np.ndarray
    beta: np.ndarray
    gamma0: float
    c0: float

    def bound(self) -> np.ndarray:
        return self.c0 * self.lam**self.gamma0

    def rows(self) -> list[tuple]:
        b = self.bound()
        return [(int(k), float(l), int(m), float(be), float(bb))
                for k, l, m, be, bb in zip(self.k, self.lam, self.multiplicity, self.beta, b)]


def beta_sequence(spectrum: Spectrum, gram: GramMatrix, ks: Sequence[int] | None = None) -> np.ndarray:
    ks = range(gram.k_lo, gram.k_hi + 1) if ks is None else ks
    return np.array([compute_beta(spectrum, gram, k) for k in ks])


def fit_gamma0(lam, beta, k=None, multiplicity=None, min_points: int = 20, window: float = 0.5) -> BetaReport:
    """Envelope fit ``beta_k <= c0 * lam_k**gamma0`` holding at every point."""
    lam = np.asarray(lam, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if lam.shape != beta.shape:
        raise InvalidArgument("lam and beta differ in length")
    if len(lam) < min_points:
        raise InsufficientData(f"need at least {min_points} points, got {len(lam)}")
    gamma0, c0 = power_envelope(lam, beta, min_points=min_points, window=window)
    k = np.arange(1, len(lam) + 1) if k is None else np.asarray(k)
    multiplicity = np.ones(len(lam), dtype=int) if multiplicity is None else np.asarray(multiplicity)
    return BetaReport(k, lam, multiplicity, beta, gamma0, c0)


def beta_report(spectrum: Spectrum, gram: GramMatrix, min_points: int = 20) -> BetaReport:
    ks = np.arange(gram.k_lo, gram.k_hi + 1)
    beta = beta_sequence(spectrum, gram, ks)
    return fit_gamma0(spectrum.eigenvalues[ks - 1], beta, ks, spectrum.multiplicities[ks - 1], min_points)
