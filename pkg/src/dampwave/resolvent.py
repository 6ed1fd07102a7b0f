"""Explicit resolvent bound c(omega) against the numerical resolvent norm.

The generator ``A(u0, u1) = (-u1, L u0 + B u1)`` is represented on a mode
truncation in energy coordinates ``z = (Lambda^{1/2} y, v)``, where it reads

    A = [[0, -Lambda^{1/2}], [Lambda^{1/2}, G]]

and the Euclidean norm of ``z`` is the energy norm. Then
``|| (A - i omega)^{-1} || = 1 / sigma_min(A - i omega)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve, svdvals
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .damping import GramMatrix
from .envelope import power_envelope
from .errors import InsufficientData, InvalidArgument, NumericalFailure, PoleError, ResonanceError
from .spectral import Spectrum

CONVERGENCE_TOL = 0.05
DENSE_LIMIT = 300
RESONANCE_TOL = 1e-12
UNDAMPED_TOL = 1e-12


def alpha(lambda_j: float, omega: float) -> float:
    """``lambda_j / |omega^2 - lambda_j|``."""
    d = abs(omega * omega - lambda_j)
    if d <= 1e-15 * max(abs(lambda_j), 1.0):
        raise PoleError(f"alpha has a pole at omega^2 = lambda_j = {lambda_j}")
    return lambda_j / d


def c_star(norm_B: float) -> float:
    return 16.0 * (1.0 + norm_B) ** 2


def _bracket_index(lam: np.ndarray, omega: float) -> int:
    w2 = omega * omega * (1.0 - 4 * np.finfo(float).eps)
    mids = np.concatenate(([lam[0] / 2], (lam[:-1] + lam[1:]) / 2))
    return int(np.searchsorted(mids, w2, side="left"))


def bracket(eigenvalues: np.ndarray, omega: float) -> int:
    """Index ``k`` with ``M_{k-1} < omega^2 <= M_k`` for midpoints ``M_k = (lam_k + lam_{k+1})/2``.

    ``M_0 = lam_1 / 2``; returns 0 on the small-frequency branch.
    Ties (up to rounding of ``omega^2``) go to the lower index.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    k = _bracket_index(lam, omega)
    if k >= len(lam):
        w2 = omega * omega
        raise InvalidArgument(f"omega^2 = {w2:.6g} lies beyond the last computed midpoint")
    return k


class BoundValue(NamedTuple):
    c_bound: float
    bracket_k: int
    alpha_minus: float
    alpha_plus: float


def c_omega_terms(spectrum: Spectrum, betas, norm_B: float, omega: float) -> BoundValue:
    if omega == 0:
        raise InvalidArgument("c(omega) is not defined at omega = 0; use the numerical norm of A^{-1}")
    lam = spectrum.eigenvalues
    cs = c_star(norm_B)
    k = bracket(lam, omega)
    if k == 0:
        return BoundValue(2.0 * cs, 0, math.nan, math.nan)
    betas = np.asarray(betas, dtype=float)
    if len(betas) < k:
        raise InvalidArgument(f"need beta_{k}")
    lam_k = lam[k - 1]
    lam_m = lam[k - 2] if k > 1 else 0.0
    a_minus = alpha(lam_m, omega) if k > 1 else 0.0
    a_plus = alpha(lam[k], omega)
    bl = betas[k - 1] * lam_k
    w = abs(omega)
    value = (bl / w + (1.0 + bl) * (a_minus + a_plus) ** 2 * (1.0 + w)) * cs
    return BoundValue(float(value), k, float(a_minus), float(a_plus))


def c_omega(spectrum: Spectrum, betas, norm_B: float, omega: float) -> tuple[float, int]:
    """The explicit bound ``c(omega)`` and the bracket index used to evaluate it.

    ``betas[k-1]`` is ``beta_k``. For ``omega^2 <= lam_1 / 2`` the constant
    ``2 c*`` is returned with bracket 0.
    """
    v = c_omega_terms(spectrum, betas, norm_B, omega)
    return v.c_bound, v.bracket_k


# ---------------------------------------------------------------------------
# numerical resolvent norm
# ---------------------------------------------------------------------------


def generator_matrix(gram: GramMatrix, modes: int | None = None) -> np.ndarray:
    """``A`` in energy coordinates on the first ``modes`` modes of the truncation."""
    if gram.matrix is None:
        raise InvalidArgument("the generator needs a dense Gram matrix")
    n = gram.size if modes is None else int(modes)
    if not 1 <= n <= gram.size:
        raise InvalidArgument(f"{n} modes requested from a truncation of {gram.size}")
    s = np.sqrt(gram.eigenvalues[:n])
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = -np.diag(s)
    A[n:, :n] = np.diag(s)
    A[n:, n:] = gram.matrix[:n, :n]
    return A


def energy_norm(gram: GramMatrix, y: np.ndarray, v: np.ndarray) -> float:
    """``sqrt(sum lam |y|^2 + sum |v|^2)``."""
    lam = gram.eigenvalues[:len(y)]
    return float(np.sqrt(np.sum(lam * np.abs(y) ** 2) + np.sum(np.abs(v) ** 2)))


def _sigma_min(M: np.ndarray) -> float:
    n = M.shape[0]
    if n <= DENSE_LIMIT:
        return float(svdvals(M)[-1])
    try:
        lu = lu_factor(M, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"LU factorisation failed: {exc}") from exc
    if np.min(np.abs(np.diag(lu[0]))) == 0.0:
        return 0.0

    def mv(x):
        return lu_solve(lu, lu_solve(lu, x, check_finite=False), trans=2, check_finite=False)

    op = LinearOperator((n, n), matvec=mv, dtype=complex)
    v0 = np.ones(n, dtype=complex)
    try:
        top = eigsh(op, k=1, which="LA", v0=v0, tol=1e-12, return_eigenvectors=False)[0]
    except ArpackNoConvergence:
        return float(svdvals(M)[-1])
    return 1.0 / math.sqrt(float(top.real))


class ResolventNorm(NamedTuple):
    norm: float
    norm_doubled: float
    converged: bool
    truncation: int
    # truncation >= 2 * bracket index of omega
    bracket_ok: bool


def bracket_within(eigenvalues: np.ndarray, omega: float, truncation: int) -> bool:
    """Whether the truncation holds at least twice the bracket index of ``omega``."""
    return 2 * _bracket_index(np.asarray(eigenvalues, dtype=float), omega) <= truncation


def _resonance_check(spectrum: Spectrum, gram: GramMatrix, omega: float, count: int) -> None:
    lam = spectrum.eigenvalues
    w2 = omega * omega
    for k in range(gram.k_lo, gram.k_lo + count):
        if abs(w2 - lam[k - 1]) <= RESONANCE_TOL * lam[k - 1]:
            block = gram.block(k)
            scale = max(1.0, float(np.max(np.abs(gram.matrix))))
            if float(np.linalg.eigvalsh(block)[0]) <= UNDAMPED_TOL * scale:
                raise ResonanceError(f"undamped eigenspace {k} resonates at omega^2 = {w2:.6g}")


def resolvent_norm_at(A: np.ndarray, omega: float) -> float:
    n = A.shape[0]
    M = A - 1j * omega * np.eye(n)
    s = _sigma_min(M)
    if not s > 1e-14 * max(1.0, np.abs(A).max()):
        raise ResonanceError(f"A - i omega is singular at omega = {omega}")
    return 1.0 / s


def resolvent_norm_numeric(spectrum: Spectrum, gram: GramMatrix, omega: float, truncation: int,
                           check_doubling: bool = True) -> ResolventNorm:
    """``|| (A - i omega)^{-1} ||`` on the first ``truncation`` eigenspaces.

    With ``check_doubling`` the norm is recomputed on ``2 * truncation``
    eigenspaces (which ``gram`` must cover) and ``converged`` records
    whether the two values agree to 5 %.
    """
    if gram.k_lo != 1:
        raise InvalidArgument("the truncation must start at the first eigenspace")
    count = gram.k_hi
    need = 2 * truncation if check_doubling else truncation
    if truncation < 1 or need > count:
        raise InvalidArgument(f"gram covers {count} eigenspaces, {need} needed")
    _resonance_check(spectrum, gram, omega, need)
    ok = bracket_within(spectrum.eigenvalues, omega, truncation)
    n1 = int(gram.offsets[truncation])
    r1 = resolvent_norm_at(generator_matrix(gram, n1), omega)
    if not check_doubling:
        return ResolventNorm(r1, math.nan, False, truncation, ok)
    n2 = int(gram.offsets[2 * truncation])
    r2 = resolvent_norm_at(generator_matrix(gram, n2), omega)
    return ResolventNorm(r1, r2, abs(r2 - r1) / r1 < CONVERGENCE_TOL, truncation, ok)


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


def omega_grid(spectrum: Spectrum, k_top: int, n_points: int = 500, lower: float | None = None,
               include_eigenvalues: bool = True) -> np.ndarray:
    """Positive frequencies covering ``omega^2`` in ``[lam_1/4, lam_{k_top}]``.

    Contains every resonance ``sqrt(lam_k)`` and bracket midpoint
    ``sqrt((lam_k + lam_{k+1})/2)`` for ``k < k_top``, padded with
    log-spaced points up to ``n_points``.
    """
    lam = spectrum.eigenvalues
    if not 1 <= k_top <= len(lam):
        raise InvalidArgument(f"k_top outside 1..{len(lam)}")
    lo = math.sqrt(lam[0] / 4) if lower is None else float(lower)
    hi = math.sqrt(lam[k_top - 1])
    must = [lo, hi] + list(np.sqrt((lam[:k_top - 1] + lam[1:k_top]) / 2))
    if include_eigenvalues:
        must += list(np.sqrt(lam[:k_top]))
    must = np.unique(np.array(must))
    if len(must) > n_points:
        raise InvalidArgument(f"{len(must)} mandatory frequencies exceed n_points = {n_points}")
    fill = n_points - len(must)
    grid = must
    extra = fill
    while len(grid) < n_points:
        pad = np.geomspace(lo, hi, extra + 2)[1:-1]
        grid = np.unique(np.concatenate((must, pad)))
        extra += n_points - len(grid)
    return grid[:n_points] if len(grid) > n_points else grid


@dataclass(frozen=True)
class ResolventPoint:
    omega: float
    bracket_k: int
    alpha_minus: float
    alpha_plus: float
    c_bound: float
    r_norm: float
    truncation: int
    truncation_ok: bool
    r_norm_doubled: float
    bracket_ok: bool = True


@dataclass(frozen=True, eq=False)
class ResolventProfile:
    points: tuple[ResolventPoint, ...]
    c_star: float
    growth_exponent: float
    growth_constant: float
    c1_star: float
    m_pred: float | None
    norm_B: float

    @property
    def omega(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    @property
    def r_norm(self) -> np.ndarray:
        return np.array([p.r_norm for p in self.points])

    @property
    def c_bound(self) -> np.ndarray:
        return np.array([p.c_bound for p in self.points])

    @property
    def all_converged(self) -> bool:
        return all(p.truncation_ok for p in self.points)

    @property
    def max_doubling_change(self) -> float:
        return float(max(abs(p.r_norm_doubled - p.r_norm) / p.r_norm for p in self.points))

    @property
    def bracket_ok_fraction(self) -> float:
        """Share of frequencies whose bracket index is at most half the truncation."""
        return float(np.mean([p.bracket_ok for p in self.points]))

    @property
    def envelope_holds(self) -> bool:
        return bool(np.all(self.r_norm <= self.c_star * self.c_bound * (1 + 1e-12)))

    @property
    def growth_ok(self) -> bool | None:
        if self.m_pred is None:
            return None
        return self.growth_exponent <= self.m_pred

    def rows(self) -> list[tuple]:
        return [(p.omega, p.bracket_k, p.alpha_minus, p.alpha_plus, p.c_bound, p.r_norm, int(p.truncation_ok))
                for p in self.points]


def build_profile(spectrum: Spectrum, gram: GramMatrix, betas: Sequence[float], omega_grid: Sequence[float],
                  truncation: int, norm_B: float, m_pred: float | None = None,
                  check_doubling: bool = True, window: float = 0.5) -> ResolventProfile:
    """Evaluate ``c(omega)`` and the numerical norm along ``omega_grid``.

    ``c_star = max r_norm / c_bound`` is the single constant making the
    envelope hold; the growth exponent is the envelope slope of
    ``log r_norm`` against ``log omega``.
    """
    grid = np.asarray(omega_grid, dtype=float)
    if len(grid) < 2:
        raise InsufficientData("a profile needs at least two frequencies")
    if np.any(grid <= 0):
        raise InvalidArgument("profile frequencies must be positive")
    count = 2 * truncation if check_doubling else truncation
    if gram.k_lo != 1 or count > gram.k_hi:
        raise InvalidArgument(f"gram must cover eigenspaces 1..{count}")
    A1 = generator_matrix(gram, int(gram.offsets[truncation]))
    A2 = generator_matrix(gram, int(gram.offsets[2 * truncation])) if check_doubling else None
    points = []
    for w in grid:
        b = c_omega_terms(spectrum, betas, norm_B, float(w))
        _resonance_check(spectrum, gram, float(w), count)
        r1 = resolvent_norm_at(A1, float(w))
        r2 = resolvent_norm_at(A2, float(w)) if check_doubling else math.nan
        ok = bool(check_doubling and abs(r2 - r1) / r1 < CONVERGENCE_TOL)
        points.append(ResolventPoint(float(w), b.bracket_k, b.alpha_minus, b.alpha_plus, b.c_bound, r1,
                                     truncation, ok, r2, bracket_within(spectrum.eigenvalues, float(w), truncation)))
    r = np.array([p.r_norm for p in points])
    c = np.array([p.c_bound for p in points])
    cs = float(np.max(r / c))
    slope, const = power_envelope(grid, r, min_points=2, window=window)
    c1 = float(np.max(c / (1.0 + grid ** m_pred))) if m_pred is not None else math.nan
    return ResolventProfile(tuple(points), cs, float(slope), float(const), c1, m_pred, float(norm_B))
