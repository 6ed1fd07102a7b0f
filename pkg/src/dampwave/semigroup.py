"""Modal simulation of ``y'' + Lambda y + G y' = 0`` and energy decay checks.

In energy coordinates ``z = (Lambda^{1/2} y, v)`` the system is ``z' = -A z``
and the energy is ``|z|^2 / 2``. Time stepping uses the implicit midpoint
rule, i.e. the Cayley propagator ``P = (I + dt A/2)^{-1} (I - dt A/2)``: it is
A-stable, second order, conserves the energy of the undamped system exactly
and satisfies the discrete dissipation identity

    E_{n+1} - E_n = -dt * v_mid^* G v_mid,   v_mid = (v_n + v_{n+1}) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve

from .damping import GramMatrix
from .errors import Diverged, InsufficientData, InvalidArgument, NumericalFailure, RefusedPrecondition
from .resolvent import generator_matrix
from .spectral import Spectrum

SMOOTH_SLOPE_MAX = -0.9


class InitialData(NamedTuple):
    y0: np.ndarray
    v0: np.ndarray
    tag: str
    # slope of log(modal energy) against log(lambda)
    energy_slope: float
    # share of the energy of the same data law carried by modes beyond the truncation
    tail_fraction: float


def modal_energy_slope(lam: np.ndarray, y0: np.ndarray, v0: np.ndarray) -> float:
    e = lam * np.abs(y0) ** 2 + np.abs(v0) ** 2
    keep = e > 0
    if np.count_nonzero(keep) < 2 or np.ptp(np.log(lam[keep])) == 0:
        return -math.inf
    return float(np.polyfit(np.log(lam[keep]), np.log(e[keep]), 1)[0])


def initial_data(spectrum: Spectrum, modes: int, kind: str = "smooth", seed: int = 0,
                 amplitude: float = 1.0) -> InitialData:
    """Random-phase modal data on the first ``modes`` modes.

    ``smooth``: ``y = lam^{-1}``, ``v = lam^{-1/2}`` in modulus, so each mode
    carries energy ``~ lam^{-1}`` (displacement in the domain of L, velocity
    in the energy space). ``rough``: ``y = lam^{-1/2}``, ``v = 1``, equal
    energy per mode.
    """
    lam_all = spectrum.mode_eigenvalues
    if not 1 <= modes <= len(lam_all):
        raise InvalidArgument(f"modes must lie in 1..{len(lam_all)}")
    rng = np.random.default_rng(seed)
    lam = lam_all[:modes]
    ph = np.exp(2j * np.pi * rng.random((2, modes)))
    if kind == "smooth":
        y0, v0 = lam**-1.0 * ph[0], lam**-0.5 * ph[1]
        density = 2.0 / lam_all
    elif kind == "rough":
        y0, v0 = lam**-0.5 * ph[0], np.ones(modes) * ph[1]
        density = 2.0 * np.ones_like(lam_all)
    else:
        raise InvalidArgument(f"unknown initial data kind {kind!r}")
    y0, v0 = amplitude * y0, amplitude * v0
    tail = float(density[modes:].sum() / density.sum())
    return InitialData(y0, v0, kind, modal_energy_slope(lam, y0, v0), tail)


@dataclass(frozen=True, eq=False)
class EnergyTrajectory:
    t: np.ndarray
    E: np.ndarray
    D: np.ndarray
    tag: str = "smooth"
    dt: float = math.nan
    steps: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def synthetic(cls, t, E, tag: str = "smooth") -> "EnergyTrajectory":
        t = np.asarray(t, dtype=float)
        E = np.asarray(E, dtype=float)
        return cls(t, E, np.full_like(E, math.nan), tag)

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def E_ref(self) -> float:
        """``(L u0 | u0) + |u1|^2 = 2 E(0)``."""
        return 2.0 * float(self.E[0])

    def weighted(self, m: float) -> np.ndarray:
        return (1.0 + self.t) ** (2.0 / m) * self.E / self.E_ref

    def rows(self, m: float | None = None) -> list[tuple]:
        w = self.weighted(m) if m else np.full_like(self.E, math.nan)
        return list(zip(self.t.tolist(), self.E.tolist(), self.D.tolist(), w.tolist()))


def _sample_steps(n_steps: int, samples: int | None) -> np.ndarray:
    if samples is None or samples >= n_steps + 1:
        return np.arange(n_steps + 1)
    if samples < 3:
        raise InvalidArgument("need at least 3 samples")
    # dense at the start, log-spaced afterwards
    idx = np.unique(np.concatenate((np.arange(min(n_steps, samples // 10) + 1),
                                    np.round(np.geomspace(1, n_steps, samples)).astype(np.int64))))
    return idx


def simulate(spectrum: Spectrum, gram: GramMatrix, y0, v0, t_end: float, dt: float,
             samples: int | None = None, tag: str = "smooth") -> EnergyTrajectory:
    """Implicit-midpoint integration from ``(y0, v0)`` up to ``t_end``.

    With ``samples=None`` E and D are recorded at every step. Otherwise about
    ``samples`` log-spaced step indices are recorded; the state is advanced
    between them with precomputed powers ``P^(2^i)`` of the one-step map.
    """
    if not dt > 0 or not t_end > 0:
        raise InvalidArgument("dt and t_end must be positive")
    y0 = np.asarray(y0, dtype=complex)
    v0 = np.asarray(v0, dtype=complex)
    n = gram.size
    if y0.shape != (n,) or v0.shape != (n,):
        raise InvalidArgument(f"initial data must have {n} modal components")
    if not (np.all(np.isfinite(y0)) and np.all(np.isfinite(v0))):
        raise InvalidArgument("initial data must be finite")
    if gram.k_lo != 1:
        raise InvalidArgument("the truncation must start at the first eigenspace")
    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise InvalidArgument("t_end shorter than one step")
    lam = gram.eigenvalues
    G = gram.matrix
    A = generator_matrix(gram)
    I = np.eye(2 * n)
    try:
        lu = lu_factor(I + 0.5 * dt * A)
    except (LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"implicit step matrix could not be factorised: {exc}") from exc
    P = lu_solve(lu, I - 0.5 * dt * A)
    if not np.all(np.isfinite(P)):
        raise NumericalFailure("implicit step produced non-finite entries")
    z = np.concatenate((np.sqrt(lam) * y0, v0))
    steps = _sample_steps(n_steps, samples)
    E = np.empty(len(steps))
    D = np.empty(len(steps))

    def record(i, z):
        v = z[n:]
        E[i] = 0.5 * float(np.vdot(z, z).real)
        D[i] = float(np.vdot(v, G @ v).real)

    record(0, z)
    if samples is None or len(steps) == n_steps + 1:
        for i in range(1, n_steps + 1):
            z = P @ z
            if not np.all(np.isfinite(z)):
                raise Diverged(f"non-finite state at step {i}")
            record(i, z)
    else:
        powers = [P]
        top = int(np.max(np.diff(steps)))
        while (1 << len(powers)) <= top:
            powers.append(powers[-1] @ powers[-1])
        for i in range(1, len(steps)):
            jump = int(steps[i] - steps[i - 1])
            b = 0
            while jump:
                if jump & 1:
                    z = powers[b] @ z
                jump >>= 1
                b += 1
            if not np.all(np.isfinite(z)):
                raise Diverged(f"non-finite state at step {steps[i]}")
            record(i, z)
    meta = {"modes": n, "scheme": "implicit-midpoint", "steps": n_steps}
    y = z[:n] / np.sqrt(lam)
    meta["final_state"] = (y, z[n:].copy())
    return EnergyTrajectory(steps * dt, E, D, tag, dt, steps, meta)


def dissipation_residual(trajectory: EnergyTrajectory) -> float:
    """``max_i |(E_{i+1} - E_{i-1}) / (t_{i+1} - t_{i-1}) + D_i| / (|D_i| + E_0 / t_end)``."""
    t, E, D = trajectory.t, trajectory.E, trajectory.D
    if len(t) < 3:
        raise InsufficientData("need at least 3 samples")
    dE = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    scale = np.abs(D[1:-1]) + E[0] / t[-1]
    return float(np.max(np.abs(dE + D[1:-1]) / scale))


def fit_decay_exponent(trajectory: EnergyTrajectory, tail_fraction: float = 0.5, points: int = 200,
                       floor: float = 1e-13, min_kept: int = 10) -> float:
    """Negated least-squares slope of ``log E`` against ``log(1 + t)`` on the tail.

    The window is the last ``tail_fraction`` of the ``log(1 + t)`` range and
    must span at least one decade in ``1 + t``. Samples are resampled at
    ``points`` log-spaced times. Energies below ``floor * E(0)`` are dropped;
    if fewer than ``min_kept`` samples remain the decay is reported as
    ``inf`` (faster than any power).
    """
    if not 0 < tail_fraction <= 1:
        raise InvalidArgument("tail_fraction must lie in (0, 1]")
    t, E = trajectory.t, trajectory.E
    s = np.log1p(t)
    s0 = s[-1] * (1.0 - tail_fraction)
    if (s[-1] - s0) < math.log(10.0) * (1 - 1e-9):
        raise InsufficientData("the tail window spans less than one decade in 1 + t")
    grid = np.linspace(s0, s[-1], points)
    logE = np.interp(grid, s, np.log(np.maximum(E, np.finfo(float).tiny)))
    keep = logE > math.log(floor * E[0])
    if np.count_nonzero(keep) < min_kept:
        return math.inf
    slope = np.polyfit(grid[keep], logE[keep], 1)[0]
    return float(-slope) + 0.0


@dataclass(frozen=True)
class DecayReport:
    m_pred: float
    rate_pred: float
    r_emp: float
    sup_weighted: float
    half_max: float
    growth: float
    bounded: bool
    tag: str


def verify_decay_bound(trajectory: EnergyTrajectory, m_pred: float, tail_fraction: float = 0.5,
                       growth_tol: float = 0.1) -> DecayReport:
    """Boundedness of ``(1 + t)^{2/m} E(t) / E_ref``.

    The running maximum over the whole run may exceed the maximum over the
    first half by less than ``growth_tol`` (relative).
    """
    if not m_pred > 0:
        raise InvalidArgument("m_pred must be positive")
    if trajectory.tag != "smooth":
        raise RefusedPrecondition("the decay bound applies to smooth data only")
    slope = trajectory.meta.get("energy_slope")
    if slope is not None and slope > SMOOTH_SLOPE_MAX:
        raise RefusedPrecondition(f"modal energy decays like lambda^{slope:.2f}; data is not smooth")
    W = trajectory.weighted(m_pred)
    half = trajectory.t <= trajectory.t_end / 2
    m_half = float(np.max(W[half]))
    m_full = float(np.max(W))
    growth = m_full / m_half - 1.0
    r_emp = fit_decay_exponent(trajectory, tail_fraction)
    return DecayReport(m_pred, 2.0 / m_pred, max(r_emp, 0.0), m_full, m_half, growth, growth < growth_tol,
                       trajectory.tag)


def spectral_abscissa(gram: GramMatrix) -> float:
    """Slowest exponential decay rate ``min Re eig(A)`` of the truncated generator."""
    return float(np.min(np.linalg.eigvals(generator_matrix(gram)).real))


def run_decay(spectrum: Spectrum, gram: GramMatrix, data: InitialData, t_end: float, dt: float,
              samples: int | None = 4000) -> EnergyTrajectory:
    """Simulate and attach the initial-data diagnostics to the trajectory metadata."""
    traj = simulate(spectrum, gram, data.y0, data.v0, t_end, dt, samples, tag=data.tag)
    traj.meta["energy_slope"] = data.energy_slope
    traj.meta["tail_fraction"] = data.tail_fraction
    traj.meta["spectral_abscissa"] = spectral_abscissa(gram)
    return traj
