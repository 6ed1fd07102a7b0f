"""Independent reference computations used by the tests."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import eigsh


def modal_generator(lam, G):
    """First-order matrix of ``y'' + diag(lam) y + G y' = 0`` in ``z = (sqrt(lam) y, v)``."""
    lam = np.asarray(lam, dtype=float)
    n = len(lam)
    s = np.diag(np.sqrt(lam))
    A = np.zeros((2 * n, 2 * n), dtype=complex)
    A[:n, n:] = -s
    A[n:, :n] = s
    A[n:, n:] = G
    return A


def expm_energy(lam, G, y0, v0, times):
    """Energy along ``z(t) = exp(-tA) z0`` via an eigendecomposition of ``A``."""
    A = modal_generator(lam, G)
    w, V = np.linalg.eig(A)
    z0 = np.concatenate((np.sqrt(lam) * np.asarray(y0, dtype=complex), np.asarray(v0, dtype=complex)))
    c = np.linalg.solve(V, z0)
    out = []
    for t in times:
        z = V @ (np.exp(-w * t) * c)
        out.append(0.5 * float(np.vdot(z, z).real))
    return np.array(out)


def scalar_damped_energy(t):
    """``y'' + y' + y = 0``, ``y(0) = 1``, ``y'(0) = 0``: energy ``(y^2 + y'^2) / 2``."""
    t = np.asarray(t, dtype=float)
    w = math.sqrt(3) / 2
    y = np.exp(-t / 2) * (np.cos(w * t) + np.sin(w * t) / (2 * w))
    v = -np.exp(-t / 2) * np.sin(w * t) / w
    return 0.5 * (y**2 + v**2)


def fd_dirichlet_eigenvalues(a, length, cells, count):
    """Lowest eigenvalues of ``-(a u')' = lam u`` by sparse shift-invert on a flux grid."""
    h = length / cells
    x = np.linspace(0.0, length, cells + 1)
    am = a((x[:-1] + x[1:]) / 2)
    main = (am[:-1] + am[1:]) / h**2
    off = -am[1:-1] / h**2
    M = diags([off, main, off], [-1, 0, 1], format="csc")
    vals = eigsh(M, k=count, sigma=0.0, which="LM", return_eigenvectors=False)
    return np.sort(vals)


def lattice_spectrum(weights, cap):
    """Distinct values of ``sum w_j n_j^2 <= cap`` (integer weights) with multiplicities."""
    counts = {}
    n1 = 1
    while weights[0] * n1 * n1 <= cap:
        n2 = 1
        while weights[0] * n1 * n1 + weights[1] * n2 * n2 <= cap:
            v = weights[0] * n1 * n1 + weights[1] * n2 * n2
            counts[v] = counts.get(v, 0) + 1
            n2 += 1
        n1 += 1
    return sorted(counts.items())


def min_mu_gap(p, q, cap):
    """Smallest positive gap of ``n1^2 + (p/q) n2^2`` over components ``<= cap``, exactly."""
    vals = sorted({q * a * a + p * b * b for a in range(1, cap + 1) for b in range(1, cap + 1)})
    return Fraction(min(b - a for a, b in zip(vals, vals[1:])), q)
