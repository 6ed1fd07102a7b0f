"""Walk through the spectral side: eigenvalues, their gaps, and what the gaps cost.

Run:  python demos/spectra_and_gaps.py
"""

import math
from fractions import Fraction

import mpmath
import numpy as np

from dampwave import (
    Coefficient1D,
    Domain1D,
    RationalRatio,
    RectangleDomain,
    build_spectrum_1d_constant,
    build_spectrum_1d_piecewise,
    build_spectrum_rectangle,
    fit_gamma1,
    irrational_gap_witness,
    rational_gap_bound,
    roth_gap_check,
)

pi = math.pi

# the interval: lambda_k = k^2, gaps grow like 2k
line = build_spectrum_1d_constant(Domain1D(pi), 200)
print("interval, first eigenvalues:", line.eigenvalues[:6])
g = fit_gamma1(line)
print(f"gap quotient exponent on the interval: gamma1 = {g.gamma1:.4f}")

# a jump in the coefficient: a = 1 on the left half, 4 on the right
jump = Coefficient1D.piecewise([pi / 2], [1.0, 4.0])
pw = build_spectrum_1d_piecewise(Domain1D(pi), jump, 12)
print("\npiecewise coefficient, two interleaved branches:")
for e in pw.entries[:8]:
    print(f"  {e.tag:>6}  {e.value:12.6f}")

# the square: eigenvalues n1^2 + n2^2 cluster, so consecutive gaps stay O(1)
sq = build_spectrum_rectangle(RectangleDomain((pi, pi)), 4e4)
print(f"\nsquare: {len(sq)} distinct eigenvalues below 4e4, {sq.mode_count} modes")
print(f"gap quotient exponent on the square: gamma1 = {fit_gamma1(sq).gamma1:.4f}")

# rational aspect ratio: every gap is at least 1/q in the scaled lattice
for xi in (Fraction(3, 2), Fraction(5, 7)):
    b = rational_gap_bound(RationalRatio.from_fraction(xi), 100)
    print(f"xi = {xi}: bound {b.bound}, smallest gap found {b.attained}")

# irrational aspect ratio: continued fractions produce gaps as small as we like
for eps in (1.0, 0.1, 0.01, 0.001):
    w = irrational_gap_witness(lambda: mpmath.sqrt(2), eps)
    print(f"xi = sqrt 2, eps = {eps:g}: n = {w.n}, m = {w.m}, gap = {w.gap:.3e}")

# but for an algebraic ratio the gaps cannot close faster than a power of lambda
rect = RectangleDomain((pi, pi / 2**0.25))
for cap in (5e3, 1e4, 2e4):
    rc = roth_gap_check(build_spectrum_rectangle(rect, cap), 0.1)
    print(f"cap {cap:g}: min gap * lambda^1.1 = {rc.c0_empirical:.4f} (at k = {rc.argmin_k})")

print("\nsmallest gaps on the sqrt 2 rectangle below 2e4:")
s = build_spectrum_rectangle(rect, 2e4)
d = np.diff(s.eigenvalues)
for i in np.argsort(d)[:5]:
    print(f"  lambda = {s.eigenvalues[i]:10.3f}  gap = {d[i]:.3e}")
