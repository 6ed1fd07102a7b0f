"""Decay predictions ``m = 3 + 2 gamma0 + 4 gamma1`` and the scenario catalogue."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

from .errors import InvalidArgument


def _exact(x):
    """Keep rationals exact; leave floats alone."""
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class ScenarioPrediction:
    scenario: str
    gamma0: Fraction | float
    gamma1: Fraction | float
    m: Fraction | float
    energy_rate: Fraction | float
    claimed_rate: Fraction | float | None = None
    claimed_m: Fraction | float | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def flagged(self) -> bool:
        return bool(self.flags)

    def row(self) -> tuple:
        fmt = lambda v: "" if v is None else str(v)
        return (self.scenario, fmt(self.gamma0), fmt(self.gamma1), fmt(self.m), fmt(self.energy_rate),
                fmt(self.claimed_rate), fmt(self.claimed_m), ";".join(self.flags))


def predicted_m(gamma0, gamma1, scenario: str = "") -> ScenarioPrediction:
    """Assemble ``m`` and the energy rate ``2/m``, exactly for rational input."""
    g0, g1 = _exact(gamma0), _exact(gamma1)
    m = 3 + 2 * g0 + 4 * g1
    if not m > 0:
        raise InvalidArgument(f"m = {m} is not positive; the decay statement is vacuous")
    rate = (Fraction(2) / m) if isinstance(m, Fraction) else 2.0 / m
    return ScenarioPrediction(scenario, g0, g1, m, rate)


FLAG_VISCOUS_1D = "claimed m=4 uses 2*gamma1; m = 3 + 2*gamma0 + 4*gamma1 gives 5"
FLAG_EPSILON = "claimed rate 2/(m0+eps) disagrees with m=m0+4*eps"


def scenario_table(epsilon=Fraction(1, 10)) -> list[ScenarioPrediction]:
    """The six catalogued scenarios with their claimed rates attached.

    Predictions always use ``m = 3 + 2 gamma0 + 4 gamma1``. A row is flagged
    when its claimed rate differs from ``2/m``; the flag text names the kind
    of discrepancy.
    """
    eps = _exact(epsilon)
    if not eps > 0:
        raise InvalidArgument("epsilon must be positive")
    half = Fraction(1, 2)
    rows = [
        ("interval-kelvin-voigt-strip", -1, half, Fraction(2, 3), None, ()),
        ("interval-viscous-strip", 0, half, Fraction(1, 2), Fraction(4), (FLAG_VISCOUS_1D,)),
        ("square-kelvin-voigt-strip", -1, 1, Fraction(2, 5), None, ()),
        ("square-viscous-strip", 0, 1, Fraction(2, 7), None, ()),
        ("algebraic-rectangle-kelvin-voigt", -1, 2 + eps, 2 / (9 + eps), 9 + eps, (FLAG_EPSILON,)),
        ("algebraic-rectangle-viscous", 0, 2 + eps, 2 / (11 + eps), 11 + eps, (FLAG_EPSILON,)),
    ]
    out = []
    for name, g0, g1, claimed, claimed_m, kinds in rows:
        p = predicted_m(g0, g1, name)
        flags = kinds if claimed != p.energy_rate else ()
        out.append(ScenarioPrediction(p.scenario, p.gamma0, p.gamma1, p.m, p.energy_rate, claimed,
                                      claimed_m, flags))
    return out


def flag_kinds(table: list[ScenarioPrediction]) -> set[str]:
    return {f for row in table for f in row.flags}
