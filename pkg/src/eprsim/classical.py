"""Exact evaluation of the classical instruction-set model.

Two independent routes to the same average are provided: the table route
(:func:`average_over_table`) sums products straight out of the 8x9 product
table, and the square-sum route (:func:`average_by_square_sum`) uses the
perfect-correlation identity to rewrite each row's contribution as a squared
color sum.  Their exact agreement, and the 1/9 lower bound, are the module's
central invariants.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    INSTRUCTION_SETS,
    SETTING_PAIRS,
    SETTINGS,
    InstructionSet,
    Outcome,
    ProbabilityVector8,
    Setting,
    product_table,
)

__all__ = [
    "CLASSICAL_BOUND",
    "BoundReport",
    "row_average",
    "square_sum",
    "condition_i_holds",
    "average_over_table",
    "average_by_square_sum",
    "boundary_rows",
    "matches_target",
]

# Lower bound on the all-pairs product average for any distribution over
# instruction sets.
CLASSICAL_BOUND: Fraction = Fraction(1, 9)


def station_1_outcome(iset: InstructionSet, setting: Setting) -> Outcome:
    """Outcome at station S1 when the run carries ``iset``."""
    return iset.outcome(setting)


def station_2_outcome(iset: InstructionSet, setting: Setting) -> Outcome:
    """Outcome at station S2; the same shared triple drives both stations."""
    return iset.outcome(setting)


def condition_i_holds(iset: InstructionSet) -> bool:
    """Check same-setting agreement of the two stations.

    Always true for instruction sets, since one triple drives both stations;
    the check exists because time-dependent models can break it.
    """
    return all(
        station_1_outcome(iset, s) == station_2_outcome(iset, s) for s in SETTINGS
    )


def row_average(iset: InstructionSet) -> Fraction:
    """Average product over the nine setting pairs for one instruction set."""
    table = product_table()
    return Fraction(sum(table[iset, pair] for pair in SETTING_PAIRS), 9)


def square_sum(iset: InstructionSet) -> int:
    """Square of the summed color values; equals 1 for mixed triples, 9 otherwise."""
    return sum(int(o) for o in iset.triple) ** 2


@functools.cache
def boundary_rows() -> frozenset[InstructionSet]:
    """Instruction sets whose row average sits exactly on the 1/9 bound."""
    return frozenset(
        iset for iset in INSTRUCTION_SETS if row_average(iset) == CLASSICAL_BOUND
    )


@dataclass(frozen=True)
class BoundReport:
    """Exact evaluation of the product average against the 1/9 bound."""

    average: Fraction
    bound: Fraction
    satisfied: bool
    margin: Fraction
    equality_rows: frozenset[InstructionSet]

    @property
    def at_equality(self) -> bool:
        return self.margin == 0


def average_over_table(p: ProbabilityVector8) -> BoundReport:
    """All-pairs product average of a distribution, via the product table.

    The average is affine in ``p`` and never falls below 1/9; it equals 1/9
    exactly when ``p`` is supported on the six mixed rows.
    """
    average = sum(
        (p.weight(iset) * row_average(iset) for iset in INSTRUCTION_SETS),
        start=Fraction(0),
    )
    return BoundReport(
        average=average,
        bound=CLASSICAL_BOUND,
        satisfied=average >= CLASSICAL_BOUND,
        margin=average - CLASSICAL_BOUND,
        equality_rows=boundary_rows(),
    )


def average_by_square_sum(p: ProbabilityVector8) -> Fraction:
    """The same average computed through the squared color-sum identity.

    Perfect same-setting correlation lets the product of the two stations'
    summed outcomes collapse to a single squared sum per row; each square is
    at least 1, which is where the 1/9 bound comes from.  Agrees exactly with
    :func:`average_over_table` for every valid ``p``.
    """
    total = sum(
        (p.weight(iset) * square_sum(iset) for iset in INSTRUCTION_SETS),
        start=Fraction(0),
    )
    return total / 9


def matches_target(
    average: Fraction, target: Fraction = Fraction(0), tolerance: Fraction = Fraction(0)
) -> bool:
    """Compare an exact average against an externally supplied target value.

    The quantum-mechanical prediction is "about 0"; no numeric tolerance is
    canonical, so the caller chooses one (default: exact equality).
    """
    if tolerance < 0:
        raise ValueError(f"tolerance must be nonnegative, got {tolerance}")
    return abs(average - target) <= tolerance
