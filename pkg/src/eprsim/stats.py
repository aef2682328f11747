"""Run aggregation: mergeable counters and estimates with uncertainty.

Table math stays in exact rationals; floating point appears only inside
:class:`Estimate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    OUTCOME_PAIRS,
    PAIR_INDEX,
    SETTING_PAIRS,
    EprSimError,
    Outcome,
    RunRecord,
    SettingPair,
)
from .realizability import NineDistributions, PairDistribution

__all__ = [
    "EmptyPairError",
    "StatsAccumulator",
    "Estimate",
    "accumulate",
    "merge",
    "empirical_nine",
    "average_estimate",
    "product_average",
]


class EmptyPairError(EprSimError):
    """Some setting pair was never sampled, so its table is undefined."""


_CELL_INDEX = {xy: i for i, xy in enumerate(OUTCOME_PAIRS)}

# Outcome product of each canonical cell (GG, GR, RG, RR).
_CELL_PRODUCT = tuple(int(x) * int(y) for x, y in OUTCOME_PAIRS)

_GREEN = Outcome.GREEN


@dataclass
class StatsAccumulator:
    """Per-pair joint outcome counts for a batch of runs."""

    cells: list[list[int]] = field(
        default_factory=lambda: [[0, 0, 0, 0] for _ in SETTING_PAIRS]
    )
    total_runs: int = 0

    def add(self, pair: SettingPair, outcome1: Outcome, outcome2: Outcome) -> None:
        cell = (0 if outcome1 is _GREEN else 2) + (0 if outcome2 is _GREEN else 1)
        self.cells[PAIR_INDEX[pair]][cell] += 1
        self.total_runs += 1

    def count(self, pair: SettingPair, outcome1: Outcome, outcome2: Outcome) -> int:
        return self.cells[PAIR_INDEX[pair]][_CELL_INDEX[outcome1, outcome2]]

    def pair_total(self, pair: SettingPair) -> int:
        return sum(self.cells[PAIR_INDEX[pair]])

    def pair_counts(self) -> dict[SettingPair, dict[tuple[Outcome, Outcome], int]]:
        return {
            pair: dict(zip(OUTCOME_PAIRS, self.cells[i]))
            for i, pair in enumerate(SETTING_PAIRS)
        }

    def product_sum(self) -> int:
        """Sum of outcome products over all recorded runs."""
        return sum(
            count * prod
            for row in self.cells
            for count, prod in zip(row, _CELL_PRODUCT)
        )

    def copy(self) -> "StatsAccumulator":
        return StatsAccumulator(
            cells=[list(row) for row in self.cells], total_runs=self.total_runs
        )


def accumulate(acc: StatsAccumulator, record: RunRecord) -> StatsAccumulator:
    """Count one run into the accumulator; returns the same accumulator."""
    acc.add(record.pair, record.outcome1, record.outcome2)
    return acc


def merge(a: StatsAccumulator, b: StatsAccumulator) -> StatsAccumulator:
    """Cellwise sum; associative and commutative with the empty accumulator as identity."""
    return StatsAccumulator(
        cells=[[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a.cells, b.cells)],
        total_runs=a.total_runs + b.total_runs,
    )


def empirical_nine(acc: StatsAccumulator) -> NineDistributions:
    """Exact count-ratio tables, one per pair; every pair must have been sampled."""
    tables = []
    for i, pair in enumerate(SETTING_PAIRS):
        total = sum(acc.cells[i])
        if total == 0:
            raise EmptyPairError(f"pair {pair.code} was never sampled")
        tables.append(
            PairDistribution(
                pair, tuple(Fraction(c, total) for c in acc.cells[i])
            )
        )
    return NineDistributions(tuple(tables))


@dataclass(frozen=True)
class Estimate:
    """A mean with its standard error; the only floating-point type here."""

    value: float
    std_error: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not self.std_error >= 0:
            raise ValueError(f"std_error must be nonnegative, got {self.std_error}")


def product_average(acc: StatsAccumulator) -> Fraction:
    """Exact run-weighted mean of the outcome products."""
    if acc.total_runs == 0:
        raise ValueError("no runs recorded")
    return Fraction(acc.product_sum(), acc.total_runs)


def average_estimate(acc: StatsAccumulator) -> Estimate:
    """Mean outcome product with its sampling standard error."""
    n = acc.total_runs
    if n < 2:
        raise ValueError(f"need at least 2 runs for a standard error, got {n}")
    s = acc.product_sum()
    # Products are +-1, so the sample variance reduces to (n^2 - s^2)/(n(n-1)).
    variance = Fraction(n * n - s * s, n * (n - 1))
    return Estimate(
        value=s / n,
        std_error=math.sqrt(variance / n),
        n=n,
    )
