"""Shared vocabulary: settings, outcomes, instruction sets, exact probabilities, run records.

Everything here is exact and immutable.  Probabilities are
:class:`fractions.Fraction` values; no floating point enters this module, so
equality cases of the classical bound can be detected exactly.
"""

from __future__ import annotations

import enum
import functools
import types
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Union

__all__ = [
    "EprSimError",
    "NegativeEntryError",
    "SumNotOneError",
    "Setting",
    "SETTINGS",
    "Outcome",
    "OUTCOMES",
    "OUTCOME_PAIRS",
    "SettingPair",
    "SETTING_PAIRS",
    "InstructionSet",
    "INSTRUCTION_SETS",
    "Rational",
    "parse_rational",
    "format_rational",
    "parse_setting",
    "parse_pair",
    "parse_instruction_set",
    "ProbabilityVector8",
    "validate_probability_vector",
    "TIME_TICKS",
    "RunRecord",
    "product_table",
]


class EprSimError(Exception):
    """Base class for domain errors raised by this package."""


class NegativeEntryError(EprSimError):
    """A probability entry is negative."""

    def __init__(self, index: int, value: Fraction):
        self.index = index
        self.value = value
        super().__init__(f"entry {index} is negative: {value}")


class SumNotOneError(EprSimError):
    """Probability entries do not sum to one; carries the exact deficit."""

    def __init__(self, total: Fraction):
        self.total = total
        self.deficit = 1 - total
        super().__init__(f"entries sum to {total}, deficit {self.deficit}")


Rational = Fraction

RationalLike = Union[Fraction, int, str]


def parse_rational(value: RationalLike) -> Fraction:
    """Parse a rational from an int, Fraction, or 'num/den' / decimal string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # Floats must be rationalized from their literal text by the caller
        # (e.g. json parse_float); accepting them here would reconstruct the
        # nearest binary float instead.
        raise ValueError(f"refusing float {value!r}; pass a string or Fraction")
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ValueError(f"not a rational: {value!r}") from exc


def format_rational(value: Fraction) -> str:
    """Render a rational as 'num/den' in lowest terms ('n' when integral)."""
    return str(value)


class Setting(enum.Enum):
    """One of the three measurement settings available at each station."""

    A = 0
    B = 1
    C = 2

    def __init__(self, index: int):
        # plain instance attribute; ``value`` routes through enum descriptors,
        # which is too slow for the simulation inner loop
        self.index = index
        self.label = self._name_.lower()

    def __lt__(self, other: "Setting") -> bool:
        if not isinstance(other, Setting):
            return NotImplemented
        return self.index < other.index

    def __str__(self) -> str:
        return self.label


SETTINGS: tuple[Setting, Setting, Setting] = (Setting.A, Setting.B, Setting.C)


def parse_setting(text: str) -> Setting:
    try:
        return Setting[text.strip().upper()]
    except KeyError as exc:
        raise ValueError(f"unknown setting {text!r}; expected one of a, b, c") from exc


class Outcome(enum.IntEnum):
    """A detector outcome: +1 (green flash) or -1 (red flash)."""

    GREEN = 1
    RED = -1

    @property
    def color(self) -> str:
        return "G" if self is Outcome.GREEN else "R"

    @classmethod
    def from_color(cls, color: str) -> "Outcome":
        if color == "G":
            return cls.GREEN
        if color == "R":
            return cls.RED
        raise ValueError(f"unknown outcome color {color!r}; expected 'G' or 'R'")

    @classmethod
    def from_value(cls, value: int) -> "Outcome":
        if value == 1:
            return cls.GREEN
        if value == -1:
            return cls.RED
        raise ValueError(f"outcome value must be +1 or -1, got {value!r}")


OUTCOMES: tuple[Outcome, Outcome] = (Outcome.GREEN, Outcome.RED)

# Canonical order of joint-outcome cells in a 2x2 pair table.
OUTCOME_PAIRS: tuple[tuple[Outcome, Outcome], ...] = (
    (Outcome.GREEN, Outcome.GREEN),
    (Outcome.GREEN, Outcome.RED),
    (Outcome.RED, Outcome.GREEN),
    (Outcome.RED, Outcome.RED),
)


class SettingPair(NamedTuple):
    """An ordered choice of settings: left at station S1, right at station S2."""

    left: Setting
    right: Setting

    @property
    def code(self) -> str:
        return self.left.label + self.right.label

    @property
    def diagonal(self) -> bool:
        return self.left is self.right

    def __str__(self) -> str:
        return self.code


SETTING_PAIRS: tuple[SettingPair, ...] = tuple(
    SettingPair(left, right) for left in SETTINGS for right in SETTINGS
)

PAIR_INDEX: dict[SettingPair, int] = {pair: i for i, pair in enumerate(SETTING_PAIRS)}


def parse_pair(text: str) -> SettingPair:
    text = text.strip()
    if len(text) != 2:
        raise ValueError(f"setting pair must be two letters, got {text!r}")
    return SettingPair(parse_setting(text[0]), parse_setting(text[1]))


class InstructionSet(enum.Enum):
    """A pre-assigned color triple fixing the outcome for every setting.

    The eight members are declared in canonical row order; ``value`` is the
    row index used throughout for probability vectors and witnesses.
    """

    RRR = 0
    RRG = 1
    RGR = 2
    GRR = 3
    GGR = 4
    GRG = 5
    RGG = 6
    GGG = 7

    def __init__(self, row: int):
        self.row = row
        self.triple = tuple(Outcome.from_color(ch) for ch in self._name_)

    @property
    def code(self) -> str:
        return self.name

    def outcome(self, setting: Setting) -> Outcome:
        """Outcome this instruction set dictates for the given setting."""
        return self.triple[setting.index]

    @property
    def colors(self) -> dict[Setting, Outcome]:
        return {s: self.triple[s.index] for s in SETTINGS}

    def __str__(self) -> str:
        return self.name


INSTRUCTION_SETS: tuple[InstructionSet, ...] = tuple(InstructionSet)


def parse_instruction_set(code: str) -> InstructionSet:
    try:
        return InstructionSet[code.strip().upper()]
    except KeyError as exc:
        raise ValueError(f"unknown instruction set {code!r}") from exc


@functools.cache
def product_table() -> types.MappingProxyType:
    """The full 8x9 table of outcome products.

    Maps ``(instruction_set, pair)`` to the product ``+1`` or ``-1`` the two
    stations report when both particles carry that instruction set; the entry
    factorizes as the left color times the right color.
    """
    table = {
        (iset, pair): int(iset.outcome(pair.left)) * int(iset.outcome(pair.right))
        for iset in INSTRUCTION_SETS
        for pair in SETTING_PAIRS
    }
    return types.MappingProxyType(table)


@dataclass(frozen=True)
class ProbabilityVector8:
    """Exact distribution over the eight instruction sets.

    Entries are validated on construction: every weight must be a nonnegative
    rational and the weights must sum to exactly one.
    """

    weights: tuple[Fraction, ...]

    def __post_init__(self):
        weights = tuple(parse_rational(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if len(weights) != len(INSTRUCTION_SETS):
            raise ValueError(f"expected 8 weights, got {len(weights)}")
        for i, w in enumerate(weights):
            if w < 0:
                raise NegativeEntryError(i, w)
        total = sum(weights)
        if total != 1:
            raise SumNotOneError(total)

    @classmethod
    def uniform(cls) -> "ProbabilityVector8":
        return cls(tuple(Fraction(1, 8) for _ in INSTRUCTION_SETS))

    @classmethod
    def point_mass(cls, row: InstructionSet) -> "ProbabilityVector8":
        return cls(tuple(Fraction(1 if iset is row else 0) for iset in INSTRUCTION_SETS))

    def weight(self, row: InstructionSet) -> Fraction:
        return self.weights[row.row]

    def support(self) -> frozenset[InstructionSet]:
        return frozenset(iset for iset in INSTRUCTION_SETS if self.weights[iset.row] > 0)

    def __iter__(self):
        return iter(self.weights)


def validate_probability_vector(values: Iterable[RationalLike]) -> ProbabilityVector8:
    """Validate eight raw rationals as an exact probability vector."""
    return ProbabilityVector8(tuple(values))


# Times are 64-bit binary fractions of the unit observation window: an
# integer tick count t in [0, TIME_TICKS) denotes the instant t / TIME_TICKS.
# "Same time" means bit-identical tick counts.
TIME_TICKS: int = 1 << 64


@dataclass(frozen=True)
class RunRecord:
    """One simulated run: chosen pair, local measurement times, outcomes."""

    run_id: int
    pair: SettingPair
    t1: int
    t2: int
    outcome1: Outcome
    outcome2: Outcome
    product: int

    def __post_init__(self):
        if self.run_id < 0:
            raise ValueError(f"run_id must be nonnegative, got {self.run_id}")
        for label, t in (("t1", self.t1), ("t2", self.t2)):
            if not 0 <= t < TIME_TICKS:
                raise ValueError(f"{label} out of range [0, 2**64): {t}")
        if self.product != int(self.outcome1) * int(self.outcome2):
            raise ValueError(
                f"product {self.product} does not equal outcome1*outcome2 "
                f"({int(self.outcome1)}*{int(self.outcome2)})"
            )
