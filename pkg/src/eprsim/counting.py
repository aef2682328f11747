"""The biased-coin double-counting demonstration and a counting auditor.

A theory that aggregates mutually exclusive potential outcomes as if they
were co-realizable counts more elements than the experiment produced; the
estimator built on such counts is blind to the data.  The coin shows the
effect in isolation: tallying both potential faces of every toss yields a
heads "likelihood" of exactly 1/2 no matter how biased the coin is.  The
auditor checks the one-to-one correspondence between counted elements and
experimental runs that any sound counting scheme must keep.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .core import SETTING_PAIRS, RunRecord
from .seeding import Stream, derive_seed

__all__ = [
    "Magnet",
    "CoinConfig",
    "TossRecord",
    "CountLedger",
    "CountAudit",
    "run_coin_experiment",
    "honest_frequency",
    "naive_double_count",
    "audit_counts",
    "toss_ledger",
    "potential_outcome_ledger",
    "run_product_ledger",
    "all_settings_ledger",
    "parse_magnets",
]


class Magnet(enum.Enum):
    """Orientation of the hidden magnet under the table."""

    N = "N"
    S = "S"


def parse_magnets(pattern: str) -> tuple[Magnet, ...]:
    try:
        return tuple(Magnet(ch) for ch in pattern.strip())
    except ValueError as exc:
        raise ValueError(f"magnet pattern may only contain N and S: {exc}") from exc


@dataclass(frozen=True)
class CoinConfig:
    """Head probabilities under the two magnet orientations.

    The defaults (7/10 and 3/10) are arbitrary symmetric choices; the biases
    are configuration, not measured constants.
    """

    bias_n: Fraction = Fraction(7, 10)
    bias_s: Fraction = Fraction(3, 10)

    def __post_init__(self):
        for label, bias in (("bias_n", self.bias_n), ("bias_s", self.bias_s)):
            bias = Fraction(bias)
            object.__setattr__(self, label, bias)
            if not 0 <= bias <= 1:
                raise ValueError(f"{label} must lie in [0, 1], got {bias}")

    def bias(self, magnet: Magnet) -> Fraction:
        return self.bias_n if magnet is Magnet.N else self.bias_s


@dataclass(frozen=True)
class TossRecord:
    toss_id: int
    magnet: Magnet
    head: bool


def run_coin_experiment(
    cfg: CoinConfig, choices: Sequence[Magnet], seed: int
) -> tuple[TossRecord, ...]:
    """Toss once per magnet choice, with the exact configured bias.

    Each toss draws from its own derived stream, so any single toss can be
    replayed and shards of the sequence can be generated independently.
    """
    if not choices:
        raise ValueError("need at least one magnet choice")
    log = []
    for toss_id, magnet in enumerate(choices):
        bias = cfg.bias(magnet)
        stream = Stream(derive_seed(seed, "coin", toss_id))
        head = stream.randrange(bias.denominator) < bias.numerator
        log.append(TossRecord(toss_id=toss_id, magnet=magnet, head=head))
    return tuple(log)


def honest_frequency(log: Sequence[TossRecord]) -> Fraction:
    """Heads over tosses, as an exact ratio."""
    if not log:
        raise ValueError("empty toss log")
    return Fraction(sum(1 for t in log if t.head), len(log))


def naive_double_count(log: Sequence[TossRecord]) -> Fraction:
    """The fallacious estimator, implemented faithfully rather than fixed.

    For every toss, both potential outcomes are entered into the tally as
    elements, the head-alternative scoring 1 and the tail-alternative 0.
    Two elements per toss, one of which is always the head: the result is
    exactly 1/2 for every possible log, including an all-heads log.
    """
    if not log:
        raise ValueError("empty toss log")
    head_score = 0
    counted_elements = 0
    for _ in log:
        for potential_is_head in (True, False):
            counted_elements += 1
            if potential_is_head:
                head_score += 1
    return Fraction(head_score, counted_elements)


@dataclass(frozen=True)
class CountLedger:
    """Labelled tallies of counted elements over a declared number of runs."""

    entries: tuple[tuple[str, int], ...]
    declared_run_count: int

    def __post_init__(self):
        for label, count in self.entries:
            if count < 0:
                raise ValueError(f"ledger entry {label!r} has negative count {count}")

    @property
    def total(self) -> int:
        return sum(count for _, count in self.entries)


@dataclass(frozen=True)
class CountAudit:
    """Result of the cardinality correspondence check."""

    ok: bool
    total: int
    run_count: int
    factor: Fraction


def audit_counts(ledger: CountLedger, run_count: int | None = None) -> CountAudit:
    """Check one counted element per experimental run.

    Sound counting requires a one-to-one correspondence between theory-side
    counts and experimental results; the overcount factor of the coin's
    potential-outcome ledger is 2, of the all-settings-per-run ledger 9.
    """
    if run_count is None:
        run_count = ledger.declared_run_count
    if run_count < 1:
        raise ValueError(f"run_count must be at least 1, got {run_count}")
    total = ledger.total
    return CountAudit(
        ok=total == run_count,
        total=total,
        run_count=run_count,
        factor=Fraction(total, run_count),
    )


def toss_ledger(log: Sequence[TossRecord]) -> CountLedger:
    """One counted element per actual toss."""
    return CountLedger(entries=(("tosses", len(log)),), declared_run_count=len(log))


def potential_outcome_ledger(log: Sequence[TossRecord]) -> CountLedger:
    """Both potential faces of every toss counted as elements."""
    n = len(log)
    return CountLedger(
        entries=(("potential heads", n), ("potential tails", n)),
        declared_run_count=n,
    )


def run_product_ledger(records: Iterable[RunRecord]) -> CountLedger:
    """One counted element per run: the product actually measured."""
    n = sum(1 for _ in records)
    return CountLedger(entries=(("measured products", n),), declared_run_count=n)


def all_settings_ledger(records: Iterable[RunRecord]) -> CountLedger:
    """Every run counted once per setting pair, as if all nine were measured."""
    n = sum(1 for _ in records)
    return CountLedger(
        entries=tuple((f"potential products at {pair.code}", n) for pair in SETTING_PAIRS),
        declared_run_count=n,
    )
