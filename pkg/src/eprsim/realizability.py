"""Joint realizability of nine observed pair distributions.

Given one 2x2 outcome table per setting pair, decide exactly whether a single
setting-independent distribution over the eight instruction sets reproduces
all nine tables, and produce a verifiable artifact either way: a witness
distribution when feasible, a rational infeasibility certificate when not.

The decision is a rational linear feasibility problem: 8 unknown weights,
36 equality constraints (one per table cell, heavily redundant), weights
nonnegative.  The coefficient matrix is a fixed 0/1 matrix determined by the
instruction sets, so it is reduced once, exactly, at import; each query then
costs one small matrix-vector product plus an interval intersection along the
one-dimensional kernel.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import (
    INSTRUCTION_SETS,
    OUTCOME_PAIRS,
    SETTING_PAIRS,
    SETTINGS,
    EprSimError,
    InstructionSet,
    Outcome,
    ProbabilityVector8,
    Setting,
    SettingPair,
)

__all__ = [
    "InvalidTablesError",
    "MalformedCertificateError",
    "PairDistribution",
    "NineDistributions",
    "MarginalCheck",
    "MarginalReport",
    "RealizabilityResult",
    "nine_from_p",
    "first_marginal",
    "second_marginal",
    "marginal_consistency",
    "average_from_nine",
    "joint_realizability",
    "verify_certificate",
    "constraint_rows",
]


class InvalidTablesError(EprSimError):
    """A pair table violates its invariants or the nine-table set is malformed."""


class MalformedCertificateError(EprSimError):
    """A certificate is not a vector of 36 rationals."""


@dataclass(frozen=True)
class PairDistribution:
    """Joint outcome distribution for one setting pair.

    ``cells`` holds the four probabilities in canonical cell order
    (GG, GR, RG, RR), left station first.
    """

    pair: SettingPair
    cells: tuple[Fraction, Fraction, Fraction, Fraction]

    def __post_init__(self):
        if len(self.cells) != 4:
            raise InvalidTablesError(
                f"table {self.pair.code}: expected 4 cells, got {len(self.cells)}"
            )
        cells = tuple(Fraction(c) for c in self.cells)
        object.__setattr__(self, "cells", cells)
        for (x, y), value in zip(OUTCOME_PAIRS, cells):
            if value < 0:
                raise InvalidTablesError(
                    f"table {self.pair.code}: cell ({x.color},{y.color}) is negative: {value}"
                )
        total = sum(cells)
        if total != 1:
            raise InvalidTablesError(
                f"table {self.pair.code}: cells sum to {total}, not 1"
            )

    @classmethod
    def from_mapping(
        cls, pair: SettingPair, probs: Mapping[tuple[Outcome, Outcome], Fraction]
    ) -> "PairDistribution":
        missing = [xy for xy in OUTCOME_PAIRS if xy not in probs]
        if missing or len(probs) != 4:
            raise InvalidTablesError(
                f"table {pair.code}: need exactly the 4 outcome cells, missing {missing}"
            )
        return cls(pair, tuple(probs[xy] for xy in OUTCOME_PAIRS))

    def prob(self, left: Outcome, right: Outcome) -> Fraction:
        return self.cells[OUTCOME_PAIRS.index((left, right))]

    def as_mapping(self) -> dict[tuple[Outcome, Outcome], Fraction]:
        return dict(zip(OUTCOME_PAIRS, self.cells))

    @property
    def expectation(self) -> Fraction:
        """Expected product of the two outcomes."""
        return sum(
            (int(x) * int(y) * c for (x, y), c in zip(OUTCOME_PAIRS, self.cells)),
            start=Fraction(0),
        )


@dataclass(frozen=True)
class NineDistributions:
    """One pair distribution for each of the nine setting pairs, canonical order."""

    tables: tuple[PairDistribution, ...]

    def __post_init__(self):
        if len(self.tables) != 9:
            raise InvalidTablesError(f"expected 9 tables, got {len(self.tables)}")
        for table, pair in zip(self.tables, SETTING_PAIRS):
            if table.pair != pair:
                raise InvalidTablesError(
                    f"tables out of canonical order: found {table.pair.code}, "
                    f"expected {pair.code}"
                )

    @classmethod
    def from_tables(cls, tables: Iterable[PairDistribution]) -> "NineDistributions":
        by_pair: dict[SettingPair, PairDistribution] = {}
        for table in tables:
            if table.pair in by_pair:
                raise InvalidTablesError(f"duplicate table for pair {table.pair.code}")
            by_pair[table.pair] = table
        missing = [p.code for p in SETTING_PAIRS if p not in by_pair]
        if missing:
            raise InvalidTablesError(f"missing tables for pairs: {', '.join(missing)}")
        return cls(tuple(by_pair[p] for p in SETTING_PAIRS))

    def table(self, pair: SettingPair) -> PairDistribution:
        return self.tables[SETTING_PAIRS.index(pair)]


def nine_from_p(p: ProbabilityVector8) -> NineDistributions:
    """Forward map: the nine tables produced by a shared instruction-set law."""
    tables = []
    for pair in SETTING_PAIRS:
        cells = []
        for x, y in OUTCOME_PAIRS:
            mass = sum(
                (
                    p.weight(iset)
                    for iset in INSTRUCTION_SETS
                    if iset.outcome(pair.left) is x and iset.outcome(pair.right) is y
                ),
                start=Fraction(0),
            )
            cells.append(mass)
        tables.append(PairDistribution(pair, tuple(cells)))
    return NineDistributions(tuple(tables))


def first_marginal(d: PairDistribution) -> dict[Outcome, Fraction]:
    """Distribution of the left station's outcome."""
    out = {Outcome.GREEN: Fraction(0), Outcome.RED: Fraction(0)}
    for (x, _), c in zip(OUTCOME_PAIRS, d.cells):
        out[x] += c
    return out


def second_marginal(d: PairDistribution) -> dict[Outcome, Fraction]:
    """Distribution of the right station's outcome."""
    out = {Outcome.GREEN: Fraction(0), Outcome.RED: Fraction(0)}
    for (_, y), c in zip(OUTCOME_PAIRS, d.cells):
        out[y] += c
    return out


@dataclass(frozen=True)
class MarginalCheck:
    """Comparison of one station's outcome distribution across remote settings."""

    side: str  # "left" or "right"
    setting: Setting
    marginals: tuple[dict[Outcome, Fraction], ...]  # one per remote setting
    consistent: bool
    max_discrepancy: Fraction


@dataclass(frozen=True)
class MarginalReport:
    checks: tuple[MarginalCheck, ...]
    consistent: bool


def marginal_consistency(nine: NineDistributions) -> MarginalReport:
    """Check that each station's marginal is the same in every remote context.

    This is a necessary condition for joint realizability, not a sufficient
    one; discrepancies are reported exactly.
    """
    checks = []
    for setting in SETTINGS:
        marg = tuple(
            first_marginal(nine.table(SettingPair(setting, remote)))
            for remote in SETTINGS
        )
        checks.append(_marginal_check("left", setting, marg))
    for setting in SETTINGS:
        marg = tuple(
            second_marginal(nine.table(SettingPair(remote, setting)))
            for remote in SETTINGS
        )
        checks.append(_marginal_check("right", setting, marg))
    return MarginalReport(
        checks=tuple(checks), consistent=all(c.consistent for c in checks)
    )


def _marginal_check(
    side: str, setting: Setting, marginals: tuple[dict[Outcome, Fraction], ...]
) -> MarginalCheck:
    reference = marginals[0]
    discrepancy = max(
        abs(m[o] - reference[o]) for m in marginals for o in (Outcome.GREEN, Outcome.RED)
    )
    return MarginalCheck(
        side=side,
        setting=setting,
        marginals=marginals,
        consistent=discrepancy == 0,
        max_discrepancy=discrepancy,
    )


def average_from_nine(nine: NineDistributions) -> Fraction:
    """Product average over the nine tables, each pair weighted 1/9."""
    return sum((t.expectation for t in nine.tables), start=Fraction(0)) / 9


# --- exact feasibility ------------------------------------------------------


def constraint_rows() -> tuple[tuple[SettingPair, tuple[Outcome, Outcome]], ...]:
    """Canonical order of the 36 equality constraints (pair-major, cell-minor).

    Certificates returned by :func:`joint_realizability` and accepted by
    :func:`verify_certificate` assign one rational coefficient per entry of
    this tuple.
    """
    return tuple((pair, xy) for pair in SETTING_PAIRS for xy in OUTCOME_PAIRS)


@functools.cache
def _forward_matrix() -> tuple[tuple[int, ...], ...]:
    """36x8 coefficient matrix of the forward map, canonical constraint order."""
    rows = []
    for pair, (x, y) in constraint_rows():
        rows.append(
            tuple(
                1
                if iset.outcome(pair.left) is x and iset.outcome(pair.right) is y
                else 0
                for iset in INSTRUCTION_SETS
            )
        )
    return tuple(rows)


def _rhs_vector(nine: NineDistributions) -> list[Fraction]:
    return [cell for table in nine.tables for cell in table.cells]


@dataclass(frozen=True)
class _Elimination:
    """Exact Gauss-Jordan reduction of the fixed constraint matrix.

    ``transform`` rows satisfy transform[k] @ A = reduced[k]; rows beyond
    ``rank`` have reduced[k] = 0 and act as consistency tests on the right
    hand side.  ``kernel`` spans the null space of A.
    """

    rank: int
    pivot_columns: tuple[int, ...]
    reduced: tuple[tuple[Fraction, ...], ...]
    transform: tuple[tuple[Fraction, ...], ...]
    kernel: tuple[tuple[Fraction, ...], ...]


@functools.cache
def _elimination() -> _Elimination:
    matrix = _forward_matrix()
    m = len(matrix)
    n = len(matrix[0])
    reduced = [[Fraction(v) for v in row] for row in matrix]
    transform = [
        [Fraction(1) if i == j else Fraction(0) for j in range(m)] for i in range(m)
    ]
    pivot_columns: list[int] = []
    row = 0
    for col in range(n):
        pivot = next((r for r in range(row, m) if reduced[r][col] != 0), None)
        if pivot is None:
            continue
        reduced[row], reduced[pivot] = reduced[pivot], reduced[row]
        transform[row], transform[pivot] = transform[pivot], transform[row]
        scale = reduced[row][col]
        reduced[row] = [v / scale for v in reduced[row]]
        transform[row] = [v / scale for v in transform[row]]
        for r in range(m):
            if r != row and reduced[r][col] != 0:
                factor = reduced[r][col]
                reduced[r] = [a - factor * b for a, b in zip(reduced[r], reduced[row])]
                transform[r] = [
                    a - factor * b for a, b in zip(transform[r], transform[row])
                ]
        pivot_columns.append(col)
        row += 1
    rank = row
    free_columns = [c for c in range(n) if c not in pivot_columns]
    kernel = []
    for free in free_columns:
        vec = [Fraction(0)] * n
        vec[free] = Fraction(1)
        for r, pc in enumerate(pivot_columns):
            vec[pc] = -reduced[r][free]
        kernel.append(tuple(vec))
    elim = _Elimination(
        rank=rank,
        pivot_columns=tuple(pivot_columns),
        reduced=tuple(tuple(r) for r in reduced),
        transform=tuple(tuple(t) for t in transform),
        kernel=tuple(kernel),
    )
    # The canonical system always has a one-dimensional kernel; the decision
    # logic below relies on it.
    if len(elim.kernel) != 1:
        raise AssertionError(
            f"constraint system kernel has dimension {len(elim.kernel)}, expected 1"
        )
    return elim


@dataclass(frozen=True)
class RealizabilityResult:
    """Outcome of the joint realizability decision.

    Exactly one of ``witness`` and ``certificate`` is set.  A witness is a
    distribution whose forward map reproduces all nine tables; a certificate
    is a rational coefficient per equality constraint whose combination is
    nonnegative on every weight direction yet has negative constant term.
    """

    feasible: bool
    witness: ProbabilityVector8 | None = None
    certificate: tuple[Fraction, ...] | None = None

    @property
    def status(self) -> str:
        return "feasible" if self.feasible else "infeasible"


def _dot(row: Sequence[Fraction], vec: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(row, vec) if a != 0), start=Fraction(0))


def joint_realizability(nine: NineDistributions) -> RealizabilityResult:
    """Decide exactly whether one instruction-set law reproduces all nine tables.

    Feasible results carry the lexicographically smallest basic feasible
    witness in canonical row order; infeasible results carry a certificate
    that :func:`verify_certificate` accepts.
    """
    if not isinstance(nine, NineDistributions):
        raise InvalidTablesError(f"expected NineDistributions, got {type(nine).__name__}")
    elim = _elimination()
    b = _rhs_vector(nine)
    n = len(INSTRUCTION_SETS)

    values = [_dot(elim.transform[r], b) for r in range(len(elim.transform))]

    # Rows reduced to zero test linear consistency of the right hand side.
    for r in range(elim.rank, len(values)):
        if values[r] != 0:
            certificate = elim.transform[r]
            if values[r] > 0:
                certificate = tuple(-v for v in certificate)
            return _certified_infeasible(certificate, nine)

    # Particular solution with the free coordinate at zero, then intersect the
    # solution line with the nonnegative orthant.
    particular = [Fraction(0)] * n
    for r, col in enumerate(elim.pivot_columns):
        particular[col] = values[r]
    kernel = elim.kernel[0]

    lower = upper = None
    lower_at = upper_at = None
    for l in range(n):
        k = kernel[l]
        if k == 0:
            if particular[l] < 0:
                return _certified_infeasible(
                    _combination_certificate({l: Fraction(1)}, elim), nine
                )
            continue
        bound = -particular[l] / k
        if k > 0:
            if lower is None or bound > lower:
                lower, lower_at = bound, l
        else:
            if upper is None or bound < upper:
                upper, upper_at = bound, l

    if lower is not None and upper is not None and lower > upper:
        # The two binding nonnegativity constraints combine, with positive
        # weights, into a functional that is constant along the solution line
        # and negative there.
        phi = {
            lower_at: abs(kernel[upper_at]),
            upper_at: abs(kernel[lower_at]),
        }
        return _certified_infeasible(_combination_certificate(phi, elim), nine)

    t = _lexmin_parameter(particular, kernel, lower, upper)
    witness_weights = tuple(particular[l] + t * kernel[l] for l in range(n))
    witness = ProbabilityVector8(witness_weights)
    return RealizabilityResult(feasible=True, witness=witness)


def _lexmin_parameter(
    particular: Sequence[Fraction],
    kernel: Sequence[Fraction],
    lower: Fraction | None,
    upper: Fraction | None,
) -> Fraction:
    """Parameter of the lexicographically smallest point on the feasible segment."""
    for l in range(len(particular)):
        if kernel[l] > 0:
            assert lower is not None
            return lower
        if kernel[l] < 0:
            assert upper is not None
            return upper
    return Fraction(0)


def _combination_certificate(
    phi: Mapping[int, Fraction], elim: _Elimination
) -> tuple[Fraction, ...]:
    """Lift a nonnegative row-space functional to constraint coefficients.

    ``phi`` maps weight coordinates to nonnegative coefficients; it must lie
    in the row space of the constraint matrix, which holds whenever it
    annihilates the kernel.
    """
    n = len(INSTRUCTION_SETS)
    target = [phi.get(l, Fraction(0)) for l in range(n)]
    multipliers = [target[col] for col in elim.pivot_columns]
    rebuilt = [
        sum(
            (multipliers[r] * elim.reduced[r][l] for r in range(elim.rank)),
            start=Fraction(0),
        )
        for l in range(n)
    ]
    if rebuilt != target:
        raise AssertionError("functional does not lie in the constraint row space")
    m = len(elim.transform[0])
    certificate = tuple(
        sum(
            (multipliers[r] * elim.transform[r][k] for r in range(elim.rank)),
            start=Fraction(0),
        )
        for k in range(m)
    )
    return certificate


def _certified_infeasible(
    certificate: tuple[Fraction, ...], nine: NineDistributions
) -> RealizabilityResult:
    if not verify_certificate(certificate, nine):
        raise AssertionError("internal certificate failed verification")
    return RealizabilityResult(feasible=False, certificate=certificate)


def verify_certificate(certificate: Sequence[Fraction], nine: NineDistributions) -> bool:
    """Check an infeasibility certificate by direct arithmetic.

    The certificate's combination of the 36 equality constraints must be
    nonnegative on every weight coordinate while its constant term is
    negative; any nonnegative weight vector would then satisfy an impossible
    inequality.  All checks are exact.
    """
    try:
        coefficients = [Fraction(c) for c in certificate]
    except (TypeError, ValueError) as exc:
        raise MalformedCertificateError(f"certificate entries not rational: {exc}") from exc
    matrix = _forward_matrix()
    if len(coefficients) != len(matrix):
        raise MalformedCertificateError(
            f"certificate must have {len(matrix)} coefficients, got {len(coefficients)}"
        )
    b = _rhs_vector(nine)
    for l in range(len(INSTRUCTION_SETS)):
        combined = sum(
            (coefficients[k] * matrix[k][l] for k in range(len(matrix))),
            start=Fraction(0),
        )
        if combined < 0:
            return False
    constant = sum(
        (coefficients[k] * b[k] for k in range(len(matrix))), start=Fraction(0)
    )
    return constant < 0
