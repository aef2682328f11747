"""Time-and-setting-dependent local models and the harness that measures them.

A model supplies station outcome functions of (own setting, shared source
value, local time, local instrument parameter, received message).  The remote
station's setting is not an input anywhere, so Einstein locality holds by
construction; everything else -- time laws, instrument parameter processes,
classical messages -- is the model author's playground.

Three demonstration models ship with the harness:

* ``static_classical(p)`` wraps an instruction-set law: a shared triple drawn
  at the source, read out identically at both stations.
* ``time_slot()`` makes the triple a deterministic function of the (shared,
  synchronized) measurement time: at every instant the stations agree
  pointwise, so the classical bound applies slot by slot.
* ``desync_time()`` uses the same pointwise outcome functions but per-station,
  per-setting time laws, so equal-time agreement survives while same-setting
  outcomes at different times may disagree and different setting pairs are
  measured at distinctly labelled times.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterator, Sequence

from .core import (
    INSTRUCTION_SETS,
    SETTING_PAIRS,
    SETTINGS,
    TIME_TICKS,
    EprSimError,
    Outcome,
    ProbabilityVector8,
    RunRecord,
    Setting,
    SettingPair,
)
from .realizability import (
    MarginalReport,
    NineDistributions,
    RealizabilityResult,
    average_from_nine,
    joint_realizability,
    marginal_consistency,
)
from .seeding import RunRandomness, Stream, derive_seed
from .stats import (
    Estimate,
    StatsAccumulator,
    average_estimate,
    empirical_nine,
    product_average,
)

__all__ = [
    "Station",
    "ModelEvaluationError",
    "SettingDependentMessageError",
    "SourceProcess",
    "ParameterProcess",
    "TimeLaw",
    "MessageFunction",
    "ExtendedModel",
    "InstructionSetSource",
    "NullSource",
    "NullParameters",
    "UniformTime",
    "SlotTime",
    "PerSettingSlotTime",
    "ConstantMessage",
    "TimeParityMessage",
    "SettingEchoMessage",
    "static_classical",
    "time_slot",
    "desync_time",
    "BUILTIN_MODELS",
    "run_once",
    "pair_schedule",
    "simulate_runs",
    "simulate_stats",
    "check_perfect_correlation",
    "check_setting_independence",
    "check_locality_invariance",
    "model_report",
    "CorrelationTally",
    "PerfectCorrelationReport",
    "IndependenceWitness",
    "SettingIndependenceReport",
    "ModelReport",
]


class Station(enum.Enum):
    """Which side of the experiment a draw belongs to."""

    S1 = 1
    S2 = 2


class ModelEvaluationError(EprSimError):
    """A model's own function rejected its inputs or returned a non-outcome."""


class SettingDependentMessageError(EprSimError):
    """A message function leaked the current setting; the model is refused."""

    def __init__(self, witness: "IndependenceWitness"):
        self.witness = witness
        super().__init__(
            f"message function output depends on the current setting "
            f"(probe {witness.probe})"
        )


class SourceProcess:
    """Shared source variable as a function of time and source randomness.

    The output may depend on the measurement time and on the run's source
    stream, never on any setting.  Both stations query the same realization:
    the harness hands each call a fresh stream in the same state, so equal
    times yield equal values.
    """

    def sample(self, time: int, stream: Stream) -> Any:
        raise NotImplementedError


class ParameterProcess:
    """Station-local instrument parameter: a deterministic function of
    (own setting, local time)."""

    def evaluate(self, setting: Setting, time: int) -> Any:
        raise NotImplementedError


class TimeLaw:
    """Measurement-time law for a station.

    A station's time may depend only on its own setting and local randomness.
    A ``synchronized`` law additionally reads the run's shared clock stream
    (classical randomness from the common past), which is how two stations
    can be forced to measure at the same instant without signalling.
    """

    synchronized: bool = False

    def sample(self, station: Station, setting: Setting, stream: Stream) -> int:
        raise NotImplementedError


class MessageFunction:
    """Classical channel between the stations.

    Anything may be communicated except information about the setting chosen
    in the current run.  The ``setting`` argument exists so the harness can
    audit that rule by substitution (see :func:`check_setting_independence`);
    a lawful message function ignores it.
    """

    def emit(
        self, time: int, history: Sequence[RunRecord], stream: Stream, setting: Setting
    ) -> Any:
        raise NotImplementedError


OutcomeFunction = Callable[[Setting, Any, int, Any, Any], Outcome]


@dataclass(frozen=True)
class ExtendedModel:
    """A complete local model: source, parameter processes, time law, outcomes.

    The outcome functions receive (own setting, source value, local time,
    local parameter, received message); the remote setting is not an input.
    """

    name: str
    source: SourceProcess
    param_s1: ParameterProcess
    param_s2: ParameterProcess
    time_law: TimeLaw
    outcome_s1: OutcomeFunction
    outcome_s2: OutcomeFunction
    message: MessageFunction | None = None


# --- concrete processes -------------------------------------------------


class InstructionSetSource(SourceProcess):
    """Draws an instruction set from exact weights; ignores time."""

    def __init__(self, p: ProbabilityVector8):
        self.p = p
        denominator = 1
        for w in p.weights:
            denominator = denominator * w.denominator // math.gcd(
                denominator, w.denominator
            )
        cumulative = []
        acc = 0
        for w in p.weights:
            acc += w.numerator * (denominator // w.denominator)
            cumulative.append(acc)
        self._denominator = denominator
        self._cumulative = cumulative

    def sample(self, time: int, stream: Stream) -> Any:
        draw = stream.randrange(self._denominator)
        return INSTRUCTION_SETS[bisect.bisect_right(self._cumulative, draw)]


class NullSource(SourceProcess):
    def sample(self, time: int, stream: Stream) -> Any:
        return None


class NullParameters(ParameterProcess):
    def evaluate(self, setting: Setting, time: int) -> Any:
        return None


class UniformTime(TimeLaw):
    """Uniform 64-bit time; synchronized by default (one shared clock draw)."""

    def __init__(self, synchronized: bool = True):
        self.synchronized = synchronized

    def sample(self, station: Station, setting: Setting, stream: Stream) -> int:
        return stream.bits64()


_SLOT_SHIFT = 61  # top 3 bits of the tick count select one of 8 time slots


class SlotTime(TimeLaw):
    """Coarse synchronized clock: both stations land in the same of 8 slots."""

    synchronized = True

    def sample(self, station: Station, setting: Setting, stream: Stream) -> int:
        return stream.randrange(8) << _SLOT_SHIFT


class PerSettingSlotTime(TimeLaw):
    """Independent per-station slot draws, offset by the local setting.

    Times for different settings are never bit-equal, so each setting pair is
    measured at its own labelled instants; equal-setting draws coincide with
    probability 1/8.
    """

    synchronized = False

    def sample(self, station: Station, setting: Setting, stream: Stream) -> int:
        return (stream.randrange(8) << _SLOT_SHIFT) | (setting.value << (_SLOT_SHIFT - 2))


class ConstantMessage(MessageFunction):
    def __init__(self, value: Any = "ping"):
        self.value = value

    def emit(self, time, history, stream, setting):
        return self.value


class TimeParityMessage(MessageFunction):
    """Communicates a function of the local time only."""

    def emit(self, time, history, stream, setting):
        return (time >> _SLOT_SHIFT) & 1


class SettingEchoMessage(MessageFunction):
    """Deliberately unlawful: copies the current setting into the channel."""

    def emit(self, time, history, stream, setting):
        return setting.label


# --- built-in demonstration models ---------------------------------------


def _instruction_readout(setting, source_value, time, param, message) -> Outcome:
    return source_value.outcome(setting)


def _slot_readout(setting, source_value, time, param, message) -> Outcome:
    return INSTRUCTION_SETS[time >> _SLOT_SHIFT].outcome(setting)


def static_classical(p: ProbabilityVector8) -> ExtendedModel:
    """Instruction-set model: a shared triple drawn from ``p`` drives both stations."""
    return ExtendedModel(
        name="static",
        source=InstructionSetSource(p),
        param_s1=NullParameters(),
        param_s2=NullParameters(),
        time_law=UniformTime(synchronized=True),
        outcome_s1=_instruction_readout,
        outcome_s2=_instruction_readout,
    )


def time_slot() -> ExtendedModel:
    """Deterministic outcomes of (setting, time slot) with equal forced times."""
    return ExtendedModel(
        name="timeslot",
        source=NullSource(),
        param_s1=NullParameters(),
        param_s2=NullParameters(),
        time_law=SlotTime(),
        outcome_s1=_slot_readout,
        outcome_s2=_slot_readout,
    )


def desync_time() -> ExtendedModel:
    """Same pointwise outcomes as ``time_slot`` but per-setting local time laws."""
    return ExtendedModel(
        name="desync",
        source=NullSource(),
        param_s1=NullParameters(),
        param_s2=NullParameters(),
        time_law=PerSettingSlotTime(),
        outcome_s1=_slot_readout,
        outcome_s2=_slot_readout,
    )


BUILTIN_MODELS: dict[str, Callable[[], ExtendedModel]] = {
    "timeslot": time_slot,
    "desync": desync_time,
}


# --- the harness ----------------------------------------------------------


def _draw_run(
    model: ExtendedModel,
    pair: SettingPair,
    rand: RunRandomness,
    history: Sequence[RunRecord],
) -> tuple[int, int, Outcome, Outcome]:
    law = model.time_law
    try:
        if law.synchronized:
            t1 = law.sample(Station.S1, pair.left, rand.stream("time"))
            t2 = law.sample(Station.S2, pair.right, rand.stream("time"))
        else:
            t1 = law.sample(Station.S1, pair.left, rand.stream("time_s1"))
            t2 = law.sample(Station.S2, pair.right, rand.stream("time_s2"))
        value1 = model.source.sample(t1, rand.stream("source"))
        value2 = model.source.sample(t2, rand.stream("source"))
        param1 = model.param_s1.evaluate(pair.left, t1)
        param2 = model.param_s2.evaluate(pair.right, t2)
        message_to_s1 = message_to_s2 = None
        if model.message is not None:
            message_to_s2 = model.message.emit(
                t1, history, rand.stream("message_s1"), pair.left
            )
            message_to_s1 = model.message.emit(
                t2, history, rand.stream("message_s2"), pair.right
            )
        o1 = model.outcome_s1(pair.left, value1, t1, param1, message_to_s1)
        o2 = model.outcome_s2(pair.right, value2, t2, param2, message_to_s2)
        if o1.__class__ is not Outcome:
            o1 = Outcome(o1)
        if o2.__class__ is not Outcome:
            o2 = Outcome(o2)
    except EprSimError:
        raise
    except Exception as exc:
        raise ModelEvaluationError(
            f"model {model.name!r} failed on run {rand.run_id}, pair {pair.code}: {exc}"
        ) from exc
    return t1, t2, o1, o2


def run_once(
    model: ExtendedModel,
    pair: SettingPair,
    rand: RunRandomness,
    history: Sequence[RunRecord] = (),
) -> RunRecord:
    """Execute one run: sample times, source, parameters, messages, outcomes."""
    t1, t2, o1, o2 = _draw_run(model, pair, rand, history)
    return RunRecord(
        run_id=rand.run_id,
        pair=pair,
        t1=t1,
        t2=t2,
        outcome1=o1,
        outcome2=o2,
        product=int(o1) * int(o2),
    )


def pair_schedule(
    master_seed: int,
    scope: str,
    pairs: Sequence[SettingPair] = SETTING_PAIRS,
) -> Iterator[SettingPair]:
    """Uniform random pair choices in balanced blocks.

    Each block of ``len(pairs)`` runs covers every pair exactly once in a
    seeded random order, so each run's pair is uniformly distributed while
    pair frequencies are exactly uniform per block and no pair can starve.
    """
    block = 0
    while True:
        order = list(pairs)
        Stream(derive_seed(master_seed, scope, "pair-block", block)).shuffle(order)
        yield from order
        block += 1


def simulate_runs(
    model: ExtendedModel,
    n_runs: int,
    seed: int,
    scope: str = "main",
) -> Iterator[RunRecord]:
    """Run the model ``n_runs`` times, yielding records in run-id order.

    Message functions receive the history of all prior records of this
    simulation; history tracking is skipped for message-free models.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be at least 1, got {n_runs}")
    schedule = pair_schedule(seed, scope)
    scope_base = derive_seed(seed, scope)
    history: list[RunRecord] = []
    keep_history = model.message is not None
    for run_id in range(n_runs):
        pair = next(schedule)
        record = run_once(
            model, pair, RunRandomness(seed, run_id, scope, scope_base), history
        )
        if keep_history:
            history.append(record)
        yield record


def simulate_stats(
    model: ExtendedModel,
    n_runs: int,
    seed: int,
    scope: str = "main",
) -> StatsAccumulator:
    """Accumulate counts for ``n_runs`` without materializing run records."""
    if n_runs < 1:
        raise ValueError(f"n_runs must be at least 1, got {n_runs}")
    acc = StatsAccumulator()
    if model.message is not None:
        for record in simulate_runs(model, n_runs, seed, scope):
            acc.add(record.pair, record.outcome1, record.outcome2)
        return acc
    schedule = pair_schedule(seed, scope)
    scope_base = derive_seed(seed, scope)
    add = acc.add
    draw = _draw_run
    randomness = RunRandomness
    empty: tuple[RunRecord, ...] = ()
    for run_id in range(n_runs):
        pair = next(schedule)
        _, _, o1, o2 = draw(model, pair, randomness(seed, run_id, scope, scope_base), empty)
        add(pair, o1, o2)
    return acc


@dataclass(frozen=True)
class CorrelationTally:
    """Agreement counts for one diagonal setting."""

    runs: int
    agreements: int
    equal_time_runs: int
    equal_time_agreements: int

    @property
    def agreement_rate(self) -> Fraction | None:
        if self.runs == 0:
            return None
        return Fraction(self.agreements, self.runs)

    @property
    def equal_time_agreement_rate(self) -> Fraction | None:
        if self.equal_time_runs == 0:
            return None
        return Fraction(self.equal_time_agreements, self.equal_time_runs)


@dataclass(frozen=True)
class PerfectCorrelationReport:
    """Same-setting agreement, overall and restricted to bit-equal times."""

    per_setting: dict[Setting, CorrelationTally]
    combined: CorrelationTally


def check_perfect_correlation(
    model: ExtendedModel,
    n_runs: int,
    seed: int,
    scope: str = "correlation",
) -> PerfectCorrelationReport:
    """Run diagonal pairs only and tally same-setting agreement rates."""
    if n_runs < 1:
        raise ValueError(f"n_runs must be at least 1, got {n_runs}")
    diagonal = tuple(SettingPair(s, s) for s in SETTINGS)
    schedule = pair_schedule(seed, scope, pairs=diagonal)
    scope_base = derive_seed(seed, scope)
    tallies = {s: [0, 0, 0, 0] for s in SETTINGS}
    history: list[RunRecord] = []
    keep_history = model.message is not None
    for run_id in range(n_runs):
        pair = next(schedule)
        rand = RunRandomness(seed, run_id, scope, scope_base)
        if keep_history:
            record = run_once(model, pair, rand, history)
            history.append(record)
            t1, t2, o1, o2 = record.t1, record.t2, record.outcome1, record.outcome2
        else:
            t1, t2, o1, o2 = _draw_run(model, pair, rand, ())
        tally = tallies[pair.left]
        agree = o1 is o2
        tally[0] += 1
        tally[1] += agree
        if t1 == t2:
            tally[2] += 1
            tally[3] += agree
    per_setting = {s: CorrelationTally(*tallies[s]) for s in SETTINGS}
    combined = CorrelationTally(
        runs=sum(t[0] for t in tallies.values()),
        agreements=sum(t[1] for t in tallies.values()),
        equal_time_runs=sum(t[2] for t in tallies.values()),
        equal_time_agreements=sum(t[3] for t in tallies.values()),
    )
    return PerfectCorrelationReport(per_setting=per_setting, combined=combined)


@dataclass(frozen=True)
class IndependenceWitness:
    """A probe on which a message function's output varied with the setting."""

    probe: int
    time: int
    history: tuple[RunRecord, ...]
    outputs: dict[Setting, Any]


@dataclass(frozen=True)
class SettingIndependenceReport:
    passed: bool
    probes: int
    witness: IndependenceWitness | None = None


def check_setting_independence(
    message: MessageFunction,
    probe_count: int,
    seed: int,
    scope: str = "independence",
) -> SettingIndependenceReport:
    """Probe a message function for dependence on the current setting.

    For each probe, the function is evaluated on one random (time, history,
    randomness) triple with the setting slot substituted by each of the three
    settings; randomness is replayed identically across the substitutions, so
    any variation in output pinpoints a leak.
    """
    if probe_count < 1:
        raise ValueError(f"probe_count must be at least 1, got {probe_count}")
    for probe in range(probe_count):
        rand = RunRandomness(seed, probe, scope)
        time = rand.stream("probe-time").bits64()
        history = _synthetic_history(rand.stream("probe-history"))
        outputs = {
            setting: message.emit(time, history, rand.stream("message"), setting)
            for setting in SETTINGS
        }
        first = outputs[SETTINGS[0]]
        if any(outputs[s] != first for s in SETTINGS[1:]):
            return SettingIndependenceReport(
                passed=False,
                probes=probe + 1,
                witness=IndependenceWitness(
                    probe=probe, time=time, history=history, outputs=outputs
                ),
            )
    return SettingIndependenceReport(passed=True, probes=probe_count)


def _synthetic_history(stream: Stream) -> tuple[RunRecord, ...]:
    records = []
    for run_id in range(stream.randrange(3)):
        pair = SETTING_PAIRS[stream.randrange(9)]
        o1 = Outcome.GREEN if stream.randrange(2) else Outcome.RED
        o2 = Outcome.GREEN if stream.randrange(2) else Outcome.RED
        records.append(
            RunRecord(
                run_id=run_id,
                pair=pair,
                t1=stream.bits64(),
                t2=stream.bits64(),
                outcome1=o1,
                outcome2=o2,
                product=int(o1) * int(o2),
            )
        )
    return tuple(records)


def check_locality_invariance(
    model: ExtendedModel, n_probes: int, seed: int, scope: str = "locality"
) -> bool:
    """Audit that a message-free model's outcomes ignore the remote setting.

    Replays each probe run with the remote setting substituted by all three
    values, everything else fixed; a station's outcome must never change.
    Message-carrying models are excluded: a received message may lawfully
    depend on the remote station's local time.
    """
    if model.message is not None:
        raise ValueError("locality audit by substitution applies to message-free models")
    if n_probes < 1:
        raise ValueError(f"n_probes must be at least 1, got {n_probes}")
    for probe in range(n_probes):
        rand = RunRandomness(seed, probe, scope)
        own = SETTINGS[probe % 3]
        outcomes1 = {
            _draw_run(model, SettingPair(own, remote), rand, ())[2]
            for remote in SETTINGS
        }
        outcomes2 = {
            _draw_run(model, SettingPair(remote, own), rand, ())[3]
            for remote in SETTINGS
        }
        if len(outcomes1) != 1 or len(outcomes2) != 1:
            return False
    return True


@dataclass(frozen=True)
class ModelReport:
    """Everything the harness measures about a model in one batch."""

    model_name: str
    n_runs: int
    seed: int
    accumulator: StatsAccumulator
    nine: NineDistributions
    estimate: Estimate
    average_uniform: Fraction
    average_runweighted: Fraction
    marginals: MarginalReport
    realizability: RealizabilityResult
    correlation: PerfectCorrelationReport
    independence: SettingIndependenceReport | None


def model_report(
    model: ExtendedModel,
    n_runs: int,
    seed: int,
    correlation_runs: int | None = None,
    independence_probes: int = 300,
) -> ModelReport:
    """Simulate a model and measure it against all the structural conditions.

    Models whose message function fails the setting-independence audit are
    refused outright.  The report carries the empirical tables (exact count
    ratios), the product average under both weightings, the marginal
    consistency verdict, the exact realizability decision, and the
    same-setting agreement rates.
    """
    if n_runs < 9:
        raise ValueError(f"n_runs must be at least 9, got {n_runs}")
    independence = None
    if model.message is not None:
        independence = check_setting_independence(
            model.message, independence_probes, seed, scope="independence"
        )
        if not independence.passed:
            raise SettingDependentMessageError(independence.witness)
    acc = simulate_stats(model, n_runs, seed, scope="main")
    nine = empirical_nine(acc)
    return ModelReport(
        model_name=model.name,
        n_runs=n_runs,
        seed=seed,
        accumulator=acc,
        nine=nine,
        estimate=average_estimate(acc),
        average_uniform=average_from_nine(nine),
        average_runweighted=product_average(acc),
        marginals=marginal_consistency(nine),
        realizability=joint_realizability(nine),
        correlation=check_perfect_correlation(
            model, correlation_runs if correlation_runs is not None else n_runs, seed
        ),
        independence=independence,
    )
