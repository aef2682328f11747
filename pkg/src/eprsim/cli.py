"""Command-line interface: table, bound, simulate, realize, coin, audit.

All sampling subcommands require an explicit ``--seed``; outputs are a pure
function of (arguments, seed).  Rationals serialize as ``num/den`` strings,
never floats; CSV uses a fixed header and LF line endings.  Exit status is 0
on success (an infeasible realizability verdict is a result, not an error),
1 on domain or I/O errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import counting, models, realizability, stats
from .classical import BoundReport, average_over_table
from .core import (
    INSTRUCTION_SETS,
    OUTCOME_PAIRS,
    SETTING_PAIRS,
    EprSimError,
    Outcome,
    ProbabilityVector8,
    RunRecord,
    parse_pair,
    parse_rational,
    product_table,
    validate_probability_vector,
)

CSV_HEADER = "run_id,pair,t1,t2,outcome1,outcome2,product"


# --- serialization helpers -------------------------------------------------


def _rat(value: Fraction) -> str:
    return str(value)


def _pvector_json(p: ProbabilityVector8) -> list[str]:
    return [_rat(w) for w in p.weights]


def _bound_report_json(report: BoundReport) -> dict[str, Any]:
    return {
        "average": _rat(report.average),
        "bound": _rat(report.bound),
        "satisfied": report.satisfied,
        "margin": _rat(report.margin),
        "at_equality": report.at_equality,
        "equality_rows": sorted(r.code for r in report.equality_rows),
    }


def _table_cells_json(table: realizability.PairDistribution) -> dict[str, str]:
    return {
        x.color + y.color: _rat(c) for (x, y), c in zip(OUTCOME_PAIRS, table.cells)
    }


def _nine_json(nine: realizability.NineDistributions) -> dict[str, dict[str, str]]:
    return {t.pair.code: _table_cells_json(t) for t in nine.tables}


def _nine_from_json(obj: Any) -> realizability.NineDistributions:
    if not isinstance(obj, dict):
        raise realizability.InvalidTablesError("input must be a JSON object")
    tables_obj = obj.get("tables", obj)
    if not isinstance(tables_obj, dict):
        raise realizability.InvalidTablesError("'tables' must be a JSON object")
    tables = []
    for code, cells in tables_obj.items():
        pair = parse_pair(code)
        if not isinstance(cells, dict):
            raise realizability.InvalidTablesError(
                f"table {code!r} must be an object of cells"
            )
        probs = {}
        for key, raw in cells.items():
            key = key.strip().upper()
            if len(key) != 2 or any(ch not in "GR" for ch in key):
                raise realizability.InvalidTablesError(
                    f"table {code!r}: cell key {key!r} must be two of G/R"
                )
            probs[Outcome.from_color(key[0]), Outcome.from_color(key[1])] = (
                parse_rational(raw)
            )
        tables.append(realizability.PairDistribution.from_mapping(pair, probs))
    return realizability.NineDistributions.from_tables(tables)


def _realizability_json(result: realizability.RealizabilityResult) -> dict[str, Any]:
    out: dict[str, Any] = {"status": result.status}
    if result.witness is not None:
        out["witness"] = _pvector_json(result.witness)
    if result.certificate is not None:
        out["certificate"] = [_rat(c) for c in result.certificate]
    return out


def _marginal_json(report: realizability.MarginalReport) -> dict[str, Any]:
    checks = []
    for check in report.checks:
        checks.append(
            {
                "side": check.side,
                "setting": check.setting.label,
                "consistent": check.consistent,
                "max_discrepancy": _rat(check.max_discrepancy),
                "marginals": [
                    {o.color: _rat(m[o]) for o in (Outcome.GREEN, Outcome.RED)}
                    for m in check.marginals
                ],
            }
        )
    return {"consistent": report.consistent, "checks": checks}


def _audit_json(audit: counting.CountAudit) -> dict[str, Any]:
    return {
        "ok": audit.ok,
        "total": audit.total,
        "run_count": audit.run_count,
        "factor": _rat(audit.factor),
    }


def _emit(args: argparse.Namespace, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_json(args: argparse.Namespace, obj: Any) -> None:
    _emit(args, json.dumps(obj, indent=2) + "\n")


def _load_json(path: str) -> Any:
    # parse_float receives the literal text, so decimal inputs rationalize
    # exactly instead of round-tripping through binary floats.
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh, parse_float=Fraction)


# --- argument parsing -------------------------------------------------------


def _parse_p_spec(spec: str) -> ProbabilityVector8:
    spec = spec.strip()
    if spec == "uniform":
        return ProbabilityVector8.uniform()
    if spec.startswith("@"):
        obj = _load_json(spec[1:])
        if isinstance(obj, dict):
            obj = obj.get("p")
        if not isinstance(obj, list):
            raise ValueError("probability file must hold a JSON array (or {'p': [...]})")
        return validate_probability_vector([parse_rational(v) for v in obj])
    return validate_probability_vector(
        [parse_rational(part.strip()) for part in spec.split(",")]
    )


def _resolve_model(selector: str) -> models.ExtendedModel:
    selector = selector.strip()
    if selector.startswith("@"):
        obj = _load_json(selector[1:])
        name = obj.get("model")
        if name == "static":
            return models.static_classical(
                validate_probability_vector([parse_rational(v) for v in obj["p"]])
            )
        if name in models.BUILTIN_MODELS:
            return models.BUILTIN_MODELS[name]()
        raise ValueError(f"unknown model name in config: {name!r}")
    if selector.startswith("static:"):
        return models.static_classical(_parse_p_spec(selector[len("static:") :]))
    if selector in models.BUILTIN_MODELS:
        return models.BUILTIN_MODELS[selector]()
    raise ValueError(
        f"unknown model {selector!r}; expected static:<p>, timeslot, desync, or @config.json"
    )


def _seed_value(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


# --- subcommands ------------------------------------------------------------


def cmd_table(args: argparse.Namespace) -> int:
    table = product_table()
    if args.format == "json":
        rows = [
            {
                "instruction_set": iset.code,
                "products": {pair.code: table[iset, pair] for pair in SETTING_PAIRS},
            }
            for iset in INSTRUCTION_SETS
        ]
        _emit_json(args, {"pairs": [p.code for p in SETTING_PAIRS], "rows": rows})
        return 0
    lines = []
    if args.format == "csv":
        lines.append("instruction_set," + ",".join(p.code for p in SETTING_PAIRS))
        for iset in INSTRUCTION_SETS:
            lines.append(
                iset.code + "," + ",".join(str(table[iset, pair]) for pair in SETTING_PAIRS)
            )
    else:
        lines.append("set " + " ".join(f"{p.code:>3}" for p in SETTING_PAIRS))
        for iset in INSTRUCTION_SETS:
            cells = " ".join(f"{table[iset, pair]:+3d}" for pair in SETTING_PAIRS)
            lines.append(f"{iset.code} {cells}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_bound(args: argparse.Namespace) -> int:
    p = _parse_p_spec(args.p)
    report = average_over_table(p)
    _emit_json(args, _bound_report_json(report))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    model = _resolve_model(args.model)
    acc = stats.StatsAccumulator()
    with open(args.out_log, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for record in models.simulate_runs(model, args.runs, args.seed):
            fh.write(
                f"{record.run_id},{record.pair.code},{record.t1},{record.t2},"
                f"{int(record.outcome1)},{int(record.outcome2)},{record.product}\n"
            )
            acc.add(record.pair, record.outcome1, record.outcome2)
    nine = stats.empirical_nine(acc)
    estimate = stats.average_estimate(acc)
    payload = {
        "per_pair_tables": _nine_json(nine),
        "overall_average_uniform": _rat(realizability.average_from_nine(nine)),
        "overall_average_runweighted": _rat(stats.product_average(acc)),
        "estimate": {
            "value": estimate.value,
            "std_error": estimate.std_error,
            "n": estimate.n,
        },
        "realizability": _realizability_json(realizability.joint_realizability(nine)),
        "marginals": _marginal_json(realizability.marginal_consistency(nine)),
    }
    with open(args.out_stats, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_realize(args: argparse.Namespace) -> int:
    nine = _nine_from_json(_load_json(args.input))
    result = realizability.joint_realizability(nine)
    _emit_json(args, _realizability_json(result))
    return 0


def cmd_coin(args: argparse.Namespace) -> int:
    cfg = counting.CoinConfig(
        bias_n=parse_rational(args.bias_n), bias_s=parse_rational(args.bias_s)
    )
    if args.choices.startswith("@"):
        pattern = Path(args.choices[1:]).read_text(encoding="utf-8")
        pattern = "".join(pattern.split())
    else:
        pattern = args.choices
    magnets = counting.parse_magnets(pattern) * args.repeat
    if not magnets:
        raise EprSimError("no magnet choices given")
    log = counting.run_coin_experiment(cfg, magnets, args.seed)
    payload = {
        "tosses": len(log),
        "honest_frequency": _rat(counting.honest_frequency(log)),
        "naive_estimate": _rat(counting.naive_double_count(log)),
        "audit": {
            "tosses": _audit_json(counting.audit_counts(counting.toss_ledger(log))),
            "potential_outcomes": _audit_json(
                counting.audit_counts(counting.potential_outcome_ledger(log))
            ),
        },
    }
    _emit_json(args, payload)
    return 0


def _read_run_log(path: str) -> list[RunRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise EprSimError(f"unexpected run log header: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            run_id, pair, t1, t2, o1, o2, product = line.split(",")
            records.append(
                RunRecord(
                    run_id=int(run_id),
                    pair=parse_pair(pair),
                    t1=int(t1),
                    t2=int(t2),
                    outcome1=Outcome.from_value(int(o1)),
                    outcome2=Outcome.from_value(int(o2)),
                    product=int(product),
                )
            )
    return records


def cmd_audit(args: argparse.Namespace) -> int:
    records = _read_run_log(args.log)
    if not records:
        raise EprSimError("run log holds no runs")
    payload = {
        "runs": len(records),
        "measured_products": _audit_json(
            counting.audit_counts(counting.run_product_ledger(records))
        ),
        "all_settings_per_run": _audit_json(
            counting.audit_counts(counting.all_settings_ledger(records))
        ),
    }
    _emit_json(args, payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprsim",
        description="Exact analysis and seeded simulation of two-station EPR experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_table = sub.add_parser("table", help="print the 8x9 instruction-set product table")
    p_table.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p_table.add_argument("--out", help="write to a file instead of stdout")
    p_table.set_defaults(func=cmd_table)

    p_bound = sub.add_parser("bound", help="evaluate the exact product-average bound")
    p_bound.add_argument(
        "--p",
        required=True,
        help="'uniform', eight comma-separated rationals, or @file.json",
    )
    p_bound.add_argument("--out", help="write to a file instead of stdout")
    p_bound.set_defaults(func=cmd_bound)

    p_sim = sub.add_parser("simulate", help="run a model and write a log and statistics")
    p_sim.add_argument(
        "--model",
        required=True,
        help="static:<p>, timeslot, desync, or @config.json",
    )
    p_sim.add_argument("--runs", type=int, required=True, help="number of runs (>= 9)")
    p_sim.add_argument("--seed", type=_seed_value, required=True)
    p_sim.add_argument("--out-log", required=True, help="run log CSV path")
    p_sim.add_argument("--out-stats", required=True, help="statistics JSON path")
    p_sim.set_defaults(func=cmd_simulate)

    p_real = sub.add_parser(
        "realize", help="decide joint realizability of nine pair tables"
    )
    p_real.add_argument("--input", required=True, help="JSON file with nine 2x2 tables")
    p_real.add_argument("--out", help="write to a file instead of stdout")
    p_real.set_defaults(func=cmd_realize)

    p_coin = sub.add_parser("coin", help="biased-coin double-counting demonstration")
    p_coin.add_argument("--bias-n", default="7/10", help="head probability, magnet N")
    p_coin.add_argument("--bias-s", default="3/10", help="head probability, magnet S")
    p_coin.add_argument(
        "--choices", required=True, help="magnet pattern like NNS, or @file"
    )
    p_coin.add_argument(
        "--repeat", type=int, default=1, help="repeat the pattern this many times"
    )
    p_coin.add_argument("--seed", type=_seed_value, required=True)
    p_coin.add_argument("--out", help="write to a file instead of stdout")
    p_coin.set_defaults(func=cmd_coin)

    p_audit = sub.add_parser("audit", help="cardinality audit of a run log")
    p_audit.add_argument("--log", required=True, help="run log CSV from 'simulate'")
    p_audit.add_argument("--out", help="write to a file instead of stdout")
    p_audit.set_defaults(func=cmd_audit)

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "runs", None) is not None and args.runs < 9:
        parser.error("--runs must be at least 9 so every pair can be sampled")
    try:
        return args.func(args)
    except (EprSimError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
