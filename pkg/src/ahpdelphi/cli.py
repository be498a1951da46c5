"""Offline batch interface to the pipeline.

Every subcommand is pure: identical inputs and flags produce byte-identical
output. Exit codes: 0 success, 1 domain or input errors, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .ahp import (
    RI_TABLE_SEED,
    ComparisonMatrix,
    PriorityVector,
    consistency,
    principal_eigen,
    random_index,
)
from .canonical import canonical_json
from .consensus import (
    Ranking,
    StakeholderWeight,
    aggregate_aip,
    concordance,
    ranking_conflicts,
)
from .errors import AhpDelphiError
from .utility import (
    PreferenceFunction,
    UtilityMode,
    build_utility,
    evaluate,
    export_utility,
    import_utility,
)


class InputError(Exception):
    """Bad input file; message carries a file/field diagnostic."""


def _load_json(path: str) -> object:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise InputError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _field(data: dict, name: str, path: str):
    if not isinstance(data, dict) or name not in data:
        raise InputError(f"{path}: missing field {name!r}")
    return data[name]


def _load_matrix(path: str) -> ComparisonMatrix:
    data = _load_json(path)
    try:
        return ComparisonMatrix.from_dict(data)
    except AhpDelphiError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_rankings(path: str) -> list[tuple[str, Ranking]]:
    data = _load_json(path)
    attributes = tuple(_field(data, "attributes", path))
    out = []
    for idx, entry in enumerate(_field(data, "rankings", path)):
        sid = entry.get("stakeholder_id", f"stakeholder{idx + 1}")
        try:
            out.append((sid, Ranking(attributes, tuple(_field(entry, "ranks", path)))))
        except AhpDelphiError as exc:
            raise InputError(f"{path}: rankings[{idx}]: {exc}") from exc
    if not out:
        raise InputError(f"{path}: no rankings given")
    return out


def _load_vectors(path: str):
    data = _load_json(path)
    vectors = []
    abstentions = []
    for idx, entry in enumerate(_field(data, "vectors", path)):
        sid = _field(entry, "stakeholder_id", path)
        attrs = tuple(_field(entry, "attributes", path))
        try:
            vec = PriorityVector(attrs, tuple(_field(entry, "values", path)))
        except (ValueError, AhpDelphiError) as exc:
            raise InputError(f"{path}: vectors[{idx}]: {exc}") from exc
        vectors.append((sid, vec))
        abstentions.extend((sid, aid) for aid in entry.get("abstentions", ()))
    attribute_ids = data.get("attributes")
    return vectors, abstentions, tuple(attribute_ids) if attribute_ids else None


def _load_weights(path: str) -> list[StakeholderWeight]:
    data = _load_json(path)
    out = []
    for idx, entry in enumerate(_field(data, "weights", path)):
        try:
            out.append(
                StakeholderWeight(
                    _field(entry, "stakeholder_id", path),
                    float(_field(entry, "weight", path)),
                )
            )
        except (AhpDelphiError, ValueError) as exc:
            raise InputError(f"{path}: weights[{idx}]: {exc}") from exc
    return out


def _load_preferences(path: str) -> dict[str, PreferenceFunction]:
    data = _load_json(path)
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected an object of attribute -> preference")
    out = {}
    for aid, spec in data.items():
        try:
            out[aid] = PreferenceFunction.from_dict(spec)
        except (AhpDelphiError, KeyError, ValueError) as exc:
            raise InputError(f"{path}: {aid}: {exc}") from exc
    return out


def _emit(document: dict, table_lines: list[str], fmt: str) -> None:
    if fmt == "json":
        sys.stdout.write(canonical_json(document) + "\n")
    else:
        sys.stdout.write("\n".join(table_lines) + "\n")


def _f3(x: float) -> str:
    return f"{x:.3f}"


# --- subcommand handlers ---------------------------------------------------


def _cmd_priorities(args) -> int:
    matrix = _load_matrix(args.matrix)
    if args.require_consistent:
        report = consistency(matrix)
        if not report.consistent:
            sys.stderr.write(
                f"matrix is inconsistent: CR {report.cr:.4f} > 0.10 "
                f"({len(report.offending_triples)} offending triples)\n"
            )
            return 1
    lam, priorities = principal_eigen(matrix)
    document = {
        "lambda_max": lam,
        "attributes": list(priorities.attribute_ids),
        "values": list(priorities.values),
    }
    lines = [f"lambda_max  {_f3(lam)}"]
    width = max(len(a) for a in priorities.attribute_ids)
    lines += [
        f"{aid.ljust(width)}  {_f3(value)}"
        for aid, value in zip(priorities.attribute_ids, priorities.values)
    ]
    _emit(document, lines, args.format)
    return 0


def _cmd_consistency(args) -> int:
    matrix = _load_matrix(args.matrix)
    report = consistency(matrix, args.triple_threshold, ri=args.ri)
    lines = [
        f"lambda_max  {_f3(report.lambda_max)}",
        f"CI          {_f3(report.ci)}",
        f"RI          {_f3(report.ri)}",
        f"CR          {_f3(report.cr)}",
        f"consistent  {'yes' if report.consistent else 'no'}",
    ]
    for t in report.offending_triples:
        names = (
            matrix.attribute_ids[t.i],
            matrix.attribute_ids[t.j],
            matrix.attribute_ids[t.k],
        )
        lines.append(f"triple      {', '.join(names)}  deviation {_f3(t.deviation)}")
    _emit(report.to_dict(), lines, args.format)
    return 0


def _cmd_ri(args) -> int:
    value = random_index(args.n, samples=args.samples, seed=args.seed)
    document = {
        "n": args.n,
        "samples": args.samples,
        "seed": args.seed if args.samples is not None else None,
        "random_index": value,
    }
    _emit(document, [f"random_index  {_f3(value)}"], args.format)
    return 0


def _cmd_concordance(args) -> int:
    rankings = [r for _, r in _load_rankings(args.rankings)]
    report = concordance(rankings, args.threshold)
    lines = [
        f"W          {_f3(report.w_coefficient)}",
        f"S          {_f3(report.s)}",
        f"threshold  {_f3(report.threshold)}",
        f"agreed     {'yes' if report.agreed else 'no'}",
    ]
    _emit(report.to_dict(), lines, args.format)
    return 0


def _cmd_conflicts(args) -> int:
    labeled = _load_rankings(args.rankings)
    conflicts = ranking_conflicts(labeled)
    document = {"conflicts": [c.to_dict() for c in conflicts]}
    if conflicts:
        lines = [
            f"{c.attribute_a} vs {c.attribute_b}: "
            f"[{', '.join(c.prefers_a)}] against [{', '.join(c.prefers_b)}]"
            for c in conflicts
        ]
    else:
        lines = ["no conflicts"]
    _emit(document, lines, args.format)
    return 0


def _cmd_aggregate(args) -> int:
    vectors, abstentions, attribute_ids = _load_vectors(args.vectors)
    weights = _load_weights(args.weights)
    result = aggregate_aip(vectors, weights, abstentions, attribute_ids=attribute_ids)
    width = max(len(a) for a in result.attribute_ids)
    lines = [
        f"{aid.ljust(width)}  {_f3(value)}"
        for aid, value in zip(result.attribute_ids, result.values)
    ]
    _emit(result.to_dict(), lines, args.format)
    return 0


def _cmd_utility_build(args) -> int:
    data = _load_json(args.priorities)
    try:
        priorities = PriorityVector.from_dict(data)
    except (ValueError, KeyError) as exc:
        raise InputError(f"{args.priorities}: {exc}") from exc
    preferences = _load_preferences(args.preferences)
    u = build_utility(priorities, preferences, UtilityMode(args.mode))
    sys.stdout.write(export_utility(u, "canonical_json") + "\n")
    return 0


def _cmd_utility_evaluate(args) -> int:
    u = _load_utility(args.utility)
    sample = _load_json(args.sample)
    if not isinstance(sample, dict):
        raise InputError(f"{args.sample}: expected an object of attribute -> value")
    value = evaluate(u, {k: float(v) for k, v in sample.items()})
    _emit({"value": value}, [f"utility  {_f3(value)}"], args.format)
    return 0


def _cmd_utility_export(args) -> int:
    u = _load_utility(args.utility)
    sys.stdout.write(export_utility(u, args.export_format) + "\n")
    return 0


def _load_utility(path: str):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return import_utility(handle.read())
    except FileNotFoundError:
        raise InputError(f"{path}: file not found") from None
    except AhpDelphiError as exc:
        raise InputError(f"{path}: {exc}") from exc


# --- parser ----------------------------------------------------------------


def _add_format(parser) -> None:
    parser.add_argument(
        "--format", choices=("json", "table"), default="json",
        help="output as canonical JSON (default) or a readable table",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ahpdelphi",
        description="Pairwise-comparison prioritization, agreement statistics, "
        "priority aggregation, and utility-function tooling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("priorities", help="priority vector of a judgment matrix")
    p.add_argument("matrix", help="matrix JSON file")
    p.add_argument(
        "--require-consistent", action="store_true",
        help="fail (exit 1) if the matrix has CR > 0.10",
    )
    _add_format(p)
    p.set_defaults(handler=_cmd_priorities)

    p = sub.add_parser("consistency", help="consistency report of a judgment matrix")
    p.add_argument("matrix", help="matrix JSON file")
    p.add_argument("--triple-threshold", type=float, default=2.0)
    p.add_argument("--ri", type=float, default=None,
                   help="random-index override (default: cached table)")
    _add_format(p)
    p.set_defaults(handler=_cmd_consistency)

    p = sub.add_parser("ri", help="random consistency index for a matrix order")
    p.add_argument("n", type=int)
    p.add_argument("--samples", type=int, default=None,
                   help="Monte-Carlo sample count (default: cached table)")
    p.add_argument("--seed", type=int, default=RI_TABLE_SEED)
    _add_format(p)
    p.set_defaults(handler=_cmd_ri)

    p = sub.add_parser("concordance", help="rank agreement across stakeholders")
    p.add_argument("rankings", help="rankings JSON file")
    p.add_argument("--threshold", type=float, default=0.7)
    _add_format(p)
    p.set_defaults(handler=_cmd_concordance)

    p = sub.add_parser("conflicts", help="attribute pairs ranked in opposite orders")
    p.add_argument("rankings", help="rankings JSON file")
    _add_format(p)
    p.set_defaults(handler=_cmd_conflicts)

    p = sub.add_parser("aggregate", help="weighted mean of priority vectors")
    p.add_argument("vectors", help="vectors JSON file")
    p.add_argument("weights", help="weights JSON file")
    _add_format(p)
    p.set_defaults(handler=_cmd_aggregate)

    p = sub.add_parser("utility", help="build, evaluate, or export utility functions")
    usub = p.add_subparsers(dest="utility_command", required=True)

    b = usub.add_parser("build", help="utility function from priorities and preferences")
    b.add_argument("priorities", help="priority vector JSON file")
    b.add_argument("preferences", help="preference functions JSON file")
    b.add_argument("--mode", choices=[m.value for m in UtilityMode],
                   default=UtilityMode.PREFERENCE_NORMALIZED.value)
    b.set_defaults(handler=_cmd_utility_build)

    q = usub.add_parser("evaluate", help="evaluate a utility function on a sample")
    q.add_argument("utility", help="utility JSON file")
    q.add_argument("sample", help="metric sample JSON file")
    _add_format(q)
    q.set_defaults(handler=_cmd_utility_evaluate)

    q = usub.add_parser("export", help="render a utility function document")
    q.add_argument("utility", help="utility JSON file")
    q.add_argument(
        "--export-format",
        choices=("canonical_json", "human_readable_expression"),
        default="canonical_json",
    )
    q.set_defaults(handler=_cmd_utility_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except AhpDelphiError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
