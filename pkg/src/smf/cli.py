"""Command line interface: the ``smf`` entry point.

Exit codes: 0 on success, 1 on validation errors (including failed
knowledge-base checks and unsolvable planning problems), 2 on I/O and
protocol errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .converge import View, class_phrase, converge, explain
from .graph import ExecutionError, GraphSchemaError, draw, execute, load_program
from .kb import SmkError, parse_kb, validate_kb
from .planner import PlanningSyntaxError, SearchLimitError, parse_domain, plan
from .predictions import (
    PredictionFormatError,
    ProtocolError,
    TransportError,
    load_predictions,
)
from .study import (
    MissingRecordError,
    corpus_outcomes,
    encode_stream,
    render_report,
    run_corpus,
)


def _load_kb(path: str):
    return parse_kb(Path(path).read_text(encoding="utf-8"))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _cmd_kb_validate(args) -> int:
    try:
        kb = parse_kb(Path(args.path).read_text(encoding="utf-8"))
    except SmkError as exc:
        print(f"invalid: {exc}")
        return 1
    report = validate_kb(kb)
    if report.findings:
        for finding in report.findings:
            print(f"{finding.severity}: {finding.kind}: {finding.message}")
        return 1
    print(
        f"OK: {len(kb.classes)} classes, {len(kb.individuals)} individuals, "
        f"{len(kb.property_assertions)} property assertions, "
        f"{len(kb.relation_assertions)} relation assertions"
    )
    return 0


def _cmd_explain(args) -> int:
    kb = _load_kb(args.kb)
    v1 = View.from_raw(args.label1)
    v2 = View.from_raw(args.label2)
    if v1.normalized_label == v2.normalized_label:
        print("(views are identical)")
        return 0
    explanation = explain(v1, v2, kb)
    print(explanation.rendered if explanation is not None else "(not explained)")
    return 0


def _cmd_converge(args) -> int:
    kb = _load_kb(args.kb)
    v1 = View.from_raw(args.label1)
    v2 = View.from_raw(args.label2)
    if v1.normalized_label == v2.normalized_label:
        print("(views are identical)")
        return 0
    result = converge(v1, v2, kb)
    if result.is_empty():
        print("(disunited)")
        return 0
    if result.abstraction is not None:
        print(f"{class_phrase(result.abstraction, kb)} (abstraction)")
    for prop in sorted(result.properties):
        print(f"{prop.replace('_', ' ')} (property)")
    for rel in sorted(
        result.relationships,
        key=lambda r: (r.subject_individual, r.predicate, r.object_individual),
    ):
        subject = rel.subject_individual.replace("_", " ")
        predicate = rel.predicate.replace("_", " ")
        obj = rel.object_individual.replace("_", " ")
        print(f"{subject} {predicate} {obj} (relationship)")
    return 0


def _cmd_run(args) -> int:
    graph = load_program(Path(args.program).read_text(encoding="utf-8"))
    corpus = load_predictions(args.predictions) if args.predictions else None
    inputs = {"image_id": args.image, "kb": args.kb, "predictions": corpus}
    trace = execute(graph, inputs)
    print(trace.to_text())
    for node in graph.nodes:
        if node.kind == "show_results" and isinstance(node.value, list):
            print()
            print("\n".join(node.value))
    if args.dot:
        Path(args.dot).write_text(draw(graph), encoding="utf-8")
    return 0


def _split_pair(pair: str) -> tuple[str, str]:
    parts = [p.strip() for p in pair.split(",")]
    if len(parts) != 2 or not all(parts):
        raise ValueError(f"--pair must name two classifiers, got {pair!r}")
    return parts[0], parts[1]


def _cmd_corpus(args) -> int:
    kb = _load_kb(args.kb)
    corpus = load_predictions(args.predictions)
    report = run_corpus(corpus, _split_pair(args.pair), kb)
    _emit(render_report(report, args.format), args.out)
    return 0


def _cmd_stream(args) -> int:
    kb = _load_kb(args.kb)
    corpus = load_predictions(args.predictions)
    outcomes = corpus_outcomes(corpus, _split_pair(args.pair), kb)
    encoding = encode_stream([outcome for _, outcome in outcomes])
    _emit(str(encoding) + "\n", args.out)
    return 0


def _cmd_plan(args) -> int:
    domain = parse_domain(Path(args.domain).read_text(encoding="utf-8"))
    problem = None
    if args.problem:
        problem = parse_domain(Path(args.problem).read_text(encoding="utf-8"))
    found = plan(domain, problem)
    if found is None:
        print("no plan")
        return 1
    rendered = found.render()
    if rendered:
        print(rendered)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smf",
        description="Unify differing classifier predictions over a knowledge base.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    kb_parser = sub.add_parser("kb", help="knowledge base tools")
    kb_sub = kb_parser.add_subparsers(dest="kb_command", required=True)
    kb_validate = kb_sub.add_parser("validate", help="parse and validate a knowledge file")
    kb_validate.add_argument("path")
    kb_validate.set_defaults(func=_cmd_kb_validate)

    explain_parser = sub.add_parser("explain", help="explain why two labels differ")
    explain_parser.add_argument("--kb", required=True)
    explain_parser.add_argument("label1")
    explain_parser.add_argument("label2")
    explain_parser.set_defaults(func=_cmd_explain)

    converge_parser = sub.add_parser("converge", help="unify two labels")
    converge_parser.add_argument("--kb", required=True)
    converge_parser.add_argument("label1")
    converge_parser.add_argument("label2")
    converge_parser.set_defaults(func=_cmd_converge)

    run_parser = sub.add_parser("run", help="execute a program graph on one image")
    run_parser.add_argument("--program", required=True)
    run_parser.add_argument("--kb", required=True)
    run_parser.add_argument("--predictions")
    run_parser.add_argument("--image", required=True)
    run_parser.add_argument("--dot", help="also write the graph as DOT")
    run_parser.set_defaults(func=_cmd_run)

    corpus_parser = sub.add_parser("corpus", help="aggregate outcomes over a prediction file")
    corpus_parser.add_argument("--kb", required=True)
    corpus_parser.add_argument("--predictions", required=True)
    corpus_parser.add_argument("--pair", required=True, help="classifier pair, e.g. resnet50_v2,alexnet")
    corpus_parser.add_argument("--format", choices=("text", "json"), default="text")
    corpus_parser.add_argument("--out")
    corpus_parser.set_defaults(func=_cmd_corpus)

    stream_parser = sub.add_parser("stream", help="emit the per-image outcome stream")
    stream_parser.add_argument("--kb", required=True)
    stream_parser.add_argument("--predictions", required=True)
    stream_parser.add_argument("--pair", required=True)
    stream_parser.add_argument("--out")
    stream_parser.set_defaults(func=_cmd_stream)

    plan_parser = sub.add_parser("plan", help="find a plan for a domain and problem")
    plan_parser.add_argument("--domain", required=True)
    plan_parser.add_argument("--problem")
    plan_parser.set_defaults(func=_cmd_plan)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TransportError, ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        SmkError,
        GraphSchemaError,
        ExecutionError,
        PredictionFormatError,
        MissingRecordError,
        PlanningSyntaxError,
        SearchLimitError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
