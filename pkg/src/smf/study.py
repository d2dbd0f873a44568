"""Evaluation harness for prediction corpora.

Runs a classifier pair over a corpus, classifies every image's view pair,
and aggregates counters: same/different, unified/disunited,
explained/unexplained, the unified-by-type breakdown, per-category
sub-reports, and chi-squared significance tests on the binary splits.
Per-image outcomes are pure; aggregation folds in image-id order, so
reports are reproducible.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .converge import Outcome, OutcomeKind, classify_outcome
from .kb import KnowledgeBase
from .predictions import PredictionCorpus, top_prediction


class MissingRecordError(LookupError):
    pass


@dataclass(frozen=True)
class ChiSquareResult:
    a: int
    b: int
    statistic: float
    p_value: float


@dataclass
class CorpusReport:
    """Counters for one classifier pair over one corpus."""

    program_id: str
    images: int = 0
    same: int = 0
    different_views: int = 0
    unified: int = 0
    disunited: int = 0
    explained: int = 0
    not_explained: int = 0
    unified_in_explained: int = 0
    disunited_in_explained: int = 0
    abstractions: int = 0
    properties: int = 0
    relationships: int = 0
    multiple_unified: int = 0
    unified_total_by_type: int = 0
    categories: dict[str, "CorpusReport"] = field(default_factory=dict)
    chi_squared: dict[str, ChiSquareResult] = field(default_factory=dict)


@dataclass(frozen=True)
class StreamEncoding:
    """Per-image outcome stream over the alphabet S, U, D, D*."""

    symbols: tuple[str, ...]

    def __str__(self) -> str:
        return " ".join(self.symbols)

    def counts(self) -> dict[str, int]:
        out = {"S": 0, "U": 0, "D": 0, "D*": 0}
        for symbol in self.symbols:
            out[symbol] += 1
        return out


def chi_squared_2x1(a: int, b: int) -> tuple[float, float]:
    """Goodness-of-fit test of two counts against an even split.

    Expected value is (a+b)/2 per cell; the statistic is
    sum((observed-expected)^2 / expected); the upper-tail p at one degree
    of freedom comes from the complementary error function,
    p = erfc(sqrt(statistic/2)).
    """
    if a < 0 or b < 0:
        raise ValueError("counts must be non-negative")
    if a + b == 0:
        raise ValueError("both counts are zero")
    expected = (a + b) / 2
    statistic = (a - expected) ** 2 / expected + (b - expected) ** 2 / expected
    p_value = math.erfc(math.sqrt(statistic / 2))
    return statistic, p_value


def corpus_outcomes(corpus: PredictionCorpus, classifier_pair: tuple[str, str],
                    kb: KnowledgeBase) -> list[tuple[str, Outcome]]:
    """Classify every image's top-prediction pair, in image-id order.

    Raises :class:`MissingRecordError` when an image lacks a record for
    either classifier.
    """
    c1, c2 = classifier_pair
    outcomes = []
    for image_id in corpus.image_ids():
        d1 = corpus.get(image_id, c1)
        d2 = corpus.get(image_id, c2)
        if d1 is None or d2 is None:
            missing = c1 if d1 is None else c2
            raise MissingRecordError(
                f"image {image_id!r} has no record for classifier {missing!r}"
            )
        outcomes.append((image_id, classify_outcome(top_prediction(d1), top_prediction(d2), kb)))
    return outcomes


def _aggregate(program_id: str, outcomes: list[tuple[str, Outcome]]) -> CorpusReport:
    report = CorpusReport(program_id=program_id)
    for _, outcome in outcomes:
        report.images += 1
        if outcome.kind is OutcomeKind.SAME:
            report.same += 1
            continue
        report.different_views += 1
        if outcome.explained:
            report.explained += 1
        else:
            report.not_explained += 1
        if outcome.kind is OutcomeKind.UNIFIED:
            report.unified += 1
            report.unified_in_explained += 1
            conv = outcome.convergence
            kinds = 0
            if conv.abstraction is not None:
                report.abstractions += 1
                kinds += 1
            if conv.properties:
                report.properties += 1
                kinds += 1
            if conv.relationships:
                report.relationships += 1
                kinds += 1
            if kinds >= 2:
                report.multiple_unified += 1
        else:
            report.disunited += 1
            if outcome.explained:
                report.disunited_in_explained += 1
    report.unified_total_by_type = report.abstractions + report.properties + report.relationships
    if report.unified + report.disunited > 0:
        stat, p = chi_squared_2x1(report.unified, report.disunited)
        report.chi_squared["unified vs disunited"] = ChiSquareResult(
            report.unified, report.disunited, stat, p
        )
    if report.explained + report.not_explained > 0:
        stat, p = chi_squared_2x1(report.explained, report.not_explained)
        report.chi_squared["explained vs not explained"] = ChiSquareResult(
            report.explained, report.not_explained, stat, p
        )
    if report.unified_in_explained + report.disunited_in_explained > 0:
        stat, p = chi_squared_2x1(report.unified_in_explained, report.disunited_in_explained)
        report.chi_squared["unified vs disunited in explained"] = ChiSquareResult(
            report.unified_in_explained, report.disunited_in_explained, stat, p
        )
    return report


def run_corpus(corpus: PredictionCorpus, classifier_pair: tuple[str, str],
               kb: KnowledgeBase, program_id: str | None = None) -> CorpusReport:
    """Aggregate outcome counters for a classifier pair over a corpus.

    Per-category sub-reports are included for images that carry a
    category tag.
    """
    if program_id is None:
        program_id = f"{classifier_pair[0]}+{classifier_pair[1]}"
    outcomes = corpus_outcomes(corpus, classifier_pair, kb)
    report = _aggregate(program_id, outcomes)
    by_category: dict[str, list[tuple[str, Outcome]]] = {}
    for image_id, outcome in outcomes:
        category = corpus.categories.get(image_id)
        if category is not None:
            by_category.setdefault(category, []).append((image_id, outcome))
    for category in sorted(by_category):
        report.categories[category] = _aggregate(
            f"{program_id}/{category}", by_category[category]
        )
    return report


def encode_stream(outcomes: list[Outcome]) -> StreamEncoding:
    """S for same, U for unified, D for unexplained-disunited, D* for
    explained-but-disunited."""
    symbols = []
    for outcome in outcomes:
        if outcome.kind is OutcomeKind.SAME:
            symbols.append("S")
        elif outcome.kind is OutcomeKind.UNIFIED:
            symbols.append("U")
        elif outcome.explained:
            symbols.append("D*")
        else:
            symbols.append("D")
    return StreamEncoding(tuple(symbols))


# ---------------------------------------------------------------------------
# rendering


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _pct(n: int, base: int) -> str:
    if base == 0:
        return "–"
    return f"{_round_half_up(100 * n / base)}%"


def _ratio(n: int, base: int) -> float | None:
    return None if base == 0 else n / base


def _fmt_p(p: float) -> str:
    return f"{p:.4f}" if p >= 0.0001 else f"{p:.2e}"


def _text_lines(r: CorpusReport) -> list[str]:
    lines = [
        f"program: {r.program_id}",
        f"images: {r.images}",
        f"same views: {r.same}",
        f"different views: {r.different_views} ({_pct(r.different_views, r.images)})",
        f"unified: {r.unified} ({_pct(r.unified, r.different_views)})",
        f"disunited: {r.disunited} ({_pct(r.disunited, r.different_views)})",
        f"explained: {r.explained} ({_pct(r.explained, r.different_views)})",
        f"not explained: {r.not_explained} ({_pct(r.not_explained, r.different_views)})",
        f"unified in explained: {r.unified_in_explained} ({_pct(r.unified_in_explained, r.explained)})",
        f"disunited in explained: {r.disunited_in_explained} ({_pct(r.disunited_in_explained, r.explained)})",
        "unified by type:",
        f"  abstractions: {r.abstractions} ({_pct(r.abstractions, r.unified_total_by_type)})",
        f"  properties: {r.properties} ({_pct(r.properties, r.unified_total_by_type)})",
        f"  relationships: {r.relationships} ({_pct(r.relationships, r.unified_total_by_type)})",
        f"  multiple unified: {r.multiple_unified} ({_pct(r.multiple_unified, r.unified_total_by_type)})",
        f"  unified total by type: {r.unified_total_by_type}",
    ]
    if r.chi_squared:
        lines.append("chi-squared:")
        for name, result in r.chi_squared.items():
            lines.append(
                f"  {name}: statistic {result.statistic:.4f} p {_fmt_p(result.p_value)}"
            )
    if r.categories:
        lines.append("categories:")
        for category in sorted(r.categories):
            sub = r.categories[category]
            lines.append(
                f"  {category}: images {sub.images}, different {sub.different_views}, "
                f"unified {sub.unified}, explained {sub.explained}"
            )
    return lines


def _report_dict(r: CorpusReport) -> dict:
    return {
        "program_id": r.program_id,
        "images": r.images,
        "same": r.same,
        "different_views": r.different_views,
        "unified": r.unified,
        "disunited": r.disunited,
        "explained": r.explained,
        "not_explained": r.not_explained,
        "unified_in_explained": r.unified_in_explained,
        "disunited_in_explained": r.disunited_in_explained,
        "by_type": {
            "abstractions": r.abstractions,
            "properties": r.properties,
            "relationships": r.relationships,
            "multiple_unified": r.multiple_unified,
            "unified_total_by_type": r.unified_total_by_type,
        },
        "ratios": {
            "different_of_images": _ratio(r.different_views, r.images),
            "unified_of_different": _ratio(r.unified, r.different_views),
            "disunited_of_different": _ratio(r.disunited, r.different_views),
            "explained_of_different": _ratio(r.explained, r.different_views),
            "not_explained_of_different": _ratio(r.not_explained, r.different_views),
            "unified_of_explained": _ratio(r.unified_in_explained, r.explained),
            "disunited_of_explained": _ratio(r.disunited_in_explained, r.explained),
        },
        "chi_squared": {
            name: {
                "a": result.a,
                "b": result.b,
                "statistic": result.statistic,
                "p_value": result.p_value,
            }
            for name, result in r.chi_squared.items()
        },
        "categories": {name: _report_dict(sub) for name, sub in sorted(r.categories.items())},
    }


def render_report(r: CorpusReport, format: str = "text") -> str:
    """Render a report: ``text`` mirrors the counter tables with rounded
    percentages, ``json`` carries raw counts and unrounded ratios."""
    if format == "text":
        return "\n".join(_text_lines(r)) + "\n"
    if format == "json":
        return json.dumps(_report_dict(r), indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown format {format!r}")
