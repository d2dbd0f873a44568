"""Classifier prediction ingestion.

Recorded predictions are the primary path: one JSON record per line with
``image_id``, ``classifier``, ``labels``, ``probs``, and an optional
``category``. Live classifiers can be attached over HTTP with the same
record schema (``GET <endpoint>/predict?image_id=<id>``); the environment
variable ``SMF_ENDPOINT_<NAME>`` configures an endpoint per classifier.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import quote

import requests

from .converge import View

PROB_SUM_TOLERANCE = 1e-6
CATEGORIES = ("animals", "electronics", "food", "furniture")


class PredictionFormatError(Exception):
    """A prediction record violates the file format or its invariants."""


class TransportError(Exception):
    """The remote endpoint could not be reached or answered non-2xx."""


class ProtocolError(Exception):
    """The remote endpoint answered, but not with a conforming record."""


@dataclass(frozen=True)
class PredictionDistribution:
    """One classifier's label distribution for one image."""

    image_id: str
    classifier: str
    labels: tuple[str, ...]
    probs: tuple[float, ...]
    category: str | None = None
    source_line: int | None = field(default=None, compare=False)

    def problems(self) -> list[str]:
        issues = []
        if not self.labels:
            issues.append("labels must be non-empty")
        if len(self.labels) != len(self.probs):
            issues.append(
                f"labels ({len(self.labels)}) and probs ({len(self.probs)}) differ in length"
            )
        if len(set(self.labels)) != len(self.labels):
            issues.append("labels must be unique")
        if any(p < 0.0 or p > 1.0 for p in self.probs):
            issues.append("probs must lie in [0, 1]")
        if self.probs and abs(sum(self.probs) - 1.0) > PROB_SUM_TOLERANCE:
            issues.append(f"probs sum to {sum(self.probs):.8f}, not 1")
        if self.category is not None and self.category not in CATEGORIES:
            issues.append(f"unknown category {self.category!r}")
        return issues


@dataclass(frozen=True)
class PredictionCorpus:
    """Prediction records indexed by (image_id, classifier), with an
    optional category per image."""

    records: dict[tuple[str, str], PredictionDistribution]
    categories: dict[str, str]

    @classmethod
    def from_records(cls, records) -> "PredictionCorpus":
        index: dict[tuple[str, str], PredictionDistribution] = {}
        categories: dict[str, str] = {}
        for record in records:
            where = f"line {record.source_line}: " if record.source_line else ""
            issues = record.problems()
            if issues:
                raise PredictionFormatError(where + "; ".join(issues))
            key = (record.image_id, record.classifier)
            if key in index:
                raise PredictionFormatError(
                    f"{where}duplicate record for image {record.image_id!r}, "
                    f"classifier {record.classifier!r}"
                )
            index[key] = record
            if record.category is not None:
                known = categories.get(record.image_id)
                if known is not None and known != record.category:
                    raise PredictionFormatError(
                        f"{where}image {record.image_id!r} categorized as both "
                        f"{known!r} and {record.category!r}"
                    )
                categories[record.image_id] = record.category
        return cls(records=index, categories=categories)

    def image_ids(self) -> list[str]:
        return sorted({image_id for image_id, _ in self.records})

    def classifiers(self) -> list[str]:
        return sorted({classifier for _, classifier in self.records})

    def get(self, image_id: str, classifier: str) -> PredictionDistribution | None:
        return self.records.get((image_id, classifier))


def _record_from_obj(obj, *, where: str, line: int | None = None) -> PredictionDistribution:
    if not isinstance(obj, dict):
        raise PredictionFormatError(f"{where}: record is not an object")
    missing = [k for k in ("image_id", "classifier", "labels", "probs") if k not in obj]
    if missing:
        raise PredictionFormatError(f"{where}: missing keys {missing}")
    labels = obj["labels"]
    probs = obj["probs"]
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise PredictionFormatError(f"{where}: labels must be a list of strings")
    if not isinstance(probs, list) or not all(isinstance(x, (int, float)) for x in probs):
        raise PredictionFormatError(f"{where}: probs must be a list of numbers")
    category = obj.get("category")
    if category is not None and not isinstance(category, str):
        raise PredictionFormatError(f"{where}: category must be a string")
    return PredictionDistribution(
        image_id=str(obj["image_id"]),
        classifier=str(obj["classifier"]),
        labels=tuple(labels),
        probs=tuple(float(p) for p in probs),
        category=category,
        source_line=line,
    )


def load_predictions(path) -> PredictionCorpus:
    """Load a prediction file (one JSON record per line); empty lines are
    skipped and every invariant violation names its line."""
    records = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PredictionFormatError(f"line {lineno}: invalid JSON: {exc}") from exc
        records.append(_record_from_obj(obj, where=f"line {lineno}", line=lineno))
    return PredictionCorpus.from_records(records)


def top_prediction(d: PredictionDistribution) -> View:
    """The maximal-probability label as a view; ties go to the earliest
    list position."""
    best = max(range(len(d.labels)), key=lambda i: d.probs[i])
    return View.from_raw(d.labels[best], source=d.classifier)


def fetch_remote(classifier_endpoint: str, image_id: str) -> PredictionDistribution:
    """Fetch one prediction record from a remote classifier.

    Transport failures (unreachable, non-2xx) raise :class:`TransportError`;
    a reachable endpoint returning a non-conforming record raises
    :class:`ProtocolError`. Nothing is ever silently defaulted.
    """
    url = f"{classifier_endpoint.rstrip('/')}/predict?image_id={quote(image_id)}"
    try:
        response = requests.get(url, timeout=30)
    except requests.RequestException as exc:
        raise TransportError(f"request to {url} failed: {exc}") from exc
    if not 200 <= response.status_code < 300:
        raise TransportError(f"{url} answered {response.status_code}")
    try:
        obj = response.json()
    except ValueError as exc:
        raise ProtocolError(f"{url} returned invalid JSON: {exc}") from exc
    try:
        record = _record_from_obj(obj, where=url)
    except PredictionFormatError as exc:
        raise ProtocolError(str(exc)) from exc
    issues = record.problems()
    if issues:
        raise ProtocolError(f"{url}: " + "; ".join(issues))
    return record


def endpoint_env_var(classifier: str) -> str:
    return "SMF_ENDPOINT_" + re.sub(r"[^A-Za-z0-9]", "_", classifier).upper()


def configured_endpoint(classifier: str) -> str | None:
    """The endpoint configured for a classifier via the environment, if any."""
    return os.environ.get(endpoint_env_var(classifier))
