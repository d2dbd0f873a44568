"""Access to the data files bundled with the package."""
from __future__ import annotations

from pathlib import Path

from .kb import KnowledgeBase, parse_kb
from .predictions import PredictionCorpus, load_predictions

_DATA_DIR = Path(__file__).parent / "data"


def fixture_path(name: str) -> Path:
    path = _DATA_DIR / name
    if not path.exists():
        raise FileNotFoundError(f"no bundled data file named {name!r}")
    return path


def load_fixture_kb() -> KnowledgeBase:
    """The example-domain knowledge base (``imagenet_fixture.smk``)."""
    return parse_kb(fixture_path("imagenet_fixture.smk").read_text(encoding="utf-8"))


def load_sample_corpus() -> PredictionCorpus:
    """The recorded example predictions (``ra_sample.jsonl``)."""
    return load_predictions(fixture_path("ra_sample.jsonl"))
