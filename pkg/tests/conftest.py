import contextlib
import io
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

import pytest

from smf.fixtures import fixture_path, load_fixture_kb, load_sample_corpus

PAIR = ("resnet50_v2", "alexnet")


@pytest.fixture(scope="session")
def fixture_kb():
    return load_fixture_kb()


@pytest.fixture(scope="session")
def sample_corpus():
    return load_sample_corpus()


@pytest.fixture(scope="session")
def kb_path():
    return str(fixture_path("imagenet_fixture.smk"))


@pytest.fixture(scope="session")
def predictions_path():
    return str(fixture_path("ra_sample.jsonl"))


@pytest.fixture(scope="session")
def fig3_path():
    return str(fixture_path("fig3.graph.json"))


@pytest.fixture
def run_cli():
    """Invoke the CLI in-process, returning (exit code, stdout, stderr)."""

    def runner(argv):
        from smf.cli import main

        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(argv)
        return code, out.getvalue(), err.getvalue()

    return runner


class _StubHandler(BaseHTTPRequestHandler):
    """Replays the sample corpus over the documented remote contract.

    Paths are /<classifier>/predict?image_id=<id>; the classifier names
    'boom', 'notjson', and 'broken' serve deliberately bad responses.
    """

    corpus = None

    def do_GET(self):
        parsed = urlsplit(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        if len(parts) != 2 or parts[1] != "predict":
            self.send_error(404)
            return
        classifier = parts[0]
        image_id = parse_qs(parsed.query).get("image_id", [None])[0]
        if classifier == "boom":
            self.send_error(500)
            return
        if classifier == "notjson":
            self._reply(b"this is not json")
            return
        if classifier == "broken":
            self._reply(json.dumps({
                "image_id": image_id,
                "classifier": "broken",
                "labels": ["a", "b", "c"],
                "probs": [0.5, 0.5],
            }).encode("utf-8"))
            return
        record = self.corpus.get(image_id, classifier) if image_id else None
        if record is None:
            self.send_error(404)
            return
        obj = {
            "image_id": record.image_id,
            "classifier": record.classifier,
            "labels": list(record.labels),
            "probs": list(record.probs),
        }
        if record.category is not None:
            obj["category"] = record.category
        self._reply(json.dumps(obj).encode("utf-8"))

    def _reply(self, body: bytes):
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="session")
def stub_server(sample_corpus):
    handler = type("Handler", (_StubHandler,), {"corpus": sample_corpus})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
