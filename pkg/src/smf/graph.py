"""The composable program-graph runtime.

Programs are graphs of nodes; each node has a function (its *kind*), an
annotation mapping it into meta-knowledge, and edges: control edges fix a
single linear execution order, data edges hand one node's value to a later
node. Two special node families support reflection:

* *meta-points* receive a read-only snapshot of the entire graph, values
  included (``draw_self``, ``get_classifiers``);
* *meta-operations* operate on parts of the graph handed to them by other
  nodes (``explain``, ``converge``).

Annotations resolve against a meta ontology (``Start``, ``Classifier``,
``MetaPoint``, ``MetaOperation``, ... all under ``Thing``) shipped with the
package. Execution of one graph is single-threaded; distinct graph
instances may execute concurrently.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .converge import (
    Convergence,
    Outcome,
    View,
    classify_outcome,
    explain as explain_views,
    normalize,
    render_convergence,
)
from .kb import KnowledgeBase, parse_kb
from .predictions import (
    PredictionDistribution,
    configured_endpoint,
    fetch_remote,
    top_prediction,
)
from .reasoner import is_subclass

START_ANNOTATION = "Start"
CLASSIFIER_ANNOTATION = "Classifier"

_META_SMK = Path(__file__).parent / "data" / "meta.smk"
_meta_cache: KnowledgeBase | None = None


def meta_knowledge() -> KnowledgeBase:
    """The bundled meta ontology node annotations resolve against."""
    global _meta_cache
    if _meta_cache is None:
        _meta_cache = parse_kb(_META_SMK.read_text(encoding="utf-8"))
    return _meta_cache


class GraphSchemaError(Exception):
    """The program document violates the schema or a graph invariant."""


class UnknownKindError(GraphSchemaError):
    pass


class DuplicateKindError(Exception):
    pass


class ExecutionError(Exception):
    """A node function failed; carries the partial trace up to the failure."""

    def __init__(self, node_id: str, cause: Exception, trace: "ExecutionTrace"):
        self.node_id = node_id
        self.cause = cause
        self.trace = trace
        super().__init__(f"node {node_id!r} failed: {cause}")


@dataclass
class Node:
    id: str
    kind: str
    annotation: str
    params: dict[str, str] = field(default_factory=dict)
    value: Any = None
    executed: bool = False


@dataclass
class ProgramGraph:
    nodes: list[Node]
    control_edges: list[tuple[str, str]]
    data_edges: list[tuple[str, str]]
    order: tuple[str, ...]
    meta: KnowledgeBase

    def node(self, node_id: str) -> Node:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def state_digest(self) -> str:
        """Digest over structure and execution state; meta-points must
        leave this unchanged."""
        h = hashlib.sha256()
        for node in self.nodes:
            h.update(
                "|".join(
                    [
                        node.id,
                        node.kind,
                        node.annotation,
                        json.dumps(node.params, sort_keys=True),
                        str(node.executed),
                        summarize_value(node.value),
                    ]
                ).encode("utf-8")
            )
        for edge in self.control_edges + self.data_edges:
            h.update(f"{edge[0]}->{edge[1]}".encode("utf-8"))
        return h.hexdigest()


@dataclass(frozen=True)
class TraceRecord:
    node_id: str
    started: int
    finished: int
    value_summary: str


@dataclass(frozen=True)
class ExecutionTrace:
    records: tuple[TraceRecord, ...]

    def to_text(self) -> str:
        return "\n".join(
            f"{r.started:>3} {r.finished:>3} {r.node_id} {r.value_summary}"
            for r in self.records
        )


@dataclass(frozen=True)
class NodeContext:
    """What a node function sees: its node, the values of its data-edge
    predecessors (in edge order), the external inputs, and — for
    meta-points only — the whole graph."""

    node: Node
    data_inputs: tuple[tuple[str, Any], ...]
    inputs: dict[str, Any]
    graph: ProgramGraph | None = None

    def single_input(self) -> Any:
        if len(self.data_inputs) != 1:
            raise ValueError(
                f"node {self.node.id!r} expects exactly one data input, "
                f"got {len(self.data_inputs)}"
            )
        return self.data_inputs[0][1]


@dataclass(frozen=True)
class KindDef:
    name: str
    fn: Callable[[NodeContext], Any]
    meta_point: bool = False


class Runtime:
    """Registry of node kinds. Extend by registering new kinds."""

    def __init__(self):
        self._kinds: dict[str, KindDef] = {}

    def register(self, kind: str, fn: Callable[[NodeContext], Any], meta_point: bool = False) -> None:
        if kind in self._kinds:
            raise DuplicateKindError(f"kind {kind!r} already registered")
        self._kinds[kind] = KindDef(kind, fn, meta_point)

    def kind(self, name: str) -> KindDef:
        if name not in self._kinds:
            raise UnknownKindError(f"unknown node kind {name!r}")
        return self._kinds[name]

    def has_kind(self, name: str) -> bool:
        return name in self._kinds

    def kind_names(self) -> list[str]:
        return sorted(self._kinds)


# ---------------------------------------------------------------------------
# loading


def load_program(text: str, runtime: "Runtime | None" = None,
                 meta: KnowledgeBase | None = None) -> ProgramGraph:
    """Parse and validate a program document (JSON).

    Checks: known kinds, annotations resolving in the meta ontology,
    exactly one Start-annotated node, control edges forming one linear
    chain from it over all nodes, data edges connecting existing nodes
    with the source strictly before the target in control order.
    """
    runtime = runtime or default_runtime()
    meta = meta or meta_knowledge()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphSchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list):
        raise GraphSchemaError("document must be an object with a 'nodes' list")

    nodes: list[Node] = []
    seen_ids: set[str] = set()
    for i, entry in enumerate(doc["nodes"]):
        if not isinstance(entry, dict):
            raise GraphSchemaError(f"nodes[{i}] is not an object")
        for key in ("id", "kind", "annotation"):
            if not isinstance(entry.get(key), str):
                raise GraphSchemaError(f"nodes[{i}] needs a string {key!r}")
        params = entry.get("params", {})
        if not isinstance(params, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in params.items()
        ):
            raise GraphSchemaError(f"nodes[{i}].params must map strings to strings")
        if entry["id"] in seen_ids:
            raise GraphSchemaError(f"duplicate node id {entry['id']!r}")
        seen_ids.add(entry["id"])
        if not runtime.has_kind(entry["kind"]):
            raise UnknownKindError(f"unknown node kind {entry['kind']!r}")
        if entry["annotation"] not in meta.classes:
            raise GraphSchemaError(
                f"annotation {entry['annotation']!r} is not a meta-knowledge class"
            )
        nodes.append(Node(entry["id"], entry["kind"], entry["annotation"], dict(params)))

    def edge_list(key: str) -> list[tuple[str, str]]:
        raw = doc.get(key, [])
        if not isinstance(raw, list):
            raise GraphSchemaError(f"{key} must be a list")
        edges = []
        for e in raw:
            if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e)):
                raise GraphSchemaError(f"{key} entries must be [from, to] pairs")
            for endpoint in e:
                if endpoint not in seen_ids:
                    raise GraphSchemaError(f"{key} references missing node {endpoint!r}")
            edges.append((e[0], e[1]))
        return edges

    control_edges = edge_list("control_edges")
    data_edges = edge_list("data_edges")

    starts = [n for n in nodes if n.annotation == START_ANNOTATION]
    if len(starts) != 1:
        raise GraphSchemaError(
            f"exactly one node must be annotated {START_ANNOTATION!r}, found {len(starts)}"
        )

    order = _chain_order(nodes, control_edges, starts[0].id)
    position = {node_id: i for i, node_id in enumerate(order)}
    for src, dst in data_edges:
        if position[src] >= position[dst]:
            raise GraphSchemaError(
                f"data edge {src!r} -> {dst!r} reads a value not yet executed"
            )

    return ProgramGraph(nodes=nodes, control_edges=control_edges,
                        data_edges=data_edges, order=order, meta=meta)


def _chain_order(nodes: list[Node], control_edges: list[tuple[str, str]],
                 start_id: str) -> tuple[str, ...]:
    successor: dict[str, str] = {}
    incoming: dict[str, int] = {n.id: 0 for n in nodes}
    for src, dst in control_edges:
        if src in successor:
            raise GraphSchemaError(f"node {src!r} has more than one control successor")
        successor[src] = dst
        incoming[dst] += 1
    if incoming[start_id] != 0:
        raise GraphSchemaError("the start node cannot have incoming control edges")
    if any(count > 1 for count in incoming.values()):
        culprit = next(n for n, c in incoming.items() if c > 1)
        raise GraphSchemaError(f"node {culprit!r} has more than one control predecessor")
    order = [start_id]
    seen = {start_id}
    current = start_id
    while current in successor:
        current = successor[current]
        if current in seen:
            raise GraphSchemaError("control edges form a loop")
        seen.add(current)
        order.append(current)
    if len(order) != len(nodes):
        raise GraphSchemaError(
            f"control edges must form a single chain covering all nodes "
            f"({len(order)} reached of {len(nodes)})"
        )
    return tuple(order)


# ---------------------------------------------------------------------------
# execution


def execute(g: ProgramGraph, inputs: dict[str, Any],
            runtime: "Runtime | None" = None) -> ExecutionTrace:
    """Run the graph in control order.

    Each node function receives the values of its data-edge predecessors;
    meta-point kinds additionally receive the graph itself as a read-only
    snapshot. A failing node aborts execution, raising
    :class:`ExecutionError` with the partial trace.
    """
    runtime = runtime or default_runtime()
    for node in g.nodes:
        node.value = None
        node.executed = False
    records: list[TraceRecord] = []
    clock = 0
    for node_id in g.order:
        node = g.node(node_id)
        kind = runtime.kind(node.kind)
        data_inputs = tuple(
            (src, g.node(src).value) for src, dst in g.data_edges if dst == node_id
        )
        ctx = NodeContext(
            node=node,
            data_inputs=data_inputs,
            inputs=inputs,
            graph=g if kind.meta_point else None,
        )
        started = clock
        clock += 1
        try:
            value = kind.fn(ctx)
        except Exception as exc:
            raise ExecutionError(node_id, exc, ExecutionTrace(tuple(records))) from exc
        node.value = value
        node.executed = True
        finished = clock
        clock += 1
        records.append(TraceRecord(node_id, started, finished, summarize_value(value)))
    return ExecutionTrace(tuple(records))


def get_classifiers(snapshot: ProgramGraph) -> list[tuple[str, Any]]:
    """All executed nodes whose annotation is a (sub)class of
    ``Classifier``, with their values, in control order. Never mutates the
    snapshot."""
    found = []
    for node_id in snapshot.order:
        node = snapshot.node(node_id)
        if not node.executed:
            continue
        if is_subclass(node.annotation, CLASSIFIER_ANNOTATION, snapshot.meta):
            found.append((node.id, node.value))
    return found


def summarize_value(value: Any) -> str:
    """Deterministic short form of a node value for traces and digests."""
    if value is None:
        return "-"
    if isinstance(value, View):
        return f"view:{value.normalized_label}"
    if isinstance(value, PredictionDistribution):
        return f"dist:{value.classifier}/{value.image_id}"
    if isinstance(value, KnowledgeBase):
        return f"kb:{value.source_digest[:12]}"
    if isinstance(value, Outcome):
        return f"outcome:{value.kind.value}"
    if isinstance(value, Convergence):
        return "convergence"
    if isinstance(value, str):
        if value.startswith("digraph"):
            return f"dot[{len(value)}b]"
        return "str:" + (value if len(value) <= 60 else value[:57] + "...")
    if isinstance(value, (list, tuple)):
        return f"list[{len(value)}]"
    return type(value).__name__


# ---------------------------------------------------------------------------
# drawing


def draw(g: ProgramGraph) -> str:
    """Deterministic DOT export: solid arrows for control flow, dashed
    circle-headed arrows for data dependencies, labels ``name\\n[annotation]``."""
    lines = ["digraph program {"]
    for node in g.nodes:
        lines.append(f'  "{node.id}" [label="{node.id}\\n[{node.annotation}]"];')
    for src, dst in g.control_edges:
        lines.append(f'  "{src}" -> "{dst}";')
    for src, dst in g.data_edges:
        lines.append(f'  "{src}" -> "{dst}" [style=dashed, arrowhead=odot];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# builtin kinds


def _kind_start(ctx: NodeContext) -> None:
    return None


def _kind_draw_self(ctx: NodeContext) -> str:
    return draw(ctx.graph)


def _kind_classifier_source(ctx: NodeContext) -> PredictionDistribution:
    classifier = ctx.node.params.get("classifier", ctx.node.id)
    image_id = ctx.inputs.get("image_id")
    if image_id is None:
        raise ValueError("missing input 'image_id'")
    corpus = ctx.inputs.get("predictions")
    if corpus is not None:
        record = corpus.get(image_id, classifier)
        if record is not None:
            return record
    endpoint = configured_endpoint(classifier)
    if endpoint is not None:
        return fetch_remote(endpoint, image_id)
    raise ValueError(
        f"no prediction record for image {image_id!r}, classifier {classifier!r} "
        f"and no endpoint configured"
    )


def _kind_top_prediction(ctx: NodeContext) -> View:
    value = ctx.single_input()
    if not isinstance(value, PredictionDistribution):
        raise ValueError(f"node {ctx.node.id!r} expects a prediction distribution")
    return top_prediction(value)


def _kind_normalize_label(ctx: NodeContext):
    value = ctx.single_input()
    if isinstance(value, View):
        return View.from_raw(value.raw_label, value.source)
    if isinstance(value, str):
        return normalize(value)
    raise ValueError(f"node {ctx.node.id!r} expects a view or a string")


def _kind_get_classifiers(ctx: NodeContext) -> list[tuple[str, Any]]:
    return get_classifiers(ctx.graph)


def _kind_load_knowledge(ctx: NodeContext) -> KnowledgeBase:
    source = ctx.node.params.get("path") or ctx.inputs.get("kb")
    if isinstance(source, KnowledgeBase):
        return source
    if source is None:
        raise ValueError("missing input 'kb'")
    return parse_kb(Path(source).read_text(encoding="utf-8"))


def _views_and_kb(ctx: NodeContext) -> tuple[View, View, KnowledgeBase]:
    kb: KnowledgeBase | None = None
    views: list[View] = []
    for _, value in ctx.data_inputs:
        if isinstance(value, KnowledgeBase):
            kb = value
        elif isinstance(value, View):
            views.append(value)
        elif isinstance(value, PredictionDistribution):
            views.append(top_prediction(value))
        elif isinstance(value, list):
            for _, inner in value:
                if isinstance(inner, PredictionDistribution):
                    views.append(top_prediction(inner))
                elif isinstance(inner, View):
                    views.append(inner)
    if kb is None:
        raise ValueError(f"node {ctx.node.id!r} received no knowledge base")
    if len(views) != 2:
        raise ValueError(f"node {ctx.node.id!r} needs exactly two views, got {len(views)}")
    return views[0], views[1], kb


def _kind_explain(ctx: NodeContext) -> str | None:
    v1, v2, kb = _views_and_kb(ctx)
    if v1.normalized_label == v2.normalized_label:
        return None
    explanation = explain_views(v1, v2, kb)
    return explanation.rendered if explanation is not None else None


def _kind_converge(ctx: NodeContext) -> Outcome:
    v1, v2, kb = _views_and_kb(ctx)
    return classify_outcome(v1, v2, kb)


def _kind_show_results(ctx: NodeContext) -> list[str]:
    lines: list[str] = []
    image_id = ctx.inputs.get("image_id")
    if image_id is not None:
        lines.append(f"image: {image_id}")
    kb: KnowledgeBase | None = None
    outcome: Outcome | None = None
    explanation: str | None = None
    for _, value in ctx.data_inputs:
        if isinstance(value, KnowledgeBase):
            kb = value
        elif isinstance(value, Outcome):
            outcome = value
        elif isinstance(value, str):
            explanation = value
        elif isinstance(value, list):
            for node_id, inner in value:
                if isinstance(inner, PredictionDistribution):
                    lines.append(f"view {node_id}: {top_prediction(inner).raw_label}")
    lines.append(f"explanation: {explanation if explanation is not None else '(none)'}")
    if outcome is not None:
        lines.append(f"outcome: {outcome.kind.value}")
        if outcome.convergence is not None and not outcome.convergence.is_empty() and kb is not None:
            for rendered in render_convergence(outcome.convergence, kb):
                lines.append(f"knowledge: {rendered}")
    path = ctx.node.params.get("path")
    if path:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return lines


def register_builtins(runtime: Runtime) -> Runtime:
    """Register the ten builtin kinds on a runtime and return it."""
    runtime.register("start", _kind_start)
    runtime.register("draw_self", _kind_draw_self, meta_point=True)
    runtime.register("classifier_source", _kind_classifier_source)
    runtime.register("top_prediction", _kind_top_prediction)
    runtime.register("normalize_label", _kind_normalize_label)
    runtime.register("get_classifiers", _kind_get_classifiers, meta_point=True)
    runtime.register("load_knowledge", _kind_load_knowledge)
    runtime.register("explain", _kind_explain)
    runtime.register("converge", _kind_converge)
    runtime.register("show_results", _kind_show_results)
    return runtime


def default_runtime() -> Runtime:
    """A fresh runtime with all builtin kinds registered."""
    return register_builtins(Runtime())
