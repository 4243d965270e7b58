"""Canonical JSON serialization for influence diagrams.

The emitted document has top-level fields ``nodes``, ``arcs``, ``cpts`` and
``values``. Emission is canonical -- sorted object keys, declaration-ordered
arrays, rows in lexicographic information-state order, floats printed with 17
significant digits -- so that parse -> emit round trips are byte-stable.
"""

from __future__ import annotations

import json
from typing import Any

from .diagram import InfluenceDiagram, Node, NodeKind, ValueSpec


def diagram_to_document(diagram: InfluenceDiagram) -> dict[str, Any]:
    """Plain-data document for ``diagram``."""
    nodes = []
    for node in diagram.nodes:
        entry: dict[str, Any] = {
            "id": node.node_id,
            "kind": node.kind.value,
            "name": node.name,
        }
        if node.kind is not NodeKind.VALUE:
            entry["states"] = list(node.states)
        nodes.append(entry)

    arcs = sorted(
        [pred, node.node_id]
        for node in diagram.nodes
        for pred in node.predecessors
    )

    cpts = []
    for node in diagram.chance_nodes:
        rows = []
        for info in sorted(diagram.cpts[node.node_id]):
            rows.append({
                "given": [diagram.by_id[p].states[s]
                          for p, s in zip(node.predecessors, info)],
                "probs": list(diagram.cpts[node.node_id][info]),
            })
        cpts.append({"node": node.node_id, "rows": rows})

    values = []
    for node in diagram.value_nodes:
        spec = diagram.values[node.node_id]
        rows = []
        for info in sorted(spec.table):
            rows.append({
                "given": [diagram.by_id[p].states[s]
                          for p, s in zip(node.predecessors, info)],
                "value": spec.table[info],
                "unit": spec.unit,
            })
        values.append({
            "node": node.node_id,
            "orientation": spec.orientation,
            "rows": rows,
        })

    return {"nodes": nodes, "arcs": arcs, "cpts": cpts, "values": values}


def diagram_from_document(doc: dict[str, Any]) -> InfluenceDiagram:
    """Rebuild a diagram from a document produced by ``diagram_to_document``.

    Predecessor order is canonical: ascending declaration position of the
    arc sources.
    """
    for field in ("nodes", "arcs", "cpts", "values"):
        if field not in doc:
            raise ValueError(f"diagram document lacks field {field!r}")

    order = [int(entry["id"]) for entry in doc["nodes"]]
    incoming: dict[int, list[int]] = {nid: [] for nid in order}
    for arc in doc["arcs"]:
        src, dst = int(arc[0]), int(arc[1])
        if dst not in incoming:
            raise ValueError(f"arc target {dst} is not a declared node")
        incoming[dst].append(src)
    position = {nid: i for i, nid in enumerate(order)}
    for nid in incoming:
        incoming[nid].sort(key=lambda src: position.get(src, len(order)))

    nodes = []
    for entry in doc["nodes"]:
        nid = int(entry["id"])
        kind = NodeKind(entry["kind"])
        states = tuple(entry.get("states", ()))
        nodes.append(Node(
            node_id=nid,
            kind=kind,
            name=str(entry.get("name", f"node{nid}")),
            states=states,
            predecessors=tuple(incoming[nid]),
        ))
    by_id = {n.node_id: n for n in nodes}

    def ordinals(node: Node, labels: list[str]) -> tuple[int, ...]:
        out = []
        for pred, label in zip(node.predecessors, labels):
            try:
                out.append(by_id[pred].states.index(label))
            except ValueError:
                raise ValueError(
                    f"state {label!r} unknown for node {pred}") from None
        return tuple(out)

    cpts: dict[int, dict[tuple[int, ...], tuple[float, ...]]] = {}
    for entry in doc["cpts"]:
        node = by_id[int(entry["node"])]
        table = {}
        for row in entry["rows"]:
            table[ordinals(node, row["given"])] = tuple(
                float(p) for p in row["probs"])
        cpts[node.node_id] = table

    values: dict[int, ValueSpec] = {}
    for entry in doc["values"]:
        node = by_id[int(entry["node"])]
        table = {}
        unit = "count"
        for row in entry["rows"]:
            table[ordinals(node, row["given"])] = float(row["value"])
            unit = str(row.get("unit", unit))
        values[node.node_id] = ValueSpec(
            node_id=node.node_id,
            table=table,
            unit=unit,
            orientation=str(entry.get("orientation", "minimize")),
        )

    return InfluenceDiagram(nodes=tuple(nodes), cpts=cpts, values=values)


def dump_diagram(diagram: InfluenceDiagram) -> str:
    return dumps_canonical(diagram_to_document(diagram))


def load_diagram(text: str) -> InfluenceDiagram:
    return diagram_from_document(json.loads(text))


def dumps_canonical(obj: Any) -> str:
    """Serialize with sorted keys and 17-significant-digit floats."""
    pieces: list[str] = []
    _emit(obj, pieces)
    pieces.append("\n")
    return "".join(pieces)


def _emit(obj: Any, out: list[str]) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, float):
        out.append(format(obj, ".17g"))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif obj is None:
        out.append("null")
    else:
        out.append(json.dumps(str(obj)))
