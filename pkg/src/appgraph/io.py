# src/appgraph/io.py

import json
from typing import Any, Dict, Union

from src.appgraph.graph import ApplicationGraph, TaskNode, validate_dag
from src.common.exceptions import ParseError, ValidationError
from src.common.fileio import read_json, write_json


def app_to_document(app: ApplicationGraph) -> Dict[str, Any]:
    return {
        "app_id": app.app_id,
        "name": app.name,
        "nodes": [{"id": n.id, "type": n.task_type} for n in sorted(app.nodes, key=lambda n: n.id)],
        "edges": [
            {"src": pred, "dst": n.id, "volume": volume}
            for n in sorted(app.nodes, key=lambda n: n.id)
            for pred, volume in n.predecessors
        ],
    }


def load_app(document: Union[str, Dict[str, Any]]) -> ApplicationGraph:
    """Builds an ApplicationGraph from a DAG document and validates it."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise ParseError(f"Malformed DAG document: {e}") from e
    if not isinstance(document, dict):
        raise ParseError("DAG document must be a JSON object")
    try:
        app_id = int(document["app_id"])
        name = str(document["name"])
        preds: Dict[int, list] = {int(n["id"]): [] for n in document["nodes"]}
        types = {int(n["id"]): str(n["type"]) for n in document["nodes"]}
        for edge in document.get("edges", []):
            dst = int(edge["dst"])
            if dst not in preds:
                raise ValidationError(f"Invalid app '{name}'", [f"edge targets unknown task {dst}"])
            preds[dst].append((int(edge["src"]), float(edge["volume"])))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"Malformed DAG document: {e!r}") from e

    app = ApplicationGraph(
        app_id=app_id,
        name=name,
        nodes=tuple(
            TaskNode(id=tid, task_type=types[tid], predecessors=tuple(sorted(preds[tid])), app_id=app_id)
            for tid in sorted(types)
        ),
    )
    violations = validate_dag(app)
    if violations:
        raise ValidationError(f"Invalid app '{name}'", violations)
    return app


def load_app_file(path: str) -> ApplicationGraph:
    return load_app(read_json(path))


def save_app(app: ApplicationGraph, path: str) -> str:
    return write_json(path, app_to_document(app))
