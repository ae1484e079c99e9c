"""
JSON mappings for graphs, datasets and trained models.

Graph object::

    {"attr_dim": d, "undirected": bool,
     "vertices": [[...d floats...], ...],
     "edges": [{"i": int, "j": int, "attr": [...d floats...]}, ...]}

Floats are written with ``repr`` precision, so ``load(save(g)) == g`` bit for bit.
A dataset file is either a bare JSON array of graph objects or
``{"graphs": [...], "labels": [...]}``.
"""

import json
from collections.abc import Sequence
from pathlib import Path
from typing import TYPE_CHECKING, Any

from .exceptions import GraphConstructionError
from .graph import AttributedGraph, GraphDataset, from_edge_list

if TYPE_CHECKING:
    from .learners import AdalineModel, Codebook


GRAPH_KEYS = frozenset({"attr_dim", "undirected", "vertices", "edges"})
EDGE_KEYS = frozenset({"i", "j", "attr"})


def graph_to_dict(g: AttributedGraph) -> dict[str, Any]:
    return {
        "attr_dim": g.attr_dim,
        "undirected": g.undirected,
        "vertices": [g.cells[i, i].tolist() for i in range(g.order)],
        "edges": [{"i": i, "j": j, "attr": attr.tolist()} for i, j, attr in g.edges()],
    }


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_index(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _require(obj: Any, key: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise GraphConstructionError(f"graph object is missing '{key}'", field=key)
    return obj[key]


def _reject_unknown(obj: dict[str, Any], allowed: frozenset[str], what: str) -> None:
    for key in obj:
        if key not in allowed:
            raise GraphConstructionError(f"unknown key '{key}' in {what}", field=key)


def _attr_vector(value: Any, dim: int, where: str, field: str) -> list[float]:
    if not (isinstance(value, list) and all(_is_number(v) for v in value)):
        raise GraphConstructionError(f"{where} must be a list of numbers", field=field)
    if len(value) != dim:
        raise GraphConstructionError(
            f"{where} has dimension {len(value)}, attr_dim is {dim}", field=field
        )
    return value


def graph_from_dict(
    obj: dict[str, Any], *, extra_keys: frozenset[str] = frozenset()
) -> AttributedGraph:
    """
    Parse a graph object. Unknown keys, non-list vectors and non-integer
    edge endpoints raise GraphConstructionError naming the field.
    """
    if not isinstance(obj, dict):
        raise GraphConstructionError("graph must be a JSON object", field="graph")
    _reject_unknown(obj, GRAPH_KEYS | extra_keys, "graph object")

    attr_dim = _require(obj, "attr_dim")
    if not (_is_index(attr_dim) and attr_dim >= 1):
        raise GraphConstructionError("attr_dim must be an integer >= 1", field="attr_dim")
    vertices = _require(obj, "vertices")
    if not isinstance(vertices, list):
        raise GraphConstructionError("vertices must be a list", field="vertices")
    for idx, vertex in enumerate(vertices):
        _attr_vector(vertex, attr_dim, f"vertices[{idx}]", "vertices")
    undirected = obj.get("undirected", False)
    if not isinstance(undirected, bool):
        raise GraphConstructionError("undirected must be true or false", field="undirected")

    edges = obj.get("edges", [])
    if not isinstance(edges, list):
        raise GraphConstructionError("edges must be a list", field="edges")
    triples = []
    for idx, e in enumerate(edges):
        if not isinstance(e, dict) or not EDGE_KEYS <= e.keys():
            raise GraphConstructionError(
                f"edges[{idx}] needs 'i', 'j' and 'attr'", field="edges"
            )
        _reject_unknown(e, EDGE_KEYS, f"edges[{idx}]")
        if not (_is_index(e["i"]) and _is_index(e["j"])):
            raise GraphConstructionError(
                f"edges[{idx}] endpoints must be integers", field="edges"
            )
        attr = _attr_vector(e["attr"], attr_dim, f"edges[{idx}].attr", "edges")
        triples.append((e["i"], e["j"], attr))
    return from_edge_list(vertices, triples, undirected=undirected)


def dataset_to_obj(dataset: GraphDataset) -> Any:
    graphs = [graph_to_dict(g) for g in dataset.graphs]
    if dataset.labels is None:
        return graphs
    return {"graphs": graphs, "labels": list(dataset.labels)}


def dataset_from_obj(obj: Any) -> GraphDataset:
    labels: Sequence[float] | None = None
    if isinstance(obj, dict):
        graphs_obj = obj.get("graphs")
        if graphs_obj is None:
            raise GraphConstructionError("dataset object is missing 'graphs'", field="graphs")
        labels = obj.get("labels")
    else:
        graphs_obj = obj
    return GraphDataset.ingest((graph_from_dict(g) for g in graphs_obj), labels)


def codebook_to_obj(codebook: "Codebook") -> list[dict[str, Any]]:
    return [graph_to_dict(c) for c in codebook.centroids]


def codebook_from_obj(obj: list[dict[str, Any]]) -> "Codebook":
    from .learners import Codebook

    return Codebook(tuple(graph_from_dict(c) for c in obj))


def adaline_to_dict(model: "AdalineModel") -> dict[str, Any]:
    return {**graph_to_dict(model.weight), "bias": model.bias}


def adaline_from_dict(obj: dict[str, Any]) -> "AdalineModel":
    from .learners import AdalineModel

    weight = graph_from_dict(obj, extra_keys=frozenset({"bias"}))
    bias = _require(obj, "bias")
    if not _is_number(bias):
        raise GraphConstructionError("bias must be a number", field="bias")
    return AdalineModel(weight=weight, bias=float(bias))


def read_json(path: str | Path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path: str | Path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def load_graph(path: str | Path) -> AttributedGraph:
    return graph_from_dict(read_json(path))


def save_graph(path: str | Path, g: AttributedGraph) -> None:
    write_json(path, graph_to_dict(g))


def load_dataset(path: str | Path) -> GraphDataset:
    return dataset_from_obj(read_json(path))


def save_dataset(path: str | Path, dataset: GraphDataset) -> None:
    write_json(path, dataset_to_obj(dataset))
