import json
from pathlib import Path

import numpy as np
import pytest

from orbilearn import AdalineModel, Codebook, GraphConstructionError, GraphDataset
from orbilearn.serialization import (
    adaline_from_dict,
    adaline_to_dict,
    codebook_from_obj,
    codebook_to_obj,
    dataset_from_obj,
    graph_from_dict,
    graph_to_dict,
    load_dataset,
    load_graph,
    save_dataset,
    save_graph,
)


def test_graph_file_round_trip_is_bit_exact(tmp_path: Path, sparse) -> None:
    g = sparse(6, 3, undirected=True)
    path = tmp_path / "g.json"
    save_graph(path, g)
    assert load_graph(path) == g


def test_graph_object_layout() -> None:
    obj = {
        "attr_dim": 1,
        "undirected": False,
        "vertices": [[1.0], [0.0]],
        "edges": [{"i": 0, "j": 1, "attr": [0.5]}],
    }
    g = graph_from_dict(obj)
    assert g.cells[0, 1, 0] == 0.5
    assert graph_to_dict(g) == obj


@pytest.mark.parametrize(
    "obj, field",
    [
        ({"vertices": [[1.0]]}, "attr_dim"),
        ({"attr_dim": 1}, "vertices"),
        ({"attr_dim": 2, "vertices": [[1.0]]}, "vertices"),
        ({"attr_dim": 1, "vertices": [[1.0], [1.0]], "edges": [{"i": 0}]}, "edges"),
        ({"attr_dim": 1, "vertices": 5}, "vertices"),
        ({"attr_dim": 1, "vertices": [1.0]}, "vertices"),
        ({"attr_dim": "1", "vertices": [[1.0]]}, "attr_dim"),
        ({"attr_dim": 1, "vertices": [[1.0]], "colour": "red"}, "colour"),
        ({"attr_dim": 1, "vertices": [[1.0]], "undirected": "yes"}, "undirected"),
        ({"attr_dim": 1, "vertices": [[1.0], [1.0]], "edges": {"i": 0}}, "edges"),
        ({"attr_dim": 1, "vertices": [[1.0], [1.0]], "edges": [{"i": 0.5, "j": 1, "attr": [1.0]}]}, "edges"),
        ({"attr_dim": 1, "vertices": [[1.0], [1.0]], "edges": [{"i": 0, "j": 1, "attr": 1.0}]}, "edges"),
    ],
)
def test_malformed_graph_objects(obj: dict, field: str) -> None:
    with pytest.raises(GraphConstructionError) as exc:
        graph_from_dict(obj)
    assert exc.value.field == field


def test_dataset_file_forms(tmp_path: Path, sparse) -> None:
    graphs = [sparse(3), sparse(4)]
    bare = tmp_path / "bare.json"
    bare.write_text(json.dumps([graph_to_dict(g) for g in graphs]))
    dataset = load_dataset(bare)
    assert dataset.labels is None
    assert dataset.common_order == 4

    labeled = GraphDataset.ingest(graphs, labels=[1, -1])
    save_dataset(tmp_path / "labeled.json", labeled)
    back = load_dataset(tmp_path / "labeled.json")
    assert back.labels == (1.0, -1.0)
    assert all(a == b for a, b in zip(back, labeled))


def test_dataset_object_without_graphs() -> None:
    with pytest.raises(GraphConstructionError):
        dataset_from_obj({"labels": [1]})


def test_model_objects(sparse) -> None:
    codebook = Codebook((sparse(3), sparse(3)))
    assert [c for c in codebook_from_obj(codebook_to_obj(codebook))] == list(codebook)

    model = AdalineModel(weight=sparse(3), bias=-0.25)
    obj = adaline_to_dict(model)
    assert obj["bias"] == -0.25
    back = adaline_from_dict(json.loads(json.dumps(obj)))
    assert back.bias == -0.25
    assert np.array_equal(back.weight.cells, model.weight.cells)
