import networkx as nx
import numpy as np
import pytest

from orbilearn import (
    AttributedGraph,
    EmptySampleError,
    GraphConstructionError,
    GraphDataset,
    Permutation,
    ShapeMismatchError,
    SolverCapExceededError,
    apply_permutation,
    frobenius_inner,
    from_edge_list,
    from_networkx,
    length,
    pad_to_order,
    to_networkx,
)
from orbilearn.graph import orbit_equal, zeros


def triangle() -> AttributedGraph:
    return from_edge_list(
        [[1.0], [2.0], [3.0]], [(0, 1, [0.5]), (1, 2, [0.25])], undirected=False
    )


def test_from_edge_list_layout() -> None:
    g = triangle()
    assert g.order == 3
    assert g.attr_dim == 1
    assert g.cells[1, 1, 0] == 2.0
    assert g.cells[0, 1, 0] == 0.5
    assert g.cells[1, 0, 0] == 0.0
    assert list((i, j) for i, j, _ in g.edges()) == [(0, 1), (1, 2)]


def test_undirected_edges_are_mirrored_and_reported_once() -> None:
    g = from_edge_list([[0.0]] * 3, [(2, 0, [1.0])], undirected=True)
    assert g.cells[0, 2, 0] == g.cells[2, 0, 0] == 1.0
    assert [(i, j) for i, j, _ in g.edges()] == [(0, 2)]


@pytest.mark.parametrize(
    "vertices, edges, undirected, field",
    [
        ([[0.0], [0.0]], [(0, 2, [1.0])], False, "edges"),
        ([[0.0], [0.0]], [(1, 1, [1.0])], False, "edges"),
        ([[0.0], [0.0]], [(0, 1, [1.0]), (0, 1, [2.0])], False, "edges"),
        ([[0.0], [0.0]], [(0, 1, [1.0]), (1, 0, [2.0])], True, "edges"),
        ([[0.0], [0.0]], [(0, 1, [1.0, 2.0])], False, "edges"),
        ([[0.0], [0.0, 1.0]], [], False, "vertices"),
        ([], [], False, "vertices"),
    ],
)
def test_from_edge_list_rejects_malformed_input(
    vertices: list, edges: list, undirected: bool, field: str
) -> None:
    with pytest.raises(GraphConstructionError) as exc:
        from_edge_list(vertices, edges, undirected=undirected)
    assert exc.value.field == field


def test_undirected_requires_symmetric_cells() -> None:
    cells = np.zeros((2, 2, 1))
    cells[0, 1, 0] = 1.0
    with pytest.raises(GraphConstructionError):
        AttributedGraph(cells, undirected=True)


def test_cells_are_copied_and_read_only() -> None:
    cells = np.ones((2, 2, 1))
    g = AttributedGraph(cells)
    cells[0, 0, 0] = 5.0
    assert g.cells[0, 0, 0] == 1.0
    with pytest.raises(ValueError):
        g.cells[0, 0, 0] = 2.0


def test_non_finite_cells_rejected() -> None:
    cells = np.zeros((2, 2, 1))
    cells[0, 0, 0] = np.nan
    with pytest.raises(GraphConstructionError):
        AttributedGraph(cells)


def test_padding_appends_null_vertices() -> None:
    g = triangle()
    padded = pad_to_order(g, 5)
    assert padded.order == 5
    assert np.array_equal(padded.cells[:3, :3], g.cells)
    assert not padded.cells[3:].any() and not padded.cells[:, 3:].any()
    assert length(padded) == length(g)
    assert pad_to_order(g, 3) is g
    with pytest.raises(ShapeMismatchError):
        pad_to_order(g, 2)


def test_permutation_group_law(rng: np.random.Generator, dense) -> None:
    g = dense(5)
    for _ in range(20):
        p, q = Permutation.random(5, rng), Permutation.random(5, rng)
        assert apply_permutation(apply_permutation(g, p), q) == apply_permutation(
            g, p.compose(q)
        )
        assert apply_permutation(apply_permutation(g, p), p.inverse()) == g
        assert p.compose(p.inverse()).is_identity()


def test_permutation_validation() -> None:
    with pytest.raises(GraphConstructionError):
        Permutation((0, 0, 1))
    with pytest.raises(ShapeMismatchError):
        Permutation.identity(2).compose(Permutation.identity(3))


def test_group_action_is_an_isometry(rng: np.random.Generator, dense) -> None:
    g, h = dense(4), dense(4)
    p = Permutation.random(4, rng)
    assert length(apply_permutation(g, p)) == pytest.approx(length(g), abs=1e-12)
    assert frobenius_inner(apply_permutation(g, p), apply_permutation(h, p)) == pytest.approx(
        frobenius_inner(g, h), abs=1e-12
    )


def test_equality_is_representative_equality(rng: np.random.Generator) -> None:
    g = triangle()
    p = Permutation((2, 0, 1))
    assert apply_permutation(g, p) != g
    assert orbit_equal(apply_permutation(g, p), g)
    assert not orbit_equal(g, zeros(3, 1))


def test_orbit_equal_is_capped() -> None:
    with pytest.raises(SolverCapExceededError):
        orbit_equal(zeros(9, 1), zeros(9, 1))


def test_shape_mismatch_names_field() -> None:
    with pytest.raises(ShapeMismatchError) as exc:
        frobenius_inner(zeros(2, 1), zeros(3, 1))
    assert exc.value.field == "graph"


def test_dataset_ingest_pads_to_common_order() -> None:
    dataset = GraphDataset.ingest([triangle(), zeros(5, 1)], labels=[1, -1])
    assert dataset.common_order == 5
    assert all(g.order == 5 for g in dataset)
    assert dataset.labels == (1.0, -1.0)
    assert len(dataset) == 2
    assert dataset[0].cells[1, 1, 0] == 2.0

    assert GraphDataset.ingest([triangle()], order=4).common_order == 4


def test_dataset_ingest_errors() -> None:
    with pytest.raises(EmptySampleError):
        GraphDataset.ingest([])
    with pytest.raises(ShapeMismatchError):
        GraphDataset.ingest([zeros(2, 1), zeros(2, 2)])
    with pytest.raises(ShapeMismatchError):
        GraphDataset.ingest([zeros(2, 1)], labels=[1, 1])


def test_networkx_interop() -> None:
    nx_graph = nx.Graph()
    nx_graph.add_node("a", attr=[1.0, 0.0])
    nx_graph.add_node("b")
    nx_graph.add_edge("a", "b", attr=[0.0, 2.0])
    nx_graph.add_node("c")
    nx_graph.add_edge("b", "c")

    g = from_networkx(nx_graph)
    assert g.undirected
    assert g.attr_dim == 2
    assert np.array_equal(g.cells[1, 1], [0.0, 0.0])
    assert np.array_equal(g.cells[1, 2], [1.0, 1.0])
    assert np.array_equal(g.cells[1, 0], [0.0, 2.0])

    back = from_networkx(to_networkx(g))
    assert back == g


def test_directed_networkx_graph() -> None:
    nx_graph = nx.DiGraph()
    nx_graph.add_edge(0, 1)
    g = from_networkx(nx_graph, attr_dim=1)
    assert not g.undirected
    assert g.cells[0, 1, 0] == 1.0 and g.cells[1, 0, 0] == 0.0
