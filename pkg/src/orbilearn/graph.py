"""
Attributed graphs as matrix representatives of orbifold points.

A graph of order n with attribute dimension d is stored densely as an
``(n, n, d)`` float array: cell ``(i, i)`` holds the vertex attribute, cell
``(i, j)`` with ``i != j`` the edge attribute, and the zero vector stands for the
null attribute (absent edge, padded vertex).

Permutations act on the right: ``apply_permutation(g, p)`` has cells
``cells[p(i)][p(j)]`` and composition is ``p.compose(q)(i) == p(q(i))``, so

    apply_permutation(apply_permutation(g, p), q) == apply_permutation(g, p.compose(q))
"""

import itertools
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import Any

import networkx as nx
import numpy as np

from .exceptions import (
    EmptySampleError,
    GraphConstructionError,
    ShapeMismatchError,
    SolverCapExceededError,
)

ORBIT_COMPARE_MAX_ORDER = 8


@dataclass(frozen=True, slots=True)
class Permutation:
    """
    A bijection on ``{0, ..., n-1}``.

    Attributes:
        mapping: ``mapping[i]`` is the image of ``i``.
    """

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        mapping = tuple(int(i) for i in self.mapping)
        if not mapping or sorted(mapping) != list(range(len(mapping))):
            raise GraphConstructionError(
                f"not a permutation of 0..{len(mapping) - 1}: {mapping}",
                field="permutation",
            )
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(tuple(int(i) for i in rng.permutation(n)))

    @property
    def size(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def compose(self, other: "Permutation") -> "Permutation":
        """Return ``self ∘ other``, i.e. ``i ↦ self(other(i))``."""
        if other.size != self.size:
            raise ShapeMismatchError(
                f"cannot compose permutations of sizes {self.size} and {other.size}",
                field="permutation",
            )
        return Permutation(tuple(self.mapping[j] for j in other.mapping))

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.mapping))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.mapping, dtype=np.intp)


@dataclass(frozen=True, slots=True, eq=False)
class AttributedGraph:
    """
    Immutable dense representative of an attributed graph.

    Attributes:
        cells: ``(n, n, d)`` array; copied on construction and read-only.
        undirected: When set, the matrix is required to be symmetric in its
            first two axes.
    """

    cells: np.ndarray
    undirected: bool = False

    def __post_init__(self) -> None:
        cells = np.array(self.cells, dtype=np.float64, copy=True)
        if cells.ndim != 3 or cells.shape[0] != cells.shape[1]:
            raise GraphConstructionError(
                f"cells must have shape (n, n, d), got {cells.shape}", field="cells"
            )
        if cells.shape[0] < 1 or cells.shape[2] < 1:
            raise GraphConstructionError(
                f"order and attribute dimension must be positive, got {cells.shape}",
                field="cells",
            )
        if not np.all(np.isfinite(cells)):
            raise GraphConstructionError("cells must be finite", field="cells")
        if self.undirected and not np.array_equal(cells, cells.transpose(1, 0, 2)):
            raise GraphConstructionError(
                "undirected graph must have a symmetric matrix", field="undirected"
            )
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def order(self) -> int:
        return self.cells.shape[0]

    @property
    def attr_dim(self) -> int:
        return self.cells.shape[2]

    def __eq__(self, other: object) -> bool:
        # Representative equality; orbit equality is orbit_equal().
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        return self.undirected == other.undirected and np.array_equal(
            self.cells, other.cells
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        kind = "undirected" if self.undirected else "directed"
        return f"AttributedGraph(order={self.order}, attr_dim={self.attr_dim}, {kind})"

    def vertex_attributes(self) -> np.ndarray:
        return np.array([self.cells[i, i] for i in range(self.order)])

    def edges(self) -> Iterator[tuple[int, int, np.ndarray]]:
        """
        Yield ``(i, j, attr)`` for every present edge.
        Undirected graphs report each edge once with ``i < j``.
        """
        present = np.any(self.cells != 0.0, axis=-1)
        for i, j in zip(*np.nonzero(present)):
            if i == j or (self.undirected and i > j):
                continue
            yield int(i), int(j), self.cells[i, j]


def zeros(order: int, attr_dim: int, undirected: bool = False) -> AttributedGraph:
    return AttributedGraph(np.zeros((order, order, attr_dim)), undirected=undirected)


def from_edge_list(
    vertices: Sequence[Sequence[float]],
    edges: Iterable[tuple[int, int, Sequence[float]]],
    undirected: bool = False,
) -> AttributedGraph:
    """
    Build the dense representative from vertex attributes and an edge list.

    Args:
        vertices: One attribute vector per vertex; all of the same length d.
        edges: ``(i, j, attr)`` triples. The diagonal is reserved for vertex
            attributes, so ``i == j`` is rejected.
        undirected: Set both ``(i, j)`` and ``(j, i)``; ``(i, j)`` and
            ``(j, i)`` then count as the same edge.
    """
    if len(vertices) == 0:
        raise GraphConstructionError("a graph needs at least one vertex", field="vertices")

    dim = len(vertices[0])
    if dim == 0:
        raise GraphConstructionError("attribute dimension must be positive", field="vertices")
    n = len(vertices)
    cells = np.zeros((n, n, dim))

    for i, attr in enumerate(vertices):
        if len(attr) != dim:
            raise GraphConstructionError(
                f"vertex {i} has dimension {len(attr)}, expected {dim}", field="vertices"
            )
        cells[i, i] = attr

    seen: set[tuple[int, int]] = set()
    for i, j, attr in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise GraphConstructionError(
                f"edge ({i}, {j}) out of range for order {n}", field="edges"
            )
        if i == j:
            raise GraphConstructionError(
                f"self-loop ({i}, {j}): the diagonal holds vertex attributes", field="edges"
            )
        if len(attr) != dim:
            raise GraphConstructionError(
                f"edge ({i}, {j}) has dimension {len(attr)}, expected {dim}", field="edges"
            )
        key = (min(i, j), max(i, j)) if undirected else (i, j)
        if key in seen:
            raise GraphConstructionError(f"duplicate edge ({i}, {j})", field="edges")
        seen.add(key)

        cells[i, j] = attr
        if undirected:
            cells[j, i] = attr

    return AttributedGraph(cells, undirected=undirected)


def pad_to_order(g: AttributedGraph, n: int) -> AttributedGraph:
    """Align ``g`` to order ``n`` by appending isolated null-attribute vertices."""
    if n < g.order:
        raise ShapeMismatchError(
            f"cannot pad a graph of order {g.order} down to {n}", field="n"
        )
    if n == g.order:
        return g
    cells = np.zeros((n, n, g.attr_dim))
    cells[: g.order, : g.order] = g.cells
    return AttributedGraph(cells, undirected=g.undirected)


def permute_cells(cells: np.ndarray, p: Permutation) -> np.ndarray:
    """The group action on a raw ``(n, n, ...)`` array."""
    if p.size != cells.shape[0]:
        raise ShapeMismatchError(
            f"permutation of size {p.size} applied to order {cells.shape[0]}",
            field="permutation",
        )
    m = p.as_array()
    return cells[np.ix_(m, m)]


def apply_permutation(g: AttributedGraph, p: Permutation) -> AttributedGraph:
    """Return the representative with cells ``cells[p(i)][p(j)]`` (same orbit)."""
    return AttributedGraph(permute_cells(g.cells, p), undirected=g.undirected)


def check_same_shape(x: AttributedGraph, y: AttributedGraph) -> None:
    if x.cells.shape != y.cells.shape:
        raise ShapeMismatchError(
            f"shape mismatch: order {x.order}/dim {x.attr_dim} vs "
            f"order {y.order}/dim {y.attr_dim} (pad first)",
            field="graph",
        )


def frobenius_inner(g: AttributedGraph, h: AttributedGraph) -> float:
    """Sum over all n² cells of the attribute dot products."""
    check_same_shape(g, h)
    return float(np.einsum("ijk,ijk->", g.cells, h.cells))


def length(g: AttributedGraph) -> float:
    return float(np.sqrt(max(frobenius_inner(g, g), 0.0)))


def orbit_equal(g: AttributedGraph, h: AttributedGraph, atol: float = 1e-12) -> bool:
    """Brute-force test whether ``h`` is a permuted copy of ``g``."""
    check_same_shape(g, h)
    if g.order > ORBIT_COMPARE_MAX_ORDER:
        raise SolverCapExceededError(
            f"orbit comparison is brute force and capped at order "
            f"{ORBIT_COMPARE_MAX_ORDER}, got {g.order}",
            field="order",
        )
    for mapping in itertools.permutations(range(g.order)):
        m = np.asarray(mapping, dtype=np.intp)
        if np.allclose(g.cells[np.ix_(m, m)], h.cells, rtol=0.0, atol=atol):
            return True
    return False


@dataclass(frozen=True, slots=True)
class GraphDataset:
    """
    Graphs padded to one common order, with optional labels.

    Attributes:
        graphs: Members, each of order ``common_order``.
        common_order: The padding target n.
        attr_dim: Shared attribute dimension d.
        labels: Optional per-graph real or ±1 labels.
    """

    graphs: tuple[AttributedGraph, ...]
    common_order: int
    attr_dim: int
    labels: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        for idx, g in enumerate(self.graphs):
            if g.order != self.common_order or g.attr_dim != self.attr_dim:
                raise ShapeMismatchError(
                    f"graph {idx} has order {g.order}/dim {g.attr_dim}, expected "
                    f"{self.common_order}/{self.attr_dim}",
                    field="graphs",
                )
        if self.labels is not None and len(self.labels) != len(self.graphs):
            raise ShapeMismatchError(
                f"{len(self.labels)} labels for {len(self.graphs)} graphs", field="labels"
            )

    @classmethod
    def ingest(
        cls,
        graphs: Iterable[AttributedGraph],
        labels: Iterable[float] | None = None,
        *,
        order: int | None = None,
    ) -> "GraphDataset":
        """Pad every graph to the largest order (or ``order`` if larger)."""
        graphs = list(graphs)
        if not graphs:
            raise EmptySampleError("dataset has no graphs", field="graphs")
        dims = {g.attr_dim for g in graphs}
        if len(dims) != 1:
            raise ShapeMismatchError(
                f"mixed attribute dimensions {sorted(dims)}", field="attr_dim"
            )
        common = max(g.order for g in graphs)
        if order is not None:
            common = max(common, order)
        return cls(
            graphs=tuple(pad_to_order(g, common) for g in graphs),
            common_order=common,
            attr_dim=dims.pop(),
            labels=None if labels is None else tuple(float(y) for y in labels),
        )

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self) -> Iterator[AttributedGraph]:
        return iter(self.graphs)

    def __getitem__(self, idx: int) -> AttributedGraph:
        return self.graphs[idx]


def from_networkx(
    nx_graph: nx.Graph, attr_key: str = "attr", attr_dim: int | None = None
) -> AttributedGraph:
    """
    Convert a networkx graph; vertices are taken in ``nx_graph.nodes`` order.

    Missing vertex attributes become the zero vector, missing edge attributes
    the all-ones vector (plain structure).
    """
    nodes = list(nx_graph.nodes)
    if not nodes:
        raise GraphConstructionError("a graph needs at least one vertex", field="vertices")
    index = {node: i for i, node in enumerate(nodes)}

    def as_vector(value: Any) -> np.ndarray:
        return np.atleast_1d(np.asarray(value, dtype=np.float64))

    if attr_dim is None:
        attr_dim = 1
        for _, data in itertools.chain(nx_graph.nodes(data=True), _edge_data(nx_graph)):
            if attr_key in data:
                attr_dim = as_vector(data[attr_key]).shape[0]
                break

    vertices = [
        as_vector(data.get(attr_key, np.zeros(attr_dim))) for _, data in nx_graph.nodes(data=True)
    ]
    edges = [
        (index[u], index[v], as_vector(data.get(attr_key, np.ones(attr_dim))))
        for u, v, data in nx_graph.edges(data=True)
    ]
    return from_edge_list(vertices, edges, undirected=not nx_graph.is_directed())


def _edge_data(nx_graph: nx.Graph) -> Iterator[tuple[Any, dict[str, Any]]]:
    for u, v, data in nx_graph.edges(data=True):
        yield (u, v), data


def to_networkx(g: AttributedGraph, attr_key: str = "attr") -> nx.Graph:
    nx_graph: nx.Graph = nx.Graph() if g.undirected else nx.DiGraph()
    for i in range(g.order):
        nx_graph.add_node(i, **{attr_key: g.cells[i, i].tolist()})
    for i, j, attr in g.edges():
        nx_graph.add_edge(i, j, **{attr_key: attr.tolist()})
    return nx_graph
