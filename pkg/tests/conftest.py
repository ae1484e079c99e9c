from collections.abc import Callable, Iterator

import numpy as np
import pytest

from orbilearn import AttributedGraph, SolverConfig, SolverMode
from orbilearn.datagen import random_graph
from orbilearn.settings import get_settings

GraphFactory = Callable[..., AttributedGraph]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def exact() -> SolverConfig:
    return SolverConfig()


@pytest.fixture
def heuristic() -> SolverConfig:
    return SolverConfig(mode=SolverMode.HEURISTIC)


@pytest.fixture
def dense(rng: np.random.Generator) -> GraphFactory:
    """Fully populated Gaussian graphs; optimal alignments are unique a.s."""

    def make(order: int = 4, attr_dim: int = 2) -> AttributedGraph:
        return AttributedGraph(rng.normal(size=(order, order, attr_dim)))

    return make


@pytest.fixture
def sparse(rng: np.random.Generator) -> GraphFactory:
    def make(
        order: int = 5, attr_dim: int = 2, edge_prob: float = 0.5, undirected: bool = False
    ) -> AttributedGraph:
        return random_graph(order, attr_dim, edge_prob, rng, undirected=undirected)

    return make


@pytest.fixture(autouse=True)
def fresh_settings() -> Iterator[None]:
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def single_thread(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("ORBILEARN_THREADS", "1")
