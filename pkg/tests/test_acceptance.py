"""
End-to-end properties of the library at desk scale. The default runs are
reduced; the ``slow`` variants use the full sizes and are selected with
``pytest -m slow``.
"""

import dataclasses
import itertools
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from orbilearn import (
    LOSSES,
    AttributedGraph,
    LossKind,
    Permutation,
    SggConfig,
    SolverConfig,
    StepSchedule,
    Verdict,
    apply_permutation,
    distance,
    estimate_mean,
    heuristic_align,
    kernel,
    length,
    quantize,
)
from orbilearn.datagen import default_mixture, make_rng, random_graph, sample_mixture
from orbilearn.experiments import (
    ExperimentConfig,
    gradcheck_table,
    random_loss_point,
    rerun_manifest,
    run_experiment,
)
from orbilearn.graph import permute_cells
from orbilearn.serialization import read_json
from orbilearn.sgg import ProjectionBall


def brute_force_distance(x: AttributedGraph, y: AttributedGraph) -> float:
    return min(
        float(np.linalg.norm(apply_permutation(x, Permutation(p)).cells - y.cells))
        for p in itertools.permutations(range(x.order))
    )


def mcs_edges(x: AttributedGraph, y: AttributedGraph) -> int:
    gx = nx.Graph([(i, j) for i, j, _ in x.edges()])
    gy = nx.Graph([(i, j) for i, j, _ in y.edges()])
    small, large = sorted((gx, gy), key=nx.Graph.number_of_edges)
    edges = list(small.edges())
    for size in range(len(edges), 0, -1):
        for subset in itertools.combinations(edges, size):
            matcher = nx.algorithms.isomorphism.GraphMatcher(large, nx.Graph(subset))
            if matcher.subgraph_is_monomorphic():
                return size
    return 0


def sizes(fast: int, full: int) -> list:
    return [fast, pytest.param(full, marks=pytest.mark.slow)]


@pytest.mark.parametrize("pairs", sizes(40, 200))
def test_metric_suite(pairs: int, exact: SolverConfig) -> None:
    rng = make_rng(1)
    for _ in range(pairs):
        n = int(rng.integers(1, 7))
        x, y, z = (random_graph(n, 2, 0.5, rng) for _ in range(3))
        dxy = distance(x, y, exact)
        assert abs(dxy - distance(y, x, exact)) <= 1e-9
        assert dxy <= distance(x, z, exact) + distance(z, y, exact) + 1e-9
        moved = apply_permutation(x, Permutation.random(n, rng))
        assert distance(x, moved, exact) == 0.0


@pytest.mark.parametrize("pairs", sizes(40, 200))
def test_kernel_form_matches_min_norm(pairs: int, exact: SolverConfig) -> None:
    rng = make_rng(2)
    for _ in range(pairs):
        n = int(rng.integers(1, 7))
        x, y = random_graph(n, 2, 0.5, rng), random_graph(n, 2, 0.5, rng)
        k = kernel(x, y, exact).kernel_value
        kernel_form = np.sqrt(max(length(x) ** 2 - 2.0 * k + length(y) ** 2, 0.0))
        assert abs(kernel_form - brute_force_distance(x, y)) <= 1e-9


@pytest.mark.parametrize("pairs", sizes(15, 50))
def test_binary_kernel_counts_common_edges(pairs: int, exact: SolverConfig) -> None:
    rng = make_rng(3)
    for _ in range(pairs):
        n = int(rng.integers(2, 7))
        x = random_graph(n, 1, 0.5, rng, undirected=True, binary=True)
        y = random_graph(n, 1, 0.5, rng, undirected=True, binary=True)
        assert kernel(x, y, exact).kernel_value == pytest.approx(2 * mcs_edges(x, y))


@pytest.mark.parametrize("trials", sizes(10, 100))
def test_gradient_suite(trials: int, exact: SolverConfig) -> None:
    _, counts = gradcheck_table(LOSSES.kinds, trials, make_rng(4), exact)
    for kind in LOSSES.kinds:
        assert counts[str(kind)][str(Verdict.FAIL)] == 0
        assert counts[str(kind)][str(Verdict.PASS)] == trials


def _permuted_point(point, p: Permutation):
    if isinstance(point.param, tuple):
        param = tuple(apply_permutation(c, p) for c in point.param)
    else:
        param = apply_permutation(point.param, p)
    return dataclasses.replace(point, param=param)


@pytest.mark.parametrize("perms", sizes(10, 50))
@pytest.mark.parametrize("kind", list(LossKind))
def test_selections_commute_with_permutations(
    kind: LossKind, perms: int, exact: SolverConfig
) -> None:
    rng = make_rng(5)
    impl = LOSSES.get(kind).implementation
    point = random_loss_point(kind, rng)
    base, _ = impl.gradient(point, exact)
    for _ in range(perms):
        p = Permutation.random(point.datum.order, rng)
        moved, _ = impl.gradient(_permuted_point(point, p), exact)
        for b, m in zip(base, moved):
            expected = permute_cells(b, p) if b.ndim == 3 else b
            assert np.max(np.abs(m - expected)) <= 1e-9


def test_euclidean_reduction(exact: SolverConfig) -> None:
    rng = make_rng(6)
    values = rng.normal(size=1000)
    graphs = [AttributedGraph(np.array([[[v]]])) for v in values]
    cfg = SggConfig(
        schedule=StepSchedule.harmonic(),
        projection=ProjectionBall(1e6),
        iterations=1000,
        checkpoint_every=1,
        solver=exact,
    )
    _, trace = estimate_mean(graphs, cfg)
    running = np.cumsum(values) / np.arange(1, 1001)
    assert trace.steps_run == 1000
    for t, iterate in enumerate(trace.iterates[1:], start=1):
        assert abs(float(iterate[0][0, 0, 0]) - running[t - 1]) <= 1e-12


def test_mean_consistency_trend_reduced(tmp_path: Path) -> None:
    cfg = ExperimentConfig.from_dict(
        {
            "kind": "mean_consistency",
            "seeds": [0, 1, 2],
            "sizes": [5, 50],
            "solver": {"restarts": 4},
            "output_dir": str(tmp_path),
        }
    )
    run_experiment(cfg)
    medians = read_json(tmp_path / "summary.json")["median_error"]
    assert medians["50"] < medians["5"]


@pytest.mark.slow
def test_mean_consistency_trend(tmp_path: Path) -> None:
    run_experiment(ExperimentConfig.default("mean_consistency", str(tmp_path)))
    assert read_json(tmp_path / "summary.json")["non_increasing"] is True


@pytest.mark.parametrize(
    "seeds, overrides, required",
    [
        (range(3), {"count": 60, "holdout": 15, "sgg": {"iterations": 150}}, 2),
        pytest.param(range(10), {}, 8, marks=pytest.mark.slow),
    ],
)
def test_quantization_purity(tmp_path: Path, seeds, overrides: dict, required: int) -> None:
    good = 0
    for seed in seeds:
        out = tmp_path / str(seed)
        cfg = ExperimentConfig.from_dict(
            {"kind": "quantize", "seeds": [seed], "output_dir": str(out), **overrides}
        )
        run_experiment(cfg)
        good += read_json(out / "summary.json")["purity"] >= 0.9
    assert good >= required


def test_single_centroid_quantization_is_mean_estimation(exact: SolverConfig) -> None:
    cfg = SggConfig(iterations=40, solver=exact)
    data = [g for g, _ in sample_mixture(default_mixture(0), 40)]
    mean, _ = estimate_mean(data, cfg)
    codebook, _ = quantize(data, 1, cfg)
    assert np.array_equal(mean.cells, codebook[0].cells)


@pytest.mark.parametrize(
    "seeds, overrides, required",
    [
        (range(3), {"count": 80, "holdout": 20, "sgg": {"iterations": 400}}, 2),
        pytest.param(range(10), {}, 9, marks=pytest.mark.slow),
    ],
)
def test_adaline_accuracy(tmp_path: Path, seeds, overrides: dict, required: int) -> None:
    good = 0
    for seed in seeds:
        out = tmp_path / str(seed)
        cfg = ExperimentConfig.from_dict(
            {"kind": "adaline", "seeds": [seed], "output_dir": str(out), **overrides}
        )
        run_experiment(cfg)
        good += read_json(out / "summary.json")["accuracy"] >= 0.95
    assert good >= required


@pytest.mark.parametrize("pairs, max_order", [(60, 6), pytest.param(500, 8, marks=pytest.mark.slow)])
def test_heuristic_soundness(pairs: int, max_order: int, exact: SolverConfig) -> None:
    heuristic = SolverConfig(mode="heuristic")
    rng = make_rng(7)
    close = 0
    for _ in range(pairs):
        n = int(rng.integers(1, max_order + 1))
        x, y = random_graph(n, 2, 0.5, rng), random_graph(n, 2, 0.5, rng)
        h = heuristic_align(x, y, heuristic).kernel_value
        e = kernel(x, y, exact).kernel_value
        assert h <= e + 1e-9
        close += h >= e - 0.05 * abs(e)
    assert close >= 0.9 * pairs


@pytest.mark.parametrize("kind", ["quantize", "mean_consistency"])
def test_rerun_from_manifest_is_byte_identical(tmp_path: Path, kind: str) -> None:
    reduced = {
        "quantize": {"count": 30, "holdout": 6, "sgg": {"iterations": 40}},
        "mean_consistency": {"seeds": [0, 1], "sizes": [4, 8]},
    }[kind]
    cfg = ExperimentConfig.from_dict({"kind": kind, "output_dir": str(tmp_path / "a"), **reduced})
    manifest = run_experiment(cfg)
    rerun = rerun_manifest(manifest, str(tmp_path / "b"))
    assert read_json(manifest)["artifacts"] == read_json(rerun)["artifacts"]
    for name in read_json(manifest)["artifacts"]:
        if name.endswith(".csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
