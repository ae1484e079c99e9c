"""
Learners assembled from the subgradient selections and the SGG method:
mean and median graph estimation, structure quantization (online
competitive learning), the orbifold adaline, and batch clustering baselines.
"""

import itertools
import logging
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from .alignment import SolverConfig, distance, distance_matrix, kernel
from .enums import Distortion
from .exceptions import ConfigurationError, EmptySampleError, ShapeMismatchError
from .gendiff import (
    check_label,
    quantize_winner,
    subgrad_adaline,
    subgrad_dist,
    subgrad_quantize,
    subgrad_sq_half_dist,
)
from .graph import AttributedGraph, check_same_shape
from .settings import thread_map
from .sgg import Params, ProjectionBall, SggConfig, SggTrace, SubgradFn, run_sgg

log = logging.getLogger(__name__)

DISTINCT_TOL = 1e-6

LabeledGraph = tuple[AttributedGraph, float]


@dataclass(frozen=True, slots=True)
class Codebook:
    """
    A k-tuple of centroid graphs.

    Attributes:
        centroids: Centroids of uniform order and attribute dimension.
    """

    centroids: tuple[AttributedGraph, ...]

    def __post_init__(self) -> None:
        centroids = tuple(self.centroids)
        if not centroids:
            raise EmptySampleError("codebook needs at least one centroid", field="centroids")
        for c in centroids[1:]:
            check_same_shape(centroids[0], c)
        object.__setattr__(self, "centroids", centroids)

    @property
    def k(self) -> int:
        return len(self.centroids)

    def __getitem__(self, idx: int) -> AttributedGraph:
        return self.centroids[idx]

    def __iter__(self) -> Iterator[AttributedGraph]:
        return iter(self.centroids)


@dataclass(frozen=True, slots=True)
class AdalineModel:
    weight: AttributedGraph
    bias: float = 0.0

    def score(self, x: AttributedGraph, cfg: SolverConfig) -> float:
        check_same_shape(x, self.weight)
        return kernel(x, self.weight, cfg).kernel_value + self.bias


# --- stream plumbing ------------------------------------------------------------


def _first(stream: Iterable[Any], what: str) -> tuple[Any, Iterator[Any]]:
    it = iter(stream)
    try:
        head = next(it)
    except StopIteration:
        raise EmptySampleError(f"{what} is empty", field=what) from None
    return head, itertools.chain([head], it)


def _distinct_check_solver(order: int, solver: SolverConfig) -> SolverConfig:
    return solver.exact_variant() if order <= solver.exact_max_order else solver


def _first_distinct(
    stream: Iterable[AttributedGraph],
    k: int,
    solver: SolverConfig,
    scan_limit: int,
    separation: float = DISTINCT_TOL,
) -> tuple[list[AttributedGraph], Iterator[AttributedGraph]]:
    """
    The first ``k`` samples pairwise farther apart than ``separation`` and the
    stream with every inspected sample put back in front.
    """
    it = iter(stream)
    seen: list[AttributedGraph] = []
    chosen: list[AttributedGraph] = []
    for g in it:
        seen.append(g)
        check = _distinct_check_solver(g.order, solver)
        if all(distance(g, c, check) > separation for c in chosen):
            chosen.append(g)
        if len(chosen) == k or len(seen) >= scan_limit:
            break
    if len(seen) < k:
        raise EmptySampleError(
            f"need at least {k} samples to initialize, got {len(seen)}", field="k"
        )
    if len(chosen) < k:
        log.warning(
            "only %d distinct samples among the first %d; filling the codebook "
            "with repeats",
            len(chosen),
            len(seen),
        )
        chosen.extend(seen[: k - len(chosen)])
    return chosen, itertools.chain(seen, it)


def _resolve_ball(
    cfg: SggConfig, head: Sequence[AttributedGraph], eval_graphs: Sequence[AttributedGraph]
) -> SggConfig:
    if cfg.projection is not None:
        return cfg
    return cfg.with_projection(ProjectionBall.covering([*head, *eval_graphs]))


def _graph(cells: np.ndarray, like: AttributedGraph) -> AttributedGraph:
    return AttributedGraph(cells, undirected=like.undirected)


# --- central points ---------------------------------------------------------------


def _central_point(
    stream: Iterable[AttributedGraph],
    cfg: SggConfig,
    subgrad: Any,
    eval_sample: Sequence[AttributedGraph] | None,
) -> tuple[AttributedGraph, SggTrace]:
    first, stream = _first(stream, "stream")

    def step(obs: AttributedGraph, params: Params, solver: SolverConfig) -> tuple[Params, float]:
        sub = subgrad(obs, AttributedGraph(params[0]), solver)
        return (sub.matrix,), sub.loss_value

    cfg = _resolve_ball(cfg, [first], eval_sample or [])
    params, trace = run_sgg(stream, step, (first.cells,), cfg, eval_sample=eval_sample)
    return _graph(params[0], first), trace


def estimate_mean(
    stream: Iterable[AttributedGraph],
    cfg: SggConfig,
    *,
    eval_sample: Sequence[AttributedGraph] | None = None,
) -> tuple[AttributedGraph, SggTrace]:
    """
    SGG on the risk ``½ E d(X, W)²`` starting from the first sample.

    With order-1 graphs and ``StepSchedule.harmonic()`` the iterates are the
    running sample means.
    """
    log.info("estimating mean graph (%d iterations)", cfg.iterations)
    return _central_point(stream, cfg, subgrad_sq_half_dist, eval_sample)


def estimate_median(
    stream: Iterable[AttributedGraph],
    cfg: SggConfig,
    *,
    eval_sample: Sequence[AttributedGraph] | None = None,
) -> tuple[AttributedGraph, SggTrace]:
    """SGG on the risk ``E d(X, W)``, starting from the first sample."""
    log.info("estimating median graph (%d iterations)", cfg.iterations)
    return _central_point(stream, cfg, subgrad_dist, eval_sample)


# --- quantization -------------------------------------------------------------------


def _quantize_step(distortion: Distortion) -> SubgradFn:
    def step(obs: AttributedGraph, params: Params, solver: SolverConfig) -> tuple[Params, float]:
        codebook = [AttributedGraph(p) for p in params]
        winner, sub = subgrad_quantize(obs, codebook, solver, distortion)
        grads = [np.zeros_like(p) for p in params]
        grads[winner] = sub.matrix
        return tuple(grads), sub.loss_value

    return step


def quantize(
    stream: Iterable[AttributedGraph],
    k: int,
    cfg: SggConfig,
    distortion: Distortion = Distortion.SQ,
    *,
    eval_sample: Sequence[AttributedGraph] | None = None,
    init_separation: float = DISTINCT_TOL,
) -> tuple[Codebook, SggTrace]:
    """
    Online competitive learning: each observation moves only its closest
    centroid, by one SGG step on the winner-take-all distortion.

    Centroids start at the first ``k`` samples that are pairwise farther apart
    than ``init_separation``; with ``k == 1`` the
    run is step for step the same as ``estimate_mean``.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1", field="k")
    distortion = Distortion(distortion)
    init, stream = _first_distinct(
        stream, k, cfg.solver, scan_limit=max(cfg.iterations, k), separation=init_separation
    )
    log.info("quantizing with k=%d, %s distortion", k, distortion)

    cfg = _resolve_ball(cfg, init, eval_sample or [])
    params, trace = run_sgg(
        stream,
        _quantize_step(distortion),
        tuple(c.cells for c in init),
        cfg,
        eval_sample=eval_sample,
    )
    return Codebook(tuple(_graph(p, init[0]) for p in params)), trace


def assign(
    dataset: Sequence[AttributedGraph],
    codebook: Codebook,
    cfg: SolverConfig,
    distortion: Distortion = Distortion.SQ,
) -> tuple[list[int], float]:
    """Nearest-centroid index per graph and the mean distortion."""
    if not dataset:
        raise EmptySampleError("cannot assign an empty dataset", field="dataset")
    results = thread_map(lambda x: quantize_winner(x, codebook.centroids, cfg), dataset)
    labels = [winner for winner, _ in results]
    dists = [scored[winner][0] for winner, scored in results]
    if Distortion(distortion) is Distortion.SQ:
        return labels, float(np.mean([0.5 * d * d for d in dists]))
    return labels, float(np.mean(dists))


def distortion_summary(
    dataset: Sequence[AttributedGraph], codebook: Codebook, cfg: SolverConfig
) -> dict[str, float]:
    """Mean ½d² (the training loss) and mean d² to the nearest centroid."""
    _, half = assign(dataset, codebook, cfg, Distortion.SQ)
    return {"half_sq_distance": half, "sq_distance": 2.0 * half}


def purity(assignments: Sequence[int], labels: Sequence[Any]) -> float:
    """Fraction of points carrying their cluster's majority label."""
    if not assignments:
        raise EmptySampleError("purity of an empty assignment", field="assignments")
    if len(assignments) != len(labels):
        raise ShapeMismatchError(
            f"{len(assignments)} assignments but {len(labels)} labels", field="labels"
        )
    clusters: dict[int, Counter[Any]] = {}
    for a, y in zip(assignments, labels):
        clusters.setdefault(a, Counter())[y] += 1
    majority = sum(c.most_common(1)[0][1] for c in clusters.values())
    return majority / len(assignments)


def batch_kcentroids(
    dataset: Sequence[AttributedGraph],
    k: int,
    rounds: int,
    cfg: SggConfig,
    *,
    init_separation: float = DISTINCT_TOL,
) -> Codebook:
    """
    Lloyd-style baseline: assign every graph to its nearest centroid, then
    recentre each centroid with ``estimate_mean`` over its cluster (members
    cycled for ``cfg.iterations`` steps). Stops after ``rounds`` rounds or
    when the assignment is unchanged.
    """
    if len(dataset) < k:
        raise EmptySampleError(
            f"dataset of size {len(dataset)} is smaller than k={k}", field="dataset"
        )
    init, _ = _first_distinct(
        dataset, k, cfg.solver, scan_limit=len(dataset), separation=init_separation
    )
    codebook = Codebook(tuple(init))
    previous: list[int] | None = None
    for r in range(rounds):
        assignments, dist = assign(dataset, codebook, cfg.solver)
        log.info("round %d: distortion %.6g", r, dist)
        if assignments == previous:
            break
        previous = assignments
        centroids = list(codebook.centroids)
        for j in range(k):
            members = [g for g, a in zip(dataset, assignments) if a == j]
            if not members:
                log.warning("cluster %d is empty in round %d; centroid kept", j, r)
                continue
            centroids[j], _ = estimate_mean(itertools.cycle(members), cfg)
        codebook = Codebook(tuple(centroids))
    return codebook


def set_median(
    dataset: Sequence[AttributedGraph], cfg: SolverConfig
) -> tuple[int, AttributedGraph]:
    """The element minimizing the summed distance to all others; ties to the lowest index."""
    if not dataset:
        raise EmptySampleError("set median of an empty dataset", field="dataset")
    sums = distance_matrix(dataset, cfg).sum(axis=1)
    idx = int(np.argmin(sums))
    return idx, dataset[idx]


def batch_kmedoids(
    dataset: Sequence[AttributedGraph],
    k: int,
    rounds: int,
    cfg: SolverConfig,
    *,
    init_separation: float = DISTINCT_TOL,
) -> tuple[Codebook, list[int]]:
    """
    k-medoids baseline: centroids are dataset members, recentred to the set
    median of their cluster.
    """
    if len(dataset) < k:
        raise EmptySampleError(
            f"dataset of size {len(dataset)} is smaller than k={k}", field="dataset"
        )
    dist = distance_matrix(dataset, cfg)
    medoids: list[int] = []
    for i in range(len(dataset)):
        if all(dist[i, m] > init_separation for m in medoids):
            medoids.append(i)
        if len(medoids) == k:
            break
    if len(medoids) < k:
        log.warning("only %d distinct graphs; filling medoids with repeats", len(medoids))
        medoids += [i for i in range(len(dataset)) if i not in medoids][: k - len(medoids)]

    assignments: list[int] = []
    for _ in range(rounds):
        assignments = [int(np.argmin(dist[i, medoids])) for i in range(len(dataset))]
        updated = []
        for j, m in enumerate(medoids):
            members = [i for i, a in enumerate(assignments) if a == j]
            if not members:
                updated.append(m)
                continue
            sub = dist[np.ix_(members, members)].sum(axis=1)
            updated.append(members[int(np.argmin(sub))])
        if updated == medoids:
            break
        medoids = updated
    assignments = [int(np.argmin(dist[i, medoids])) for i in range(len(dataset))]
    return Codebook(tuple(dataset[m] for m in medoids)), assignments


# --- adaline --------------------------------------------------------------------------


def check_labels(labeled: Iterable[LabeledGraph]) -> None:
    """Raise InvalidLabelError for the first label outside {-1, +1}."""
    for idx, (_, label) in enumerate(labeled):
        check_label(label, field=f"labels[{idx}]")


def _checked(stream: Iterable[LabeledGraph]) -> Iterator[LabeledGraph]:
    for x, label in stream:
        check_label(label)
        yield x, label


def _adaline_step(
    obs: LabeledGraph, params: Params, solver: SolverConfig
) -> tuple[Params, float]:
    x, label = obs
    weight, bias = AttributedGraph(params[0]), float(params[1][0])
    sub, bias_grad = subgrad_adaline(x, label, weight, bias, solver)
    return (sub.matrix, np.array([bias_grad])), sub.loss_value


def adaline_train(
    stream: Iterable[LabeledGraph],
    cfg: SggConfig,
    *,
    eval_sample: Sequence[LabeledGraph] | None = None,
) -> tuple[AdalineModel, SggTrace]:
    """
    SGG on ``(y - (k(X, W) + b))²`` jointly in ``(W, b)`` from ``W = 0``,
    ``b = 0``. The bias follows the same step sizes and ball as the weight.

    Labels are checked as observations are drawn and over the whole
    ``eval_sample`` up front; a bad one raises InvalidLabelError.
    """
    check_labels(eval_sample or [])
    (first, _), stream = _first(_checked(stream), "stream")
    eval_graphs = [x for x, _ in eval_sample or []]
    cfg = _resolve_ball(cfg, [first], eval_graphs)
    log.info("training adaline (%d iterations)", cfg.iterations)
    init = (np.zeros_like(first.cells), np.zeros(1))
    params, trace = run_sgg(stream, _adaline_step, init, cfg, eval_sample=eval_sample)
    return AdalineModel(weight=_graph(params[0], first), bias=float(params[1][0])), trace


def adaline_predict(model: AdalineModel, x: AttributedGraph, cfg: SolverConfig) -> int:
    """``sign(k(x, W) + b)`` with a zero score mapped to +1."""
    return 1 if model.score(x, cfg) >= 0.0 else -1


def accuracy(
    model: AdalineModel, labeled: Sequence[LabeledGraph], cfg: SolverConfig
) -> float:
    if not labeled:
        raise EmptySampleError("accuracy of an empty sample", field="labeled")
    hits = thread_map(lambda xy: adaline_predict(model, xy[0], cfg) == xy[1], labeled)
    return sum(hits) / len(hits)
