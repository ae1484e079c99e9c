"""
Reproducible synthetic distributions over graph orbits.

Every stream is driven by ``numpy.random.Generator(PCG64(seed))``. Per sample
the draws happen in a fixed order: a full normal array for the attribute
noise, a full uniform array for the edge flips, then (if enabled) the vertex
permutation. Streams are therefore reproducible bit for bit from the seed.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from .alignment import SolverConfig, kernel
from .exceptions import ConfigurationError, EmptySampleError
from .graph import AttributedGraph, Permutation, apply_permutation, from_edge_list

log = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12
PERTURBATION_KEYS = frozenset(
    {"seed_graph", "attr_noise_sigma", "edge_flip_prob", "flip_attr", "permute", "rng_seed"}
)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _spec_object(obj: Any, allowed: frozenset[str], what: str) -> dict[str, Any]:
    if not isinstance(obj, dict):
        raise ConfigurationError(f"{what} must be a JSON object", field=what)
    for key in obj:
        if key not in allowed:
            raise ConfigurationError(f"unknown key '{key}' in {what}", field=key)
    return dict(obj)


def _number(obj: dict[str, Any], key: str, default: float) -> float:
    value = obj.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"'{key}' must be a number", field=key)
    return float(value)


def _seed(obj: dict[str, Any]) -> int:
    value = obj.get("rng_seed", 0)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError("'rng_seed' must be an integer", field="rng_seed")
    return value


@dataclass(frozen=True, slots=True)
class PerturbationSpec:
    """
    Noise model around one seed graph.

    Attributes:
        seed_graph: Population representative.
        attr_noise_sigma: Standard deviation of the Gaussian noise added to
            every nonzero cell.
        edge_flip_prob: Probability of toggling each off-diagonal pair.
        flip_attr: Attribute of edges created by a flip; all ones by default.
        permute: Relabel vertices uniformly at random after perturbing.
        rng_seed: Seed of the sample stream.
    """

    seed_graph: AttributedGraph
    attr_noise_sigma: float = 0.0
    edge_flip_prob: float = 0.0
    flip_attr: tuple[float, ...] | None = None
    permute: bool = False
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.attr_noise_sigma) and self.attr_noise_sigma >= 0.0):
            raise ConfigurationError(
                "attr_noise_sigma must be finite and >= 0", field="attr_noise_sigma"
            )
        if not 0.0 <= self.edge_flip_prob < 1.0:
            raise ConfigurationError("edge_flip_prob must lie in [0, 1)", field="edge_flip_prob")
        flip = (
            (1.0,) * self.seed_graph.attr_dim
            if self.flip_attr is None
            else tuple(float(v) for v in self.flip_attr)
        )
        if len(flip) != self.seed_graph.attr_dim:
            raise ConfigurationError(
                f"flip_attr has dimension {len(flip)}, graphs have {self.seed_graph.attr_dim}",
                field="flip_attr",
            )
        object.__setattr__(self, "flip_attr", flip)

    def with_seed(self, rng_seed: int) -> "PerturbationSpec":
        return PerturbationSpec(
            seed_graph=self.seed_graph,
            attr_noise_sigma=self.attr_noise_sigma,
            edge_flip_prob=self.edge_flip_prob,
            flip_attr=self.flip_attr,
            permute=self.permute,
            rng_seed=rng_seed,
        )

    def to_dict(self) -> dict[str, Any]:
        from .serialization import graph_to_dict

        return {
            "seed_graph": graph_to_dict(self.seed_graph),
            "attr_noise_sigma": self.attr_noise_sigma,
            "edge_flip_prob": self.edge_flip_prob,
            "flip_attr": list(self.flip_attr or ()),
            "permute": self.permute,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "PerturbationSpec":
        from .serialization import graph_from_dict

        obj = _spec_object(obj, PERTURBATION_KEYS, "perturbation spec")
        if "seed_graph" not in obj:
            raise ConfigurationError(
                "perturbation spec is missing 'seed_graph'", field="seed_graph"
            )
        flip = obj.get("flip_attr")
        if flip is not None and not (
            isinstance(flip, list)
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in flip)
        ):
            raise ConfigurationError("flip_attr must be a list of numbers", field="flip_attr")
        permute = obj.get("permute", False)
        if not isinstance(permute, bool):
            raise ConfigurationError("permute must be true or false", field="permute")
        return cls(
            seed_graph=graph_from_dict(obj["seed_graph"]),
            attr_noise_sigma=_number(obj, "attr_noise_sigma", 0.0),
            edge_flip_prob=_number(obj, "edge_flip_prob", 0.0),
            flip_attr=None if flip is None else tuple(flip),
            permute=permute,
            rng_seed=_seed(obj),
        )


@dataclass(frozen=True, slots=True)
class MixtureSpec:
    """
    Weighted components; the component of each sample is drawn from the
    mixture's own stream, the sample itself from the component's stream.
    """

    components: tuple[tuple[PerturbationSpec, float], ...]
    rng_seed: int = 0

    def __post_init__(self) -> None:
        components = tuple((spec, float(w)) for spec, w in self.components)
        if not components:
            raise EmptySampleError("mixture has no components", field="components")
        weights = [w for _, w in components]
        if any(w < 0.0 for w in weights):
            raise ConfigurationError("mixture weights must be >= 0", field="components")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_TOL:
            raise ConfigurationError(
                f"mixture weights sum to {math.fsum(weights)!r}, not 1", field="components"
            )
        object.__setattr__(self, "components", components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.components])

    def to_dict(self) -> dict[str, Any]:
        return {
            "components": [
                {"spec": spec.to_dict(), "weight": w} for spec, w in self.components
            ],
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "MixtureSpec":
        obj = _spec_object(obj, frozenset({"components", "rng_seed"}), "mixture spec")
        raw = obj.get("components")
        if not isinstance(raw, list):
            raise ConfigurationError("components must be a list", field="components")
        components = []
        for c in raw:
            c = _spec_object(c, frozenset({"spec", "weight"}), "mixture component")
            for key in ("spec", "weight"):
                if key not in c:
                    raise ConfigurationError(
                        f"mixture component is missing '{key}'", field=key
                    )
            spec = PerturbationSpec.from_dict(c["spec"])
            components.append((spec, _number(c, "weight", 0.0)))
        return cls(components=tuple(components), rng_seed=_seed(obj))


def _symmetrize(values: np.ndarray) -> np.ndarray:
    """Mirror the upper triangle (diagonal included) onto the lower one."""
    n = values.shape[0]
    upper = np.triu(np.ones((n, n), dtype=bool))
    if values.ndim == 3:
        upper = upper[:, :, None]
    return np.where(upper, values, np.swapaxes(values, 0, 1))


def _perturb(spec: PerturbationSpec, rng: np.random.Generator) -> AttributedGraph:
    seed = spec.seed_graph
    n = seed.order
    base = np.array(seed.cells)
    present = np.any(base != 0.0, axis=-1)

    noise = rng.normal(0.0, spec.attr_noise_sigma, size=base.shape)
    if seed.undirected:
        noise = _symmetrize(noise)
    cells = base + np.where(present[:, :, None], noise, 0.0)

    flips = rng.random((n, n))
    if seed.undirected:
        flips = _symmetrize(flips)
    toggle = (flips < spec.edge_flip_prob) & ~np.eye(n, dtype=bool)
    cells[toggle & present] = 0.0
    cells[toggle & ~present] = np.asarray(spec.flip_attr)

    g = AttributedGraph(cells, undirected=seed.undirected)
    if spec.permute:
        g = apply_permutation(g, Permutation.random(n, rng))
    return g


def sample(spec: PerturbationSpec, count: int) -> list[AttributedGraph]:
    """``count`` perturbed copies of the seed graph, deterministic in ``rng_seed``."""
    if count < 1:
        raise ConfigurationError("count must be >= 1", field="count")
    log.debug("sampling %d graphs from seed %d", count, spec.rng_seed)
    rng = make_rng(spec.rng_seed)
    return [_perturb(spec, rng) for _ in range(count)]


def sample_mixture(spec: MixtureSpec, count: int) -> list[tuple[AttributedGraph, int]]:
    """Samples paired with the index of the component that generated them."""
    if count < 1:
        raise ConfigurationError("count must be >= 1", field="count")
    rng = make_rng(spec.rng_seed)
    labels = rng.choice(len(spec.components), size=count, p=spec.weights)
    pools = {}
    for c, (component, _) in enumerate(spec.components):
        needed = int(np.count_nonzero(labels == c))
        pools[c] = iter(sample(component, needed)) if needed else iter(())
    return [(next(pools[int(c)]), int(c)) for c in labels]


def two_class_adaline_task(
    pos_spec: PerturbationSpec,
    neg_spec: PerturbationSpec,
    count: int,
    *,
    pos_weight: float = 0.5,
    rng_seed: int = 0,
) -> list[tuple[AttributedGraph, float]]:
    """Labeled samples: +1 from ``pos_spec``, -1 from ``neg_spec``."""
    if not 0.0 <= pos_weight <= 1.0:
        raise ConfigurationError("pos_weight must lie in [0, 1]", field="pos_weight")
    mixture = MixtureSpec(
        components=((pos_spec, pos_weight), (neg_spec, 1.0 - pos_weight)), rng_seed=rng_seed
    )
    return [(g, 1.0 if c == 0 else -1.0) for g, c in sample_mixture(mixture, count)]


def class_margin(
    task: Sequence[tuple[AttributedGraph, float]],
    pos_seed: AttributedGraph,
    neg_seed: AttributedGraph,
    cfg: SolverConfig,
) -> float:
    """
    ``min_i y_i (k(x_i, pos_seed) - k(x_i, neg_seed))``. A positive margin
    shows the classes are separated by the kernel score of the seed
    difference.
    """
    if not task:
        raise EmptySampleError("margin of an empty task", field="task")
    return min(
        y * (kernel(x, pos_seed, cfg).kernel_value - kernel(x, neg_seed, cfg).kernel_value)
        for x, y in task
    )


def random_graph(
    order: int,
    attr_dim: int,
    edge_prob: float,
    rng: np.random.Generator,
    *,
    undirected: bool = False,
    binary: bool = False,
) -> AttributedGraph:
    """
    Erdős–Rényi structure with Gaussian attributes. ``binary`` graphs have
    zero vertices and all-ones edges.
    """
    if order < 1 or attr_dim < 1:
        raise ConfigurationError("order and attr_dim must be positive", field="order")
    if binary:
        vertices = np.zeros((order, attr_dim))
    else:
        vertices = rng.normal(size=(order, attr_dim))
    edges = []
    for i in range(order):
        for j in range(i + 1 if undirected else 0, order):
            if i == j or rng.random() >= edge_prob:
                continue
            attr = np.ones(attr_dim) if binary else rng.normal(size=attr_dim)
            edges.append((i, j, attr.tolist()))
    return from_edge_list(vertices.tolist(), edges, undirected=undirected)


# --- bundled defaults ------------------------------------------------------------


def default_perturbation(rng_seed: int = 0, order: int = 8) -> PerturbationSpec:
    """Seed graph of the mean-consistency experiment: sigma 0.1, flips 0.05, permuted."""
    seed_graph = random_graph(order, 2, 0.4, make_rng(2024), undirected=True)
    return PerturbationSpec(
        seed_graph=seed_graph,
        attr_noise_sigma=0.1,
        edge_flip_prob=0.05,
        permute=True,
        rng_seed=rng_seed,
    )


_MIXTURE_EDGES = (
    [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
    [(0, 1), (1, 2), (2, 3), (3, 4)],
    [(0, 1), (0, 2), (0, 3), (0, 4)],
)


def default_mixture(rng_seed: int = 0, sigma: float = 0.05) -> MixtureSpec:
    """
    Three equally weighted components of order 5: a cycle, a path and a star,
    with vertex attributes on three well-separated directions.
    """
    components = []
    for c, edges in enumerate(_MIXTURE_EDGES):
        angle = 2.0 * math.pi * c / 3.0
        vertex = [2.0 * math.cos(angle), 2.0 * math.sin(angle)]
        seed_graph = from_edge_list(
            [vertex] * 5, [(i, j, [1.0, 0.0]) for i, j in edges], undirected=True
        )
        spec = PerturbationSpec(
            seed_graph=seed_graph,
            attr_noise_sigma=sigma,
            permute=True,
            rng_seed=1000 * rng_seed + c,
        )
        components.append((spec, 1.0 / 3.0))
    components[-1] = (components[-1][0], 1.0 - 2.0 / 3.0)
    return MixtureSpec(components=tuple(components), rng_seed=rng_seed)


@dataclass(frozen=True, slots=True)
class TwoClassTask:
    pos: PerturbationSpec
    neg: PerturbationSpec
    rng_seed: int = 0
    pos_weight: float = 0.5

    def sample(self, count: int) -> list[tuple[AttributedGraph, float]]:
        return two_class_adaline_task(
            self.pos, self.neg, count, pos_weight=self.pos_weight, rng_seed=self.rng_seed
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "pos": self.pos.to_dict(),
            "neg": self.neg.to_dict(),
            "rng_seed": self.rng_seed,
            "pos_weight": self.pos_weight,
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "TwoClassTask":
        obj = _spec_object(
            obj, frozenset({"pos", "neg", "rng_seed", "pos_weight"}), "two-class task"
        )
        for key in ("pos", "neg"):
            if key not in obj:
                raise ConfigurationError(f"two-class task is missing '{key}'", field=key)
        return cls(
            pos=PerturbationSpec.from_dict(obj["pos"]),
            neg=PerturbationSpec.from_dict(obj["neg"]),
            rng_seed=_seed(obj),
            pos_weight=_number(obj, "pos_weight", 0.5),
        )


def default_two_class(rng_seed: int = 0) -> TwoClassTask:
    """
    Order 4, one attribute: positive graphs are 4-cycles on vertices of +0.5,
    negative graphs 3-edge paths on vertices of -0.5; all edges 0.5.
    """
    cycle = [(0, 1, [0.5]), (1, 2, [0.5]), (2, 3, [0.5]), (3, 0, [0.5])]
    path = [(0, 1, [0.5]), (1, 2, [0.5]), (2, 3, [0.5])]
    pos = from_edge_list([[0.5]] * 4, cycle, undirected=True)
    neg = from_edge_list([[-0.5]] * 4, path, undirected=True)
    return TwoClassTask(
        pos=PerturbationSpec(pos, attr_noise_sigma=0.05, permute=True, rng_seed=2 * rng_seed),
        neg=PerturbationSpec(neg, attr_noise_sigma=0.05, permute=True, rng_seed=2 * rng_seed + 1),
        rng_seed=rng_seed,
    )
