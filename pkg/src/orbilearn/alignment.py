"""
Optimal alignment kernel, intrinsic metric and graph edit distance.

Every quantity here is an optimum over vertex permutations of a separable
pairwise score

    score(p) = Σ_ij T[p(i), p(j), i, j]

where ``T`` is a pair table built once per call: attribute dot products for
the kernel, Euclidean attribute distances for edit costs. The exact solver
enumerates all n! permutations in lexicographic order (it is the test oracle);
the heuristic solver runs greedy seeding plus 2-swap hill climbing from
several starts.
"""

import itertools
import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from .enums import SolverMode
from .exceptions import (
    ConfigurationError,
    InconsistentSolverError,
    SolverCapExceededError,
)
from .graph import (
    AttributedGraph,
    Permutation,
    apply_permutation,
    check_same_shape,
    frobenius_inner,
    length,
    permute_cells,
)
from .settings import thread_map

log = logging.getLogger(__name__)

TIE_TOL = 1e-9
RADICAND_TOL = 1e-9
_BATCH = 40320  # 8!


@dataclass(frozen=True, slots=True)
class SolverConfig:
    """
    Attributes:
        mode: Exact enumeration or heuristic search.
        exact_max_order: Largest order exact mode accepts (10! ≈ 3.6M).
        restarts: Heuristic starts; the first is the greedy seed.
        rng_seed: Seed of the heuristic's random starts.
    """

    mode: SolverMode = SolverMode.EXACT
    exact_max_order: int = 10
    restarts: int = 8
    rng_seed: int = 0

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "mode", SolverMode(self.mode))
        except ValueError:
            raise ConfigurationError(
                f"unknown solver mode {self.mode!r}", field="mode"
            ) from None
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1", field="restarts")
        if self.exact_max_order < 1:
            raise ConfigurationError(
                "exact_max_order must be >= 1", field="exact_max_order"
            )

    def exact_variant(self) -> "SolverConfig":
        return SolverConfig(
            mode=SolverMode.EXACT,
            exact_max_order=self.exact_max_order,
            restarts=self.restarts,
            rng_seed=self.rng_seed,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": str(self.mode),
            "exact_max_order": self.exact_max_order,
            "restarts": self.restarts,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "SolverConfig":
        return cls(**obj)


@dataclass(frozen=True, slots=True)
class AlignmentResult:
    """
    Attributes:
        kernel_value: ``frobenius_inner(apply_permutation(x, witness), y)``.
        witness: Alignment applied to the first argument's representative.
        exact: Whether the value is the proven maximum.
    """

    kernel_value: float
    witness: Permutation
    exact: bool


@dataclass(frozen=True, slots=True)
class EditPathResult:
    cost: float
    witness: Permutation
    exact: bool


# --- pair tables and scoring -------------------------------------------------


def _kernel_table(x: AttributedGraph, y: AttributedGraph) -> np.ndarray:
    return np.einsum("abk,ijk->abij", x.cells, y.cells)


def _edit_table(x: AttributedGraph, y: AttributedGraph) -> np.ndarray:
    diff = x.cells[:, :, None, None, :] - y.cells[None, None, :, :, :]
    return np.linalg.norm(diff, axis=-1)


def _batch_scores(table: np.ndarray, perms: np.ndarray) -> np.ndarray:
    n = table.shape[0]
    rows = np.arange(n)[:, None]
    cols = np.arange(n)[None, :]
    gathered = table[perms[:, :, None], perms[:, None, :], rows, cols]
    return gathered.sum(axis=(1, 2))


def _permutation_batches(n: int) -> Iterator[np.ndarray]:
    it = itertools.permutations(range(n))
    while batch := list(itertools.islice(it, _BATCH)):
        yield np.asarray(batch, dtype=np.intp)


def _break_eps(value: float) -> float:
    return 1e-12 * max(1.0, abs(value))


def _exhaustive(table: np.ndarray, maximize: bool) -> np.ndarray:
    """Optimal permutation; lexicographically smallest among optima."""
    sign = 1.0 if maximize else -1.0
    best_val = -np.inf
    best_perm: np.ndarray | None = None
    for perms in _permutation_batches(table.shape[0]):
        vals = sign * _batch_scores(table, perms)
        top = float(vals.max())
        if best_perm is None or top > best_val + _break_eps(top):
            idx = int(np.flatnonzero(vals >= top - _break_eps(top))[0])
            best_val, best_perm = float(vals[idx]), perms[idx].copy()
    assert best_perm is not None
    return best_perm


def _check_exact_cap(order: int, cfg: SolverConfig) -> None:
    if order > cfg.exact_max_order:
        raise SolverCapExceededError(
            f"exact mode enumerates {order}! permutations; order {order} exceeds "
            f"exact_max_order={cfg.exact_max_order}",
            field="exact_max_order",
        )


# --- heuristic ----------------------------------------------------------------


def _signatures(g: AttributedGraph) -> np.ndarray:
    """Vertex attribute plus sorted incident edge-attribute norms."""
    n = g.order
    norms = np.linalg.norm(g.cells, axis=-1)
    off = ~np.eye(n, dtype=bool)
    out_norms = np.sort(norms[off].reshape(n, n - 1), axis=1)
    in_norms = np.sort(norms.T[off].reshape(n, n - 1), axis=1)
    diag = g.cells[np.arange(n), np.arange(n)]
    return np.concatenate([diag, out_norms, in_norms], axis=1)


def _greedy_seed(x: AttributedGraph, y: AttributedGraph) -> np.ndarray:
    sx, sy = _signatures(x), _signatures(y)
    cost = ((sx[:, None, :] - sy[None, :, :]) ** 2).sum(axis=-1)
    n = x.order
    free = np.ones(n, dtype=bool)
    perm = np.empty(n, dtype=np.intp)
    for i in range(n):
        candidates = np.where(free, cost[:, i], np.inf)
        a = int(np.argmin(candidates))
        if free[i] and candidates[i] <= candidates[a]:
            a = i
        perm[i] = a
        free[a] = False
    return perm


def _two_swap_climb(
    table: np.ndarray, start: np.ndarray, maximize: bool
) -> tuple[np.ndarray, float]:
    """Best-improvement hill climbing over all pairwise swaps."""
    sign = 1.0 if maximize else -1.0
    n = table.shape[0]
    perm = start.copy()
    value = sign * float(_batch_scores(table, perm[None, :])[0])
    if n < 2:
        return perm, sign * value

    u, v = np.triu_indices(n, k=1)
    moves = np.arange(len(u))
    while True:
        neighbours = np.repeat(perm[None, :], len(u), axis=0)
        neighbours[moves, u] = perm[v]
        neighbours[moves, v] = perm[u]
        vals = sign * _batch_scores(table, neighbours)
        best = int(np.argmax(vals))
        if vals[best] <= value + _break_eps(value):
            return perm, sign * value
        perm, value = neighbours[best], float(vals[best])


def _heuristic_search(
    table: np.ndarray,
    x: AttributedGraph,
    y: AttributedGraph,
    cfg: SolverConfig,
    maximize: bool,
) -> np.ndarray:
    n = x.order
    seed = _greedy_seed(x, y)

    def restart(r: int) -> tuple[np.ndarray, float]:
        if r == 0:
            start = seed
        else:
            rng = np.random.Generator(np.random.PCG64([cfg.rng_seed, r]))
            start = rng.permutation(n).astype(np.intp)
        return _two_swap_climb(table, start, maximize)

    results = thread_map(restart, range(cfg.restarts))

    sign = 1.0 if maximize else -1.0
    best_perm, best_val = results[0]
    for r, (perm, val) in enumerate(results[1:], start=1):
        log.debug("restart %d reached %.12g", r, val)
        if sign * val > sign * best_val + _break_eps(best_val):
            best_perm, best_val = perm, val
    return best_perm


def heuristic_align(
    x: AttributedGraph, y: AttributedGraph, cfg: SolverConfig
) -> AlignmentResult:
    """
    Greedy seeding by vertex signature similarity, then 2-swap hill climbing
    from the seed and from ``cfg.restarts - 1`` random starts; the best
    local optimum wins (ties to the lowest restart index).
    """
    check_same_shape(x, y)
    perm = _heuristic_search(_kernel_table(x, y), x, y, cfg, maximize=True)
    return _kernel_result(x, y, perm, exact=False)


def _kernel_result(
    x: AttributedGraph, y: AttributedGraph, perm: np.ndarray, exact: bool
) -> AlignmentResult:
    witness = Permutation(tuple(int(i) for i in perm))
    value = frobenius_inner(apply_permutation(x, witness), y)
    return AlignmentResult(kernel_value=value, witness=witness, exact=exact)


# --- public operations --------------------------------------------------------


def kernel(x: AttributedGraph, y: AttributedGraph, cfg: SolverConfig) -> AlignmentResult:
    """Optimal alignment kernel ``k(X, Y) = max_P <γ_P(x), y>`` with its witness."""
    check_same_shape(x, y)
    if cfg.mode is SolverMode.HEURISTIC:
        return heuristic_align(x, y, cfg)
    _check_exact_cap(x.order, cfg)
    return _kernel_result(x, y, _exhaustive(_kernel_table(x, y), maximize=True), exact=True)


def _radicand(x: AttributedGraph, y: AttributedGraph, res: AlignmentResult) -> float:
    kernel_form = length(x) ** 2 - 2.0 * res.kernel_value + length(y) ** 2
    if kernel_form < -RADICAND_TOL:
        raise InconsistentSolverError(
            f"negative radicand {kernel_form:.3e}: kernel value exceeds the "
            f"Cauchy-Schwarz bound",
            field="kernel_value",
        )
    # Same quantity evaluated at the witness without cancellation, so that
    # identical orbits give exactly zero.
    diff = permute_cells(x.cells, res.witness) - y.cells
    direct = float(np.einsum("ijk,ijk->", diff, diff))
    if kernel_form < 0.0:
        log.debug("clamped radicand %.3e", kernel_form)
    return direct


def distance(x: AttributedGraph, y: AttributedGraph, cfg: SolverConfig) -> float:
    """Intrinsic metric ``d(X, Y) = sqrt(l(X)² - 2 k(X, Y) + l(Y)²)``."""
    return float(np.sqrt(_radicand(x, y, kernel(x, y, cfg))))


def distance_with_witness(
    x: AttributedGraph, y: AttributedGraph, cfg: SolverConfig
) -> tuple[float, AlignmentResult]:
    res = kernel(x, y, cfg)
    return float(np.sqrt(_radicand(x, y, res))), res


def cosine(x: AttributedGraph, y: AttributedGraph, cfg: SolverConfig) -> float:
    """``k(X, Y) / (l(X) l(Y))``, or 0 when either graph has zero length."""
    lx, ly = length(x), length(y)
    if lx == 0.0 or ly == 0.0:
        return 0.0
    return float(np.clip(kernel(x, y, cfg).kernel_value / (lx * ly), -1.0, 1.0))


def edit_cost(x: AttributedGraph, y: AttributedGraph, p: Permutation) -> float:
    """
    Cost of the edit path that maps vertex ``p(i)`` of ``x`` onto vertex ``i``
    of ``y``: the sum of Euclidean attribute distances over all cell pairs.
    Zero-attribute (padded) vertices turn substitutions into deletions and
    insertions.
    """
    check_same_shape(x, y)
    diff = permute_cells(x.cells, p) - y.cells
    return float(np.linalg.norm(diff, axis=-1).sum())


def ged_alignment(
    x: AttributedGraph, y: AttributedGraph, cfg: SolverConfig
) -> EditPathResult:
    check_same_shape(x, y)
    table = _edit_table(x, y)
    if cfg.mode is SolverMode.HEURISTIC:
        perm = _heuristic_search(table, x, y, cfg, maximize=False)
        exact = False
    else:
        _check_exact_cap(x.order, cfg)
        perm = _exhaustive(table, maximize=False)
        exact = True
    witness = Permutation(tuple(int(i) for i in perm))
    return EditPathResult(cost=edit_cost(x, y, witness), witness=witness, exact=exact)


def ged(x: AttributedGraph, y: AttributedGraph, cfg: SolverConfig) -> float:
    """Graph edit distance: the minimal edit cost over alignments."""
    return ged_alignment(x, y, cfg).cost


def distance_matrix(graphs: Sequence[AttributedGraph], cfg: SolverConfig) -> np.ndarray:
    n = len(graphs)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    values = thread_map(lambda ij: distance(graphs[ij[0]], graphs[ij[1]], cfg), pairs)
    out = np.zeros((n, n))
    for (i, j), value in zip(pairs, values):
        out[i, j] = out[j, i] = value
    return out


def alignment_ties(
    x: AttributedGraph, y: AttributedGraph, cfg: SolverConfig, tol: float = TIE_TOL
) -> bool:
    """
    Whether two distinct aligned representatives of ``x`` attain the kernel
    maximum within ``tol``. Permutations that only reshuffle automorphic
    vertices (e.g. padding) give the same representative and do not count.

    Uses full enumeration when the order permits, otherwise the 2-swap
    neighbourhood of the heuristic witness.
    """
    check_same_shape(x, y)
    table = _kernel_table(x, y)
    enumerate_all = x.order <= cfg.exact_max_order
    res = kernel(x, y, cfg.exact_variant() if enumerate_all else cfg)
    reference = permute_cells(x.cells, res.witness)
    n = x.order

    if enumerate_all:
        candidates: Iterator[np.ndarray] = _permutation_batches(n)
    else:
        perm = res.witness.as_array()
        u, v = np.triu_indices(n, k=1)
        neighbours = np.repeat(perm[None, :], len(u), axis=0)
        neighbours[np.arange(len(u)), u] = perm[v]
        neighbours[np.arange(len(u)), v] = perm[u]
        candidates = iter([neighbours])

    for perms in candidates:
        vals = _batch_scores(table, perms)
        close = perms[vals >= res.kernel_value - tol]
        for start in range(0, len(close), 4096):
            chunk = close[start : start + 4096]
            aligned = x.cells[chunk[:, :, None], chunk[:, None, :]]
            if np.any(np.abs(aligned - reference[None]).max(axis=(1, 2, 3)) > 1e-12):
                return True
    return False
