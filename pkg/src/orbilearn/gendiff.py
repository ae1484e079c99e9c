"""
Generalized-gradient selection for the non-smooth orbifold losses.

Each lifted loss is a max or min over finitely many smooth functions of the
parameter representative (one per alignment, or per centroid). The selection
returns the gradient of the active piece, picked by the solver's
deterministic witness. Where the witness is unique this is the classical
gradient; at ties it is one element of the subdifferential.

Mean and quantization losses use ½d², so their selection is ``w - x*``
with ``x*`` the optimally aligned datum.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np

from .alignment import (
    AlignmentResult,
    SolverConfig,
    alignment_ties,
    distance_with_witness,
    kernel,
)
from .decorators import lifted_loss
from .enums import Distortion, LossKind, Verdict
from .exceptions import (
    ConfigurationError,
    EmptySampleError,
    InvalidLabelError,
    ShapeMismatchError,
)
from .graph import AttributedGraph, Permutation, check_same_shape, permute_cells
from .registry import LossRegistry

log = logging.getLogger(__name__)

ZERO_DIST = 1e-9
# Gradient checks skip distances below this: a central difference with the
# default step of 1e-6 straddles the kink at d = 0. Selections still use ZERO_DIST.
NONSMOOTH_DIST = 1e-6
TIE_DIST = 1e-9


@dataclass(frozen=True, slots=True, eq=False)
class Subgradient:
    """
    One selected generalized gradient of a lifted loss.

    Attributes:
        matrix: Representation-space array, shaped like the parameter.
        witness: Alignment that selected the active piece.
        loss_value: Loss at the parameter.
        bias_grad: Derivative with respect to a scalar bias, for losses that
            have one.
    """

    matrix: np.ndarray
    witness: Permutation | None
    loss_value: float
    bias_grad: float | None = None

    def permuted(self, p: Permutation) -> np.ndarray:
        return permute_cells(self.matrix, p)


@dataclass(frozen=True, slots=True, eq=False)
class LossPoint:
    """
    A parameter/observation pair at which a loss is evaluated.

    Attributes:
        param: Parameter representative; a tuple of centroids for the
            quantization kinds.
        datum: Observed graph.
        loss_kind: Which lifted loss.
        label: ±1 label (adaline) or regression target (mse_map).
        bias: Bias of the adaline / bundled kernel-score model.
        model: Orbifold map for mse_map; defaults to KernelScoreMap(bias).
    """

    param: AttributedGraph | tuple[AttributedGraph, ...]
    datum: AttributedGraph
    loss_kind: LossKind
    label: float | None = None
    bias: float = 0.0
    model: Any = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "loss_kind", LossKind(self.loss_kind))
        if self.loss_kind in (LossKind.QUANTIZE_SQ, LossKind.QUANTIZE_DIST):
            if isinstance(self.param, AttributedGraph):
                object.__setattr__(self, "param", (self.param,))
            if not self.param:
                raise EmptySampleError("codebook is empty", field="param")
            for centroid in self.param:
                check_same_shape(self.datum, centroid)
        else:
            if not isinstance(self.param, AttributedGraph):
                raise ShapeMismatchError(
                    f"{self.loss_kind} takes a single parameter graph", field="param"
                )
            check_same_shape(self.datum, self.param)
        if self.loss_kind in (LossKind.ADALINE, LossKind.MSE_MAP) and self.label is None:
            raise ConfigurationError(f"{self.loss_kind} needs a label", field="label")

    @property
    def graph_param(self) -> AttributedGraph:
        assert isinstance(self.param, AttributedGraph)
        return self.param

    @property
    def codebook(self) -> tuple[AttributedGraph, ...]:
        assert isinstance(self.param, tuple)
        return self.param


# --- selections ---------------------------------------------------------------


def _aligned(x: AttributedGraph, res: AlignmentResult) -> np.ndarray:
    return permute_cells(x.cells, res.witness)


def check_label(label: Any, field: str = "label") -> None:
    if label not in (-1.0, 1.0):
        raise InvalidLabelError(f"{field} must be -1 or +1, got {label!r}", field=field)


def subgrad_kernel(x: AttributedGraph, w: AttributedGraph, cfg: SolverConfig) -> Subgradient:
    """Selection for ``w ↦ k(X, π(w))``: the aligned datum ``γ_P*(x)``."""
    check_same_shape(x, w)
    res = kernel(x, w, cfg)
    return Subgradient(matrix=_aligned(x, res), witness=res.witness, loss_value=res.kernel_value)


def _sq_half_dist_from(
    x: AttributedGraph, w: AttributedGraph, d: float, res: AlignmentResult
) -> Subgradient:
    return Subgradient(
        matrix=w.cells - _aligned(x, res), witness=res.witness, loss_value=0.5 * d * d
    )


def _dist_from(
    x: AttributedGraph, w: AttributedGraph, d: float, res: AlignmentResult
) -> Subgradient:
    if d < ZERO_DIST:
        # 0 is in the subdifferential at a minimum
        return Subgradient(matrix=np.zeros_like(w.cells), witness=res.witness, loss_value=d)
    return Subgradient(
        matrix=(w.cells - _aligned(x, res)) / d, witness=res.witness, loss_value=d
    )


def subgrad_sq_half_dist(
    x: AttributedGraph, w: AttributedGraph, cfg: SolverConfig
) -> Subgradient:
    """Selection for ½d(X, W)²: ``w - γ_P*(x)``."""
    check_same_shape(x, w)
    d, res = distance_with_witness(x, w, cfg)
    return _sq_half_dist_from(x, w, d, res)


def subgrad_dist(x: AttributedGraph, w: AttributedGraph, cfg: SolverConfig) -> Subgradient:
    """Selection for d(X, W): ``(w - γ_P*(x)) / d``, zero when d vanishes."""
    check_same_shape(x, w)
    d, res = distance_with_witness(x, w, cfg)
    return _dist_from(x, w, d, res)


def subgrad_adaline(
    x: AttributedGraph,
    label: float,
    w: AttributedGraph,
    bias: float,
    cfg: SolverConfig,
) -> tuple[Subgradient, float]:
    """
    Selection for ``(y - (k(X, W) + b))²`` in ``(w, b)``.

    With ``r = y - (k + b)`` and ``s = γ_P*(x)`` the descent gradient is
    ``(-2 r s, -2 r)``.
    """
    check_label(label)
    check_same_shape(x, w)
    res = kernel(x, w, cfg)
    r = label - (res.kernel_value + bias)
    bias_grad = -2.0 * r
    sub = Subgradient(
        matrix=-2.0 * r * _aligned(x, res),
        witness=res.witness,
        loss_value=r * r,
        bias_grad=bias_grad,
    )
    return sub, bias_grad


def quantize_winner(
    x: AttributedGraph, codebook: Sequence[AttributedGraph], cfg: SolverConfig
) -> tuple[int, list[tuple[float, AlignmentResult]]]:
    """Index of the closest centroid (ties to the lowest index) and all distances."""
    if not codebook:
        raise EmptySampleError("codebook is empty", field="codebook")
    scored = [distance_with_witness(x, c, cfg) for c in codebook]
    winner = 0
    for i, (d, _) in enumerate(scored):
        if d < scored[winner][0]:
            winner = i
    return winner, scored


def subgrad_quantize(
    x: AttributedGraph,
    codebook: Sequence[AttributedGraph],
    cfg: SolverConfig,
    distortion: Distortion = Distortion.SQ,
) -> tuple[int, Subgradient]:
    """
    Selection for ``min_i d(X, W_i)`` (or ½d²) with respect to the winning
    centroid; every other centroid receives a zero update.
    """
    winner, scored = quantize_winner(x, codebook, cfg)
    d, res = scored[winner]
    if Distortion(distortion) is Distortion.SQ:
        return winner, _sq_half_dist_from(x, codebook[winner], d, res)
    return winner, _dist_from(x, codebook[winner], d, res)


@dataclass(frozen=True, slots=True, eq=False)
class MapEvaluation:
    """
    Forward value of a lifted orbifold map and its parameter gradient at an
    optimal alignment.
    """

    value: float
    weight_grad: np.ndarray
    bias_grad: float = 0.0
    witness: Permutation | None = None


class OrbifoldMap(Protocol):
    """
    Protocol for a generalized differentiable map ``f(X, W)`` to the reals.
    """

    def evaluate(
        self, x: AttributedGraph, w: AttributedGraph, cfg: SolverConfig
    ) -> MapEvaluation:
        """Forward value and generalized gradient with respect to ``w``."""
        ...


@dataclass(frozen=True, slots=True)
class KernelScoreMap:
    """The bundled scalar model ``f(X, W) = k(X, W) + b``."""

    bias: float = 0.0

    def evaluate(
        self, x: AttributedGraph, w: AttributedGraph, cfg: SolverConfig
    ) -> MapEvaluation:
        res = kernel(x, w, cfg)
        return MapEvaluation(
            value=res.kernel_value + self.bias,
            weight_grad=_aligned(x, res),
            bias_grad=1.0,
            witness=res.witness,
        )


def subgrad_mse_map(
    model: OrbifoldMap,
    x: AttributedGraph,
    y_target: float,
    w: AttributedGraph,
    cfg: SolverConfig,
) -> Subgradient:
    """Chain rule for ``½(y - f(X, W))²``: ``-(y - f) · ∂f/∂w``."""
    check_same_shape(x, w)
    ev = model.evaluate(x, w, cfg)
    if ev.weight_grad.shape != w.cells.shape:
        raise ShapeMismatchError(
            f"model gradient has shape {ev.weight_grad.shape}, parameter {w.cells.shape}",
            field="model",
        )
    r = y_target - ev.value
    return Subgradient(
        matrix=-r * ev.weight_grad,
        witness=ev.witness,
        loss_value=0.5 * r * r,
        bias_grad=-r * ev.bias_grad,
    )


# --- lifted losses for gradient checking ---------------------------------------


class LiftedLoss(Protocol):
    """
    Protocol for the representation-space view of an orbifold loss.
    """

    def parameters(self, point: LossPoint) -> list[np.ndarray]: ...

    def value(self, point: LossPoint, params: list[np.ndarray], cfg: SolverConfig) -> float:
        """Loss at perturbed parameter arrays; re-solves the alignment."""
        ...

    def gradient(
        self, point: LossPoint, cfg: SolverConfig
    ) -> tuple[list[np.ndarray], Subgradient]: ...

    def is_tie(self, point: LossPoint, cfg: SolverConfig) -> bool: ...


def _graph(cells: np.ndarray) -> AttributedGraph:
    return AttributedGraph(cells)


class _SingleGraphLoss:
    """Shared plumbing for losses of one parameter graph."""

    def parameters(self, point: LossPoint) -> list[np.ndarray]:
        return [np.array(point.graph_param.cells)]

    def is_tie(self, point: LossPoint, cfg: SolverConfig) -> bool:
        return alignment_ties(point.datum, point.graph_param, cfg)


@lifted_loss(LossKind.KERNEL)
class KernelLoss(_SingleGraphLoss):
    def value(self, point: LossPoint, params: list[np.ndarray], cfg: SolverConfig) -> float:
        return kernel(point.datum, _graph(params[0]), cfg).kernel_value

    def gradient(
        self, point: LossPoint, cfg: SolverConfig
    ) -> tuple[list[np.ndarray], Subgradient]:
        sub = subgrad_kernel(point.datum, point.graph_param, cfg)
        return [sub.matrix], sub


@lifted_loss(LossKind.SQ_HALF_DIST)
class SqHalfDistLoss(_SingleGraphLoss):
    def value(self, point: LossPoint, params: list[np.ndarray], cfg: SolverConfig) -> float:
        d, _ = distance_with_witness(point.datum, _graph(params[0]), cfg)
        return 0.5 * d * d

    def gradient(
        self, point: LossPoint, cfg: SolverConfig
    ) -> tuple[list[np.ndarray], Subgradient]:
        sub = subgrad_sq_half_dist(point.datum, point.graph_param, cfg)
        return [sub.matrix], sub


@lifted_loss(LossKind.DIST)
class DistLoss(_SingleGraphLoss):
    def value(self, point: LossPoint, params: list[np.ndarray], cfg: SolverConfig) -> float:
        d, _ = distance_with_witness(point.datum, _graph(params[0]), cfg)
        return d

    def gradient(
        self, point: LossPoint, cfg: SolverConfig
    ) -> tuple[list[np.ndarray], Subgradient]:
        sub = subgrad_dist(point.datum, point.graph_param, cfg)
        return [sub.matrix], sub

    def is_tie(self, point: LossPoint, cfg: SolverConfig) -> bool:
        d, _ = distance_with_witness(point.datum, point.graph_param, cfg)
        return d < NONSMOOTH_DIST or super().is_tie(point, cfg)


@lifted_loss(LossKind.ADALINE)
class AdalineLoss(_SingleGraphLoss):
    """Joint in the weight graph and the bias."""

    def parameters(self, point: LossPoint) -> list[np.ndarray]:
        return [np.array(point.graph_param.cells), np.array([point.bias])]

    def value(self, point: LossPoint, params: list[np.ndarray], cfg: SolverConfig) -> float:
        assert point.label is not None
        k = kernel(point.datum, _graph(params[0]), cfg).kernel_value
        r = point.label - (k + float(params[1][0]))
        return r * r

    def gradient(
        self, point: LossPoint, cfg: SolverConfig
    ) -> tuple[list[np.ndarray], Subgradient]:
        assert point.label is not None
        sub, bias_grad = subgrad_adaline(
            point.datum, point.label, point.graph_param, point.bias, cfg
        )
        return [sub.matrix, np.array([bias_grad])], sub


@lifted_loss(LossKind.MSE_MAP)
class MseMapLoss(_SingleGraphLoss):
    def _model(self, point: LossPoint) -> OrbifoldMap:
        return point.model if point.model is not None else KernelScoreMap(point.bias)

    def value(self, point: LossPoint, params: list[np.ndarray], cfg: SolverConfig) -> float:
        assert point.label is not None
        f = self._model(point).evaluate(point.datum, _graph(params[0]), cfg).value
        return 0.5 * (point.label - f) ** 2

    def gradient(
        self, point: LossPoint, cfg: SolverConfig
    ) -> tuple[list[np.ndarray], Subgradient]:
        assert point.label is not None
        sub = subgrad_mse_map(
            self._model(point), point.datum, point.label, point.graph_param, cfg
        )
        return [sub.matrix], sub


@lifted_loss(LossKind.QUANTIZE_SQ, distortion=Distortion.SQ)
@lifted_loss(LossKind.QUANTIZE_DIST, distortion=Distortion.DIST)
class QuantizeLoss:
    """Winner-take-all distortion; gradients for every centroid."""

    def __init__(self, distortion: Distortion) -> None:
        self.distortion = Distortion(distortion)

    def parameters(self, point: LossPoint) -> list[np.ndarray]:
        return [np.array(c.cells) for c in point.codebook]

    def value(self, point: LossPoint, params: list[np.ndarray], cfg: SolverConfig) -> float:
        d = min(distance_with_witness(point.datum, _graph(p), cfg)[0] for p in params)
        return 0.5 * d * d if self.distortion is Distortion.SQ else d

    def gradient(
        self, point: LossPoint, cfg: SolverConfig
    ) -> tuple[list[np.ndarray], Subgradient]:
        winner, sub = subgrad_quantize(point.datum, point.codebook, cfg, self.distortion)
        grads = [np.zeros_like(c.cells) for c in point.codebook]
        grads[winner] = sub.matrix
        return grads, sub

    def is_tie(self, point: LossPoint, cfg: SolverConfig) -> bool:
        winner, scored = quantize_winner(point.datum, point.codebook, cfg)
        best = scored[winner][0]
        if sum(1 for d, _ in scored if d <= best + TIE_DIST) > 1:
            return True
        if self.distortion is Distortion.DIST and best < NONSMOOTH_DIST:
            return True
        return alignment_ties(point.datum, point.codebook[winner], cfg)


LOSSES = LossRegistry(globals())


# --- finite-difference check ------------------------------------------------------


@dataclass(frozen=True, slots=True)
class GradCheckReport:
    """
    Attributes:
        loss: Loss kind checked.
        deviation: Max absolute deviation between the selected subgradient and
            central differences; None when the point was skipped.
        verdict: pass / fail / nonsmooth point.
        loss_value: Loss at the unperturbed point.
    """

    loss: LossKind
    deviation: float | None
    verdict: Verdict
    loss_value: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "loss": str(self.loss),
            "deviation": self.deviation,
            "verdict": str(self.verdict),
            "loss_value": self.loss_value,
        }


def finite_diff_check(
    point: LossPoint, cfg: SolverConfig, h: float = 1e-6, tol: float = 1e-5
) -> GradCheckReport:
    """
    Compare the selected subgradient with central differences of the lifted
    loss at the parameter representative.

    Tie points (several distinct optimal alignments, equidistant winners, or
    a vanishing distance for the non-squared metric) are skipped with the
    "nonsmooth point" verdict.
    """
    if h <= 0.0:
        raise ConfigurationError("step h must be positive", field="h")

    impl = LOSSES.get(point.loss_kind).implementation
    grads, sub = impl.gradient(point, cfg)
    if impl.is_tie(point, cfg):
        log.debug("%s: nonsmooth point, skipped", point.loss_kind)
        return GradCheckReport(point.loss_kind, None, Verdict.NONSMOOTH, sub.loss_value)

    params = impl.parameters(point)
    deviation = 0.0
    for idx, base in enumerate(params):
        for k in range(base.size):
            plus = [p.copy() for p in params]
            minus = [p.copy() for p in params]
            plus[idx].flat[k] += h
            minus[idx].flat[k] -= h
            fd = (impl.value(point, plus, cfg) - impl.value(point, minus, cfg)) / (2.0 * h)
            deviation = max(deviation, abs(fd - float(grads[idx].flat[k])))

    verdict = Verdict.PASS if deviation <= tol else Verdict.FAIL
    return GradCheckReport(point.loss_kind, deviation, verdict, sub.loss_value)
