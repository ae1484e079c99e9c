"""
Projected stochastic generalized gradient (SGG) method.

    W_{t+1} = Π_Ω(W_t - η_t S_t),   S_t = g(Z_t, W_t)

Parameters are tuples of representation-space arrays ("blocks": one weight
graph, k centroids, or a weight graph plus a bias). Ω is a product of
Frobenius balls, one per block, all of the same radius. Each ball is convex,
bounded and a union of orbits, so projecting a representative is consistent
with the quotient.
"""

import csv
import io
import logging
import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from .alignment import SolverConfig
from .exceptions import (
    ConfigurationError,
    EmptySampleError,
    IterationError,
)
from .graph import AttributedGraph, length
from .settings import thread_map

log = logging.getLogger(__name__)

T = TypeVar("T")
Params = tuple[np.ndarray, ...]
# (observation, params, solver) -> (one gradient block per parameter block, loss)
SubgradFn = Callable[[Any, Params, SolverConfig], tuple[Params, float]]
LossFn = Callable[[Any, Params, SolverConfig], float]

BOUNDARY_RTOL = 1e-9


@dataclass(frozen=True, slots=True)
class StepSchedule:
    """
    ``η_t = eta0 / (1 + t / tau) ** power``.

    For ``power`` in (0.5, 1] the steps are not summable but square
    summable, which is the step-size condition of the convergence theorem.
    """

    eta0: float = 0.5
    tau: float = 50.0
    power: float = 1.0

    def __post_init__(self) -> None:
        if not self.eta0 > 0.0:
            raise ConfigurationError("eta0 must be > 0", field="eta0")
        if not self.tau > 0.0:
            raise ConfigurationError("tau must be > 0", field="tau")
        if not 0.5 < self.power <= 1.0:
            raise ConfigurationError("power must lie in (0.5, 1]", field="power")

    @classmethod
    def harmonic(cls) -> "StepSchedule":
        """``η_t = 1 / (t + 1)``: reproduces running sample means."""
        return cls(eta0=1.0, tau=1.0, power=1.0)

    def eta(self, t: int) -> float:
        return self.eta0 / (1.0 + t / self.tau) ** self.power

    @property
    def sum_diverges(self) -> bool:
        return self.power <= 1.0

    @property
    def square_summable(self) -> bool:
        return 2.0 * self.power > 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"eta0": self.eta0, "tau": self.tau, "power": self.power}


@dataclass(frozen=True, slots=True)
class ProjectionBall:
    """Frobenius-norm ball of the given radius, applied to every block."""

    radius: float

    def __post_init__(self) -> None:
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ConfigurationError("radius must be positive and finite", field="radius")

    @classmethod
    def covering(cls, graphs: Iterable[AttributedGraph], factor: float = 10.0) -> "ProjectionBall":
        """Default ball: ``factor`` times the largest sample length."""
        largest = max((length(g) for g in graphs), default=0.0)
        return cls(radius=factor * largest if largest > 0.0 else factor)


@dataclass(frozen=True, slots=True)
class SggConfig:
    """
    Attributes:
        schedule: Step sizes.
        projection: Constraint ball; None lets the learner size it from data.
        iterations: Maximum number of SGG steps.
        checkpoint_every: Steps between trace checkpoints.
        rng_seed: Seed for drawing observations from finite datasets.
        solver: Alignment solver used by every subgradient selection.
    """

    schedule: StepSchedule = field(default_factory=StepSchedule)
    projection: ProjectionBall | None = None
    iterations: int = 1000
    checkpoint_every: int = 50
    rng_seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1", field="iterations")
        if self.checkpoint_every < 1:
            raise ConfigurationError(
                "checkpoint_every must be >= 1", field="checkpoint_every"
            )

    def with_projection(self, ball: ProjectionBall) -> "SggConfig":
        return SggConfig(
            schedule=self.schedule,
            projection=ball,
            iterations=self.iterations,
            checkpoint_every=self.checkpoint_every,
            rng_seed=self.rng_seed,
            solver=self.solver,
        )

    def with_iterations(self, iterations: int) -> "SggConfig":
        return SggConfig(
            schedule=self.schedule,
            projection=self.projection,
            iterations=iterations,
            checkpoint_every=self.checkpoint_every,
            rng_seed=self.rng_seed,
            solver=self.solver,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "schedule": self.schedule.to_dict(),
            "projection": None if self.projection is None else {"radius": self.projection.radius},
            "iterations": self.iterations,
            "checkpoint_every": self.checkpoint_every,
            "rng_seed": self.rng_seed,
            "solver": self.solver.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "SggConfig":
        obj = dict(obj)
        schedule = StepSchedule(**obj.pop("schedule", {}))
        projection = obj.pop("projection", None)
        solver = SolverConfig.from_dict(obj.pop("solver", {}))
        return cls(
            schedule=schedule,
            projection=None if projection is None else ProjectionBall(**projection),
            solver=solver,
            **obj,
        )


@dataclass(frozen=True, slots=True)
class Checkpoint:
    t: int
    eta: float
    risk: float | None
    step_norm: float
    stationarity: float | None


@dataclass(slots=True)
class SggTrace:
    """
    Diagnostics of one SGG run.

    Risks are evaluated on a held-out sample, never on the training stream.
    ``max_step_norm`` is the empirical guard for a bounded second moment of
    the stochastic generalized gradients.
    """

    seed: int
    checkpoints: list[Checkpoint] = field(default_factory=list)
    iterates: list[Params] = field(default_factory=list)
    step_norms: list[float] = field(default_factory=list)
    steps_run: int = 0

    @property
    def risks(self) -> list[float | None]:
        return [c.risk for c in self.checkpoints]

    @property
    def max_step_norm(self) -> float:
        return max(self.step_norms, default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "eta", "risk", "step_norm", "stationarity"])
        for c in self.checkpoints:
            writer.writerow(
                [c.t, repr(c.eta), _fmt(c.risk), repr(c.step_norm), _fmt(c.stationarity)]
            )
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(value)


def project_ball(w: T, ball: ProjectionBall) -> T:
    """
    Nearest point of the ball: ``w`` itself inside, else ``w`` rescaled to
    norm ``radius``. Accepts an array or an AttributedGraph.
    """
    if isinstance(w, AttributedGraph):
        return AttributedGraph(project_ball(w.cells, ball), undirected=w.undirected)  # type: ignore[return-value]
    arr = np.asarray(w, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if norm <= ball.radius:
        return arr  # type: ignore[return-value]
    return arr * (ball.radius / norm)  # type: ignore[return-value]


def iid_stream(dataset: Sequence[T], rng_seed: int) -> Iterator[T]:
    """Endless i.i.d. draws with replacement from a finite dataset."""
    if not dataset:
        raise EmptySampleError("cannot draw from an empty dataset", field="dataset")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    while True:
        yield dataset[int(rng.integers(len(dataset)))]


def _evaluate(
    params: Params,
    eval_sample: Sequence[Any],
    subgrad_fn: SubgradFn,
    cfg: SggConfig,
) -> tuple[float, float]:
    """Risk and stationarity surrogate in one pass over the sample."""
    results = thread_map(lambda obs: subgrad_fn(obs, params, cfg.solver), eval_sample)
    risk = math.fsum(loss for _, loss in results) / len(results)
    mean_grads = [
        sum(grads[b] for grads, _ in results) / len(results) for b in range(len(params))
    ]
    return risk, _stationarity(params, mean_grads, cfg.projection)


def _stationarity(
    params: Params, mean_grads: Sequence[np.ndarray], ball: ProjectionBall | None
) -> float:
    total = 0.0
    for p, g in zip(params, mean_grads):
        g = np.asarray(g, dtype=np.float64)
        norm = float(np.linalg.norm(p))
        if ball is not None and norm >= ball.radius * (1.0 - BOUNDARY_RTOL) and norm > 0.0:
            # at the boundary, a gradient pointing inward is balanced by the
            # normal cone; only the residual counts
            outward = p / norm
            lam = max(0.0, -float(np.vdot(g, outward)))
            g = g + lam * outward
        total += float(np.vdot(g, g))
    return math.sqrt(total)


def estimate_risk(
    param: Params, eval_sample: Sequence[Any], loss_fn: LossFn, cfg: SggConfig
) -> float:
    """Arithmetic mean of the per-observation losses."""
    if not eval_sample:
        raise EmptySampleError("risk needs a nonempty sample", field="eval_sample")
    losses = thread_map(lambda obs: loss_fn(obs, param, cfg.solver), eval_sample)
    return math.fsum(losses) / len(losses)


def stationarity_diagnostic(
    param: Params, eval_sample: Sequence[Any], subgrad_fn: SubgradFn, cfg: SggConfig
) -> float:
    """
    Norm of the averaged selected subgradient, with the outward-normal
    component removed on the boundary of the ball.

    A computable surrogate for approximate stationarity, not a membership
    test for the limit set.
    """
    if not eval_sample:
        raise EmptySampleError("diagnostic needs a nonempty sample", field="eval_sample")
    return _evaluate(param, eval_sample, subgrad_fn, cfg)[1]


def run_sgg(
    sampler: Iterable[Any],
    subgrad_fn: SubgradFn,
    init: Params,
    cfg: SggConfig,
    *,
    eval_sample: Sequence[Any] | None = None,
) -> tuple[Params, SggTrace]:
    """
    Run ``cfg.iterations`` projected steps (fewer if the sampler runs dry).

    Checkpoints are recorded at t = 0, every ``checkpoint_every`` steps and
    after the last step; risk and stationarity are filled in when an
    ``eval_sample`` is given.
    """
    if cfg.projection is None:
        raise ConfigurationError(
            "run_sgg needs a projection ball (see ProjectionBall.covering)",
            field="projection",
        )
    ball = cfg.projection
    params: Params = tuple(project_ball(np.array(b, dtype=np.float64), ball) for b in init)
    trace = SggTrace(seed=cfg.rng_seed)

    def checkpoint(t: int, eta: float, step_norm: float) -> None:
        risk = stat = None
        if eval_sample:
            risk, stat = _evaluate(params, eval_sample, subgrad_fn, cfg)
        trace.checkpoints.append(Checkpoint(t, eta, risk, step_norm, stat))
        trace.iterates.append(tuple(b.copy() for b in params))
        log.debug("t=%d eta=%.4g risk=%s stationarity=%s", t, eta, risk, stat)

    checkpoint(0, cfg.schedule.eta(0), 0.0)
    stream = iter(sampler)
    eta = step_norm = 0.0
    for t in range(cfg.iterations):
        try:
            obs = next(stream)
        except StopIteration:
            log.info("sampler exhausted after %d steps", t)
            break
        eta = cfg.schedule.eta(t)
        try:
            grads, _ = subgrad_fn(obs, params, cfg.solver)
        except Exception as exc:
            raise IterationError(str(exc), iteration=t) from exc

        steps = [eta * g for g in grads]
        step_norm = math.sqrt(sum(float(np.vdot(s, s)) for s in steps))
        params = tuple(project_ball(p - s, ball) for p, s in zip(params, steps))
        trace.step_norms.append(step_norm)
        trace.steps_run = t + 1
        if trace.steps_run % cfg.checkpoint_every == 0:
            checkpoint(trace.steps_run, eta, step_norm)

    if trace.checkpoints[-1].t != trace.steps_run:
        checkpoint(trace.steps_run, eta, step_norm)
    return params, trace
