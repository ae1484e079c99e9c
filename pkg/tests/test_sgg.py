import csv
import io
import itertools
from pathlib import Path

import numpy as np
import pytest

from orbilearn import (
    ConfigurationError,
    EmptySampleError,
    IterationError,
    ProjectionBall,
    SggConfig,
    ShapeMismatchError,
    SolverConfig,
    StepSchedule,
    estimate_risk,
    project_ball,
    run_sgg,
    stationarity_diagnostic,
)
from orbilearn.graph import AttributedGraph
from orbilearn.sgg import iid_stream


def euclidean_mean_step(obs, params, solver):
    (w,) = params
    return (w - obs,), 0.5 * float(((w - obs) ** 2).sum())


def euclidean_loss(obs, params, solver):
    return 0.5 * float(((params[0] - obs) ** 2).sum())


def config(iterations: int = 100, radius: float = 1e3, **kwargs) -> SggConfig:
    return SggConfig(
        schedule=kwargs.pop("schedule", StepSchedule.harmonic()),
        projection=ProjectionBall(radius),
        iterations=iterations,
        **kwargs,
    )


class TestStepSchedule:
    def test_harmonic_reproduces_running_mean_weights(self) -> None:
        schedule = StepSchedule.harmonic()
        assert [schedule.eta(t) for t in range(4)] == [1.0, 0.5, 1.0 / 3.0, 0.25]

    def test_default_schedule(self) -> None:
        schedule = StepSchedule()
        assert schedule.eta(0) == 0.5
        assert schedule.eta(50) == pytest.approx(0.25)
        assert schedule.sum_diverges and schedule.square_summable

    @pytest.mark.parametrize(
        "kwargs, field",
        [
            ({"eta0": 0.0}, "eta0"),
            ({"tau": -1.0}, "tau"),
            ({"power": 0.5}, "power"),
            ({"power": 1.5}, "power"),
        ],
    )
    def test_validation(self, kwargs: dict, field: str) -> None:
        with pytest.raises(ConfigurationError) as exc:
            StepSchedule(**kwargs)
        assert exc.value.field == field


class TestProjection:
    def test_inside_is_unchanged(self) -> None:
        w = np.array([[0.3, 0.4]])
        assert np.array_equal(project_ball(w, ProjectionBall(1.0)), w)

    def test_outside_is_rescaled_to_boundary(self) -> None:
        ball = ProjectionBall(2.5)
        w = np.array([3.0, 4.0])
        projected = project_ball(w, ball)
        assert np.allclose(projected, [1.5, 2.0])
        assert np.array_equal(project_ball(projected, ball), projected)

    def test_graph_projection_keeps_symmetry(self) -> None:
        cells = np.ones((2, 2, 1)) * 10.0
        g = AttributedGraph(cells, undirected=True)
        projected = project_ball(g, ProjectionBall(1.0))
        assert projected.undirected
        assert float(np.linalg.norm(projected.cells)) == pytest.approx(1.0)

    @pytest.mark.parametrize("radius", [0.0, -1.0, float("inf"), float("nan")])
    def test_invalid_radius(self, radius: float) -> None:
        with pytest.raises(ConfigurationError):
            ProjectionBall(radius)

    def test_covering_ball(self, dense) -> None:
        graphs = [dense(3) for _ in range(4)]
        ball = ProjectionBall.covering(graphs)
        assert ball.radius == pytest.approx(10.0 * max(float(np.linalg.norm(g.cells)) for g in graphs))
        assert ProjectionBall.covering([AttributedGraph(np.zeros((2, 2, 1)))]).radius == 10.0


def test_config_round_trip() -> None:
    cfg = SggConfig(
        schedule=StepSchedule(0.1, 10.0, 0.75),
        projection=ProjectionBall(3.0),
        iterations=7,
        solver=SolverConfig(mode="heuristic", restarts=2),
    )
    assert SggConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigurationError):
        SggConfig(iterations=0)


def test_harmonic_steps_compute_running_mean(rng: np.random.Generator) -> None:
    data = [rng.normal(size=(3, 3, 2)) for _ in range(40)]
    (w,), trace = run_sgg(iter(data), euclidean_mean_step, (np.zeros((3, 3, 2)),), config(40))
    assert np.allclose(w, np.mean(data, axis=0), atol=1e-12)
    assert trace.steps_run == 40


def test_projection_keeps_iterates_feasible(rng: np.random.Generator) -> None:
    data = [rng.normal(loc=5.0, size=(2, 2, 1)) for _ in range(60)]
    cfg = config(60, radius=1.0, checkpoint_every=5)
    params, trace = run_sgg(iter(data), euclidean_mean_step, (np.zeros((2, 2, 1)),), cfg)
    for iterate in trace.iterates:
        assert float(np.linalg.norm(iterate[0])) <= 1.0 + 1e-12
    assert float(np.linalg.norm(params[0])) == pytest.approx(1.0)


def test_degenerate_distribution_risk_is_monotone() -> None:
    point = np.full((2, 2, 1), 2.0)
    cfg = config(200, schedule=StepSchedule(eta0=0.5, tau=50.0), checkpoint_every=20)
    _, trace = run_sgg(
        itertools.repeat(point), euclidean_mean_step, (np.zeros_like(point),), cfg,
        eval_sample=[point],
    )
    risks = trace.risks
    assert all(b <= a + 1e-12 for a, b in zip(risks, risks[1:]))
    assert risks[-1] < 1e-6


def test_checkpoints_and_exhausted_sampler() -> None:
    data = [np.ones((1, 1, 1))] * 7
    cfg = config(100, checkpoint_every=3)
    _, trace = run_sgg(iter(data), euclidean_mean_step, (np.zeros((1, 1, 1)),), cfg)
    assert trace.steps_run == 7
    assert [c.t for c in trace.checkpoints] == [0, 3, 6, 7]
    assert trace.checkpoints[0].risk is None
    assert len(trace.step_norms) == 7
    assert trace.max_step_norm == pytest.approx(1.0)


def test_run_is_reproducible(rng: np.random.Generator) -> None:
    data = [rng.normal(size=(2, 2, 1)) for _ in range(10)]
    cfg = config(50, rng_seed=3)

    def once():
        return run_sgg(
            iid_stream(data, cfg.rng_seed), euclidean_mean_step, (np.zeros((2, 2, 1)),), cfg,
            eval_sample=data[:3],
        )

    (a,), trace_a = once()
    (b,), trace_b = once()
    assert np.array_equal(a, b)
    assert trace_a.to_csv() == trace_b.to_csv()


def test_projection_is_required() -> None:
    with pytest.raises(ConfigurationError) as exc:
        run_sgg(iter([]), euclidean_mean_step, (np.zeros(1),), SggConfig())
    assert exc.value.field == "projection"


def test_step_errors_are_tagged_with_iteration() -> None:
    def failing(obs, params, solver):
        if obs == 2:
            raise ShapeMismatchError("bad observation", field="graph")
        return (np.zeros(1),), 0.0

    with pytest.raises(IterationError) as exc:
        run_sgg(iter(range(5)), failing, (np.zeros(1),), config(5))
    assert exc.value.iteration == 2
    assert isinstance(exc.value.__cause__, ShapeMismatchError)


def test_estimate_risk() -> None:
    sample = [np.array([1.0]), np.array([3.0])]
    risk = estimate_risk((np.array([0.0]),), sample, euclidean_loss, config())
    assert risk == pytest.approx(2.5)
    with pytest.raises(EmptySampleError):
        estimate_risk((np.array([0.0]),), [], euclidean_loss, config())


class TestStationarity:
    def test_interior_point(self) -> None:
        sample = [np.array([1.0]), np.array([3.0])]
        assert stationarity_diagnostic(
            (np.array([0.0]),), sample, euclidean_mean_step, config()
        ) == pytest.approx(2.0)
        assert stationarity_diagnostic(
            (np.array([2.0]),), sample, euclidean_mean_step, config()
        ) == pytest.approx(0.0)

    def test_boundary_cancels_outward_component(self) -> None:
        # constrained optimum of a target outside the ball sits on the boundary
        sample = [np.array([5.0, 0.0])]
        value = stationarity_diagnostic(
            (np.array([1.0, 0.0]),), sample, euclidean_mean_step, config(radius=1.0)
        )
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_boundary_keeps_tangential_component(self) -> None:
        sample = [np.array([5.0, 2.0])]
        value = stationarity_diagnostic(
            (np.array([1.0, 0.0]),), sample, euclidean_mean_step, config(radius=1.0)
        )
        assert value == pytest.approx(2.0)


def test_trace_csv(tmp_path: Path) -> None:
    data = [np.ones(2)] * 4
    _, trace = run_sgg(
        iter(data), euclidean_mean_step, (np.zeros(2),), config(4, checkpoint_every=2),
        eval_sample=data[:1],
    )
    path = tmp_path / "trace.csv"
    trace.write_csv(path)
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert list(rows[0]) == ["t", "eta", "risk", "step_norm", "stationarity"]
    assert [int(r["t"]) for r in rows] == [0, 2, 4]
    assert float(rows[0]["risk"]) == pytest.approx(1.0)
    assert float(rows[-1]["risk"]) == 0.0


def test_iid_stream_needs_data() -> None:
    with pytest.raises(EmptySampleError):
        next(iid_stream([], 0))
