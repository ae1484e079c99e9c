"""
Bundled experiments and their reproducibility manifest.

Each run writes its artifacts under ``output_dir`` and finishes with
``manifest.json``: the fully resolved configuration, the seeds used and the
sha256 of every artifact. Feeding the manifest back to ``rerun_manifest``
reproduces the CSV outputs byte for byte.
"""

import csv
import hashlib
import io
import json
import logging
import statistics
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .alignment import SolverConfig, distance, distance_matrix
from .checks import check_experiment_config
from .datagen import (
    MixtureSpec,
    PerturbationSpec,
    TwoClassTask,
    class_margin,
    default_mixture,
    default_perturbation,
    default_two_class,
    make_rng,
    sample,
    sample_mixture,
)
from .enums import Distortion, ExperimentKind, LossKind, SolverMode, Verdict
from .exceptions import ConfigurationError
from .gendiff import LOSSES, GradCheckReport, LossPoint, finite_diff_check
from .graph import AttributedGraph
from .learners import (
    accuracy,
    adaline_train,
    assign,
    check_labels,
    distortion_summary,
    estimate_mean,
    purity,
    quantize,
)
from .serialization import (
    adaline_to_dict,
    codebook_to_obj,
    load_dataset,
    read_json,
    write_json,
)
from .sgg import SggConfig, StepSchedule, iid_stream

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    """
    Attributes:
        kind: Which bundled experiment.
        data: ``{"path": dataset file}`` or ``{"spec": generator spec}``; empty
            for the bundled generator of the kind.
        solver: Alignment solver for training and evaluation.
        sgg: Optimizer settings; its own solver is replaced by ``solver``.
        output_dir: Directory receiving every artifact.
        seeds: Seeds of the runs (mean_consistency uses all, the other kinds
            the first).
        sizes: Sample sizes N of the mean-consistency curve.
        count: Training sample size, graph count or gradient-check trials.
        holdout: Size of the held-out evaluation sample.
        k: Number of centroids.
        distortion: Quantization distortion.
        init_separation: Minimum distance between initial centroids.
    """

    kind: ExperimentKind
    data: dict[str, Any] = field(default_factory=dict)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sgg: SggConfig = field(default_factory=SggConfig)
    output_dir: str = "."
    seeds: tuple[int, ...] = (0,)
    sizes: tuple[int, ...] = (10, 50, 250)
    count: int = 300
    holdout: int = 50
    k: int = 3
    distortion: Distortion = Distortion.SQ
    init_separation: float = 1e-6

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        object.__setattr__(self, "distortion", Distortion(self.distortion))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if not self.seeds:
            raise ConfigurationError("at least one seed is required", field="seeds")
        if self.sgg.solver != self.solver:
            object.__setattr__(self, "sgg", replace(self.sgg, solver=self.solver))

    @classmethod
    def default(cls, kind: ExperimentKind | str, output_dir: str = ".") -> "ExperimentConfig":
        """Bundled settings for each experiment kind."""
        kind = ExperimentKind(kind)
        if kind is ExperimentKind.MEAN_CONSISTENCY:
            return cls(
                kind=kind,
                solver=SolverConfig(mode=SolverMode.HEURISTIC),
                sgg=SggConfig(schedule=StepSchedule.harmonic(), iterations=250, checkpoint_every=250),
                output_dir=output_dir,
                seeds=tuple(range(10)),
            )
        if kind is ExperimentKind.QUANTIZE:
            return cls(
                kind=kind,
                sgg=SggConfig(iterations=600, checkpoint_every=100),
                output_dir=output_dir,
                count=300,
                init_separation=1.0,
            )
        if kind is ExperimentKind.ADALINE:
            return cls(
                kind=kind,
                sgg=SggConfig(
                    schedule=StepSchedule(eta0=0.05, tau=500.0), iterations=2000, checkpoint_every=250
                ),
                output_dir=output_dir,
                count=400,
            )
        if kind is ExperimentKind.DISTANCE_MATRIX:
            return cls(kind=kind, output_dir=output_dir, count=12)
        return cls(kind=kind, output_dir=output_dir, count=100)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": str(self.kind),
            "data": self.data,
            "solver": self.solver.to_dict(),
            "sgg": {k: v for k, v in self.sgg.to_dict().items() if k != "solver"},
            "output_dir": self.output_dir,
            "seeds": list(self.seeds),
            "sizes": list(self.sizes),
            "count": self.count,
            "holdout": self.holdout,
            "k": self.k,
            "distortion": str(self.distortion),
            "init_separation": self.init_separation,
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any], base_dir: str | Path = ".") -> "ExperimentConfig":
        """
        Build from a configuration document, starting from the kind's
        defaults. Raises ConfigurationError naming the first offending field.
        """
        errors = check_experiment_config(obj, base_dir)
        if errors:
            raise ConfigurationError(errors[0].msg, field=errors[0].field)
        base = cls.default(obj["kind"])
        data = dict(obj.get("data", {}))
        if "path" in data:
            data["path"] = str((Path(base_dir) / data["path"]).resolve())
        solver = SolverConfig.from_dict({**base.solver.to_dict(), **obj.get("solver", {})})
        sgg_obj = {k: v for k, v in base.sgg.to_dict().items() if k != "solver"}
        sgg_obj.update(obj.get("sgg", {}))
        sgg_obj.pop("solver", None)
        return cls(
            kind=base.kind,
            data=data,
            solver=solver,
            sgg=SggConfig.from_dict(sgg_obj),
            output_dir=str(obj.get("output_dir", base.output_dir)),
            seeds=tuple(obj.get("seeds", base.seeds)),
            sizes=tuple(obj.get("sizes", base.sizes)),
            count=int(obj.get("count", base.count)),
            holdout=int(obj.get("holdout", base.holdout)),
            k=int(obj.get("k", base.k)),
            distortion=Distortion(obj.get("distortion", base.distortion)),
            init_separation=float(obj.get("init_separation", base.init_separation)),
        )


# --- artifact helpers ------------------------------------------------------------


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_run_manifest(
    output_dir: str | Path,
    config: dict[str, Any],
    seeds: Sequence[int],
    artifacts: Sequence[str],
) -> Path:
    """Record the resolved configuration, seeds and artifact hashes of a run."""
    out = Path(output_dir)
    manifest = {
        "orbilearn": __version__,
        "config": config,
        "seeds": list(seeds),
        "artifacts": {name: sha256_file(out / name) for name in sorted(artifacts)},
    }
    path = out / MANIFEST
    write_json(path, manifest)
    return path


def write_manifest(cfg: ExperimentConfig, artifacts: Sequence[str]) -> Path:
    return write_run_manifest(cfg.output_dir, cfg.to_dict(), cfg.seeds, artifacts)


def _split_eval(cfg: ExperimentConfig, items: list[Any]) -> tuple[list[Any], list[Any]]:
    return items[: cfg.count], items[cfg.count :]


def _solver_for_order(solver: SolverConfig, order: int) -> SolverConfig:
    return solver.exact_variant() if order <= solver.exact_max_order else solver


# --- experiments ---------------------------------------------------------------------


def run_mean_consistency(cfg: ExperimentConfig) -> list[str]:
    """
    Error ``d(estimate_N, seed graph)`` for every seed and sample size, the
    estimate running one pass over the first N samples of the seed's stream.
    """
    spec = (
        PerturbationSpec.from_dict(cfg.data["spec"]) if "spec" in cfg.data else default_perturbation()
    )
    evaluation = _solver_for_order(cfg.solver, spec.seed_graph.order)
    largest = max(cfg.sizes)
    rows = []
    errors: dict[int, list[float]] = {n: [] for n in cfg.sizes}
    for seed in cfg.seeds:
        stream = sample(spec.with_seed(seed), largest)
        for n in cfg.sizes:
            estimate, _ = estimate_mean(stream[:n], cfg.sgg.with_iterations(n))
            error = distance(estimate, spec.seed_graph, evaluation)
            errors[n].append(error)
            rows.append([n, seed, _fmt(error)])
            log.info("N=%d seed=%d error=%.6g", n, seed, error)

    out = Path(cfg.output_dir)
    write_csv(out / "mean_consistency.csv", ["N", "seed", "error"], rows)
    medians = [statistics.median(errors[n]) for n in cfg.sizes]
    write_json(
        out / "summary.json",
        {
            "median_error": {str(n): m for n, m in zip(cfg.sizes, medians)},
            "non_increasing": all(a >= b for a, b in zip(medians, medians[1:])),
        },
    )
    return ["mean_consistency.csv", "summary.json"]


def _labeled_graphs(cfg: ExperimentConfig, total: int, seed: int) -> list[tuple[AttributedGraph, Any]]:
    if "path" in cfg.data:
        dataset = load_dataset(cfg.data["path"])
        labels = dataset.labels or (None,) * len(dataset)
        return list(zip(dataset.graphs, labels))
    if cfg.kind is ExperimentKind.ADALINE:
        task = TwoClassTask.from_dict(cfg.data["spec"]) if "spec" in cfg.data else default_two_class(seed)
        return list(task.sample(total))
    mixture = MixtureSpec.from_dict(cfg.data["spec"]) if "spec" in cfg.data else default_mixture(seed)
    return [(g, c) for g, c in sample_mixture(mixture, total)]


def run_quantize(cfg: ExperimentConfig) -> list[str]:
    seed = cfg.seeds[0]
    train, held = _split_eval(cfg, _labeled_graphs(cfg, cfg.count + cfg.holdout, seed))
    graphs = [g for g, _ in train]
    eval_graphs = [g for g, _ in held] or graphs
    codebook, trace = quantize(
        iid_stream(graphs, cfg.sgg.rng_seed),
        cfg.k,
        cfg.sgg,
        cfg.distortion,
        eval_sample=eval_graphs,
        init_separation=cfg.init_separation,
    )
    assignments, train_distortion = assign(graphs, codebook, cfg.solver, cfg.distortion)
    distances = distortion_summary(graphs, codebook, cfg.solver)
    labels = [y for _, y in train]
    out = Path(cfg.output_dir)
    trace.write_csv(out / "trace.csv")
    write_json(out / "codebook.json", codebook_to_obj(codebook))
    write_json(
        out / "summary.json",
        {
            "purity": None if labels[0] is None else purity(assignments, labels),
            "train_distortion": train_distortion,
            "train_half_sq_distance": distances["half_sq_distance"],
            "train_sq_distance": distances["sq_distance"],
            "first_risk": trace.risks[0],
            "final_risk": trace.risks[-1],
            "max_step_norm": trace.max_step_norm,
        },
    )
    return ["trace.csv", "codebook.json", "summary.json"]


def run_adaline(cfg: ExperimentConfig) -> list[str]:
    seed = cfg.seeds[0]
    train, held = _split_eval(cfg, _labeled_graphs(cfg, cfg.count + cfg.holdout, seed))
    check_labels(train + held)
    model, trace = adaline_train(
        iid_stream(train, cfg.sgg.rng_seed), cfg.sgg, eval_sample=held or train
    )
    summary: dict[str, Any] = {
        "accuracy": accuracy(model, train, cfg.solver),
        "holdout_accuracy": accuracy(model, held, cfg.solver) if held else None,
        "first_risk": trace.risks[0],
        "final_risk": trace.risks[-1],
        "max_step_norm": trace.max_step_norm,
    }
    if "path" not in cfg.data:
        task = TwoClassTask.from_dict(cfg.data["spec"]) if "spec" in cfg.data else default_two_class(seed)
        summary["margin"] = class_margin(train, task.pos.seed_graph, task.neg.seed_graph, cfg.solver)
    out = Path(cfg.output_dir)
    trace.write_csv(out / "trace.csv")
    write_json(out / "model.json", adaline_to_dict(model))
    write_json(out / "summary.json", summary)
    return ["trace.csv", "model.json", "summary.json"]


def run_distance_matrix(cfg: ExperimentConfig) -> list[str]:
    graphs = [g for g, _ in _labeled_graphs(cfg, cfg.count, cfg.seeds[0])]
    matrix = distance_matrix(graphs, cfg.solver)
    rows = [[i, *(_fmt(v) for v in row)] for i, row in enumerate(matrix)]
    write_csv(Path(cfg.output_dir) / "distances.csv", ["index", *map(str, range(len(graphs)))], rows)
    return ["distances.csv"]


def random_loss_point(
    kind: LossKind, rng: np.random.Generator, order: int = 4, attr_dim: int = 2
) -> LossPoint:
    """
    A loss point with dense Gaussian graphs; such points have a unique
    witness with probability one.
    """

    def dense() -> AttributedGraph:
        return AttributedGraph(rng.normal(size=(order, order, attr_dim)))

    kind = LossKind(kind)
    datum = dense()
    if kind in (LossKind.QUANTIZE_SQ, LossKind.QUANTIZE_DIST):
        return LossPoint(param=(dense(), dense(), dense()), datum=datum, loss_kind=kind)
    label = None
    if kind is LossKind.ADALINE:
        label = float(rng.choice([-1.0, 1.0]))
    elif kind is LossKind.MSE_MAP:
        label = float(rng.normal())
    return LossPoint(
        param=dense(), datum=datum, loss_kind=kind, label=label, bias=float(rng.normal())
    )


GRADCHECK_HEADER = ("loss", "trial", "deviation", "verdict")


def gradcheck_table(
    kinds: Sequence[LossKind],
    trials: int,
    rng: np.random.Generator,
    cfg: SolverConfig,
    *,
    order: int = 4,
    attr_dim: int = 2,
    h: float = 1e-6,
    tol: float = 1e-5,
) -> tuple[list[dict[str, Any]], dict[str, dict[str, int]]]:
    """
    One report record per random point (``trials`` per loss) and the per-loss
    verdict counts.
    """
    records: list[dict[str, Any]] = []
    counts: dict[str, dict[str, int]] = {}
    for kind in kinds:
        tally = counts.setdefault(str(kind), {str(v): 0 for v in Verdict})
        for trial in range(trials):
            point = random_loss_point(kind, rng, order, attr_dim)
            report: GradCheckReport = finite_diff_check(point, cfg, h=h, tol=tol)
            tally[str(report.verdict)] += 1
            records.append({"trial": trial, **report.to_dict()})
    return records, counts


def gradcheck_rows(records: Sequence[dict[str, Any]]) -> list[list[Any]]:
    return [[r["loss"], r["trial"], _fmt(r["deviation"]), r["verdict"]] for r in records]


def run_gradcheck(cfg: ExperimentConfig) -> list[str]:
    records, counts = gradcheck_table(
        LOSSES.kinds, cfg.count, make_rng(cfg.seeds[0]), cfg.solver
    )
    out = Path(cfg.output_dir)
    write_csv(out / "gradcheck.csv", GRADCHECK_HEADER, gradcheck_rows(records))
    write_json(out / "summary.json", counts)
    return ["gradcheck.csv", "summary.json"]


RUNNERS: dict[ExperimentKind, Callable[[ExperimentConfig], list[str]]] = {
    ExperimentKind.MEAN_CONSISTENCY: run_mean_consistency,
    ExperimentKind.QUANTIZE: run_quantize,
    ExperimentKind.ADALINE: run_adaline,
    ExperimentKind.DISTANCE_MATRIX: run_distance_matrix,
    ExperimentKind.GRADCHECK: run_gradcheck,
}


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Run one experiment; returns the manifest path."""
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
    log.info("running %s into %s", cfg.kind, cfg.output_dir)
    artifacts = RUNNERS[cfg.kind](cfg)
    return write_manifest(cfg, artifacts)


def rerun_manifest(path: str | Path, output_dir: str | None = None) -> Path:
    """Re-run the experiment recorded in a manifest, optionally elsewhere."""
    manifest = read_json(path)
    if not isinstance(manifest, dict) or "config" not in manifest:
        raise ConfigurationError("manifest has no 'config' section", field="config")
    obj = dict(manifest["config"])
    if output_dir is not None:
        obj["output_dir"] = output_dir
    return run_experiment(ExperimentConfig.from_dict(obj, Path(path).parent))


def verify_manifest(path: str | Path) -> dict[str, bool]:
    """Whether each recorded artifact still hashes to its manifest entry."""
    manifest = read_json(path)
    base = Path(path).parent
    return {
        name: (base / name).is_file() and sha256_file(base / name) == digest
        for name, digest in manifest.get("artifacts", {}).items()
    }


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        obj = read_json(path)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path}: {exc}", field="config") from exc
    return ExperimentConfig.from_dict(obj, Path(path).parent)

