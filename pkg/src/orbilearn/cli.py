"""
Command-line entry point.

Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors. Results
meant for machines go to stdout; logging goes to stderr.
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, TextIO

from .alignment import SolverConfig, distance, ged_alignment, kernel
from .datagen import (
    MixtureSpec,
    PerturbationSpec,
    TwoClassTask,
    default_mixture,
    default_perturbation,
    default_two_class,
    make_rng,
    sample,
    sample_mixture,
)
from .enums import Distortion, ExperimentKind, LossKind, SolverMode
from .exceptions import ConfigurationError, OrbilearnError
from .experiments import (
    GRADCHECK_HEADER,
    ExperimentConfig,
    gradcheck_rows,
    gradcheck_table,
    rerun_manifest,
    run_experiment,
    write_csv,
    write_run_manifest,
)
from .gendiff import LOSSES
from .graph import GraphDataset
from .learners import (
    Codebook,
    adaline_predict,
    adaline_train,
    check_labels,
    distortion_summary,
    estimate_mean,
    quantize,
)
from .serialization import (
    adaline_from_dict,
    adaline_to_dict,
    codebook_to_obj,
    graph_to_dict,
    load_dataset,
    load_graph,
    read_json,
    save_dataset,
    write_json,
)
from .settings import Settings
from .sgg import ProjectionBall, SggConfig, StepSchedule, iid_stream

log = logging.getLogger(__name__)


class Command:
    """
    One subcommand. Subclasses set ``name`` and ``help`` and implement
    ``add_arguments`` and ``handle``.
    """

    name = ""
    help = ""

    def __init__(self, stdout: TextIO, stderr: TextIO) -> None:
        self.stdout = stdout
        self.stderr = stderr

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        pass

    def handle(self, args: argparse.Namespace) -> None:
        raise NotImplementedError

    def write(self, text: str) -> None:
        self.stdout.write(text + "\n")


# --- shared options -------------------------------------------------------------------


def _add_solver_args(
    parser: argparse.ArgumentParser, seed_option: str = "--solver-seed"
) -> None:
    group = parser.add_argument_group("alignment solver")
    group.add_argument("--mode", choices=[m.value for m in SolverMode], default="exact")
    group.add_argument("--exact-max-order", type=int, default=10)
    group.add_argument("--restarts", type=int, default=8)
    group.add_argument(seed_option, dest="solver_seed", type=int, default=0, help="heuristic seed")


def _solver(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        mode=args.mode,
        exact_max_order=args.exact_max_order,
        restarts=args.restarts,
        rng_seed=args.solver_seed,
    )


def _add_sgg_args(parser: argparse.ArgumentParser, eta0: float = 0.5) -> None:
    group = parser.add_argument_group("stochastic generalized gradient")
    group.add_argument("--iterations", type=int, default=1000)
    group.add_argument("--eta0", type=float, default=eta0)
    group.add_argument("--tau", type=float, default=50.0)
    group.add_argument("--power", type=float, default=1.0)
    group.add_argument("--radius", type=float, default=None, help="default: 10 x max sample length")
    group.add_argument("--checkpoint-every", type=int, default=50)
    group.add_argument("--seed", type=int, default=0, help="seed for --resample draws")
    group.add_argument(
        "--resample",
        action="store_true",
        help="draw i.i.d. from the dataset instead of one pass in file order",
    )
    group.add_argument("--eval", metavar="FILE", help="held-out dataset for the trace")
    _add_solver_args(parser)


def _sgg(args: argparse.Namespace) -> SggConfig:
    return SggConfig(
        schedule=StepSchedule(eta0=args.eta0, tau=args.tau, power=args.power),
        projection=None if args.radius is None else ProjectionBall(args.radius),
        iterations=args.iterations,
        checkpoint_every=args.checkpoint_every,
        rng_seed=args.seed,
        solver=_solver(args),
    )


def _add_output_dir(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output-dir", default=".", help="directory for artifacts and manifest.json")


def _stream(items: Sequence[Any], args: argparse.Namespace) -> Any:
    return iid_stream(items, args.seed) if args.resample else items


def _eval_dataset(args: argparse.Namespace) -> GraphDataset | None:
    return None if args.eval is None else load_dataset(args.eval)


def _write_summary(
    path: Path,
    dataset: GraphDataset,
    held: GraphDataset | None,
    codebook: Codebook,
    cfg: SggConfig,
) -> None:
    """Distortion of the held-out set if given, else of the training set."""
    graphs = dataset.graphs if held is None else held.graphs
    write_json(path, distortion_summary(graphs, codebook, cfg.solver))


def _finish(args: argparse.Namespace, command: str, cfg: dict[str, Any], artifacts: list[str]) -> None:
    seeds = [v for k, v in sorted(cfg.items()) if k.endswith("seed")]
    write_run_manifest(args.output_dir, {"command": command, **cfg}, seeds, artifacts)


# --- subcommands ------------------------------------------------------------------------


class GenCommand(Command):
    name = "gen"
    help = "Sample a synthetic dataset."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--kind", choices=["perturbation", "mixture", "two-class"], default="perturbation"
        )
        parser.add_argument("--spec", metavar="FILE", help="generator spec JSON; default bundled")
        parser.add_argument("--count", type=int, required=True)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out", default="dataset.json", help="file name under --output-dir")
        _add_output_dir(parser)

    def handle(self, args: argparse.Namespace) -> None:
        spec_obj = None if args.spec is None else read_json(args.spec)
        if args.kind == "perturbation":
            spec = default_perturbation() if spec_obj is None else PerturbationSpec.from_dict(spec_obj)
            spec = spec.with_seed(args.seed)
            dataset = GraphDataset.ingest(sample(spec, args.count))
            resolved = spec.to_dict()
        elif args.kind == "mixture":
            mixture = default_mixture(args.seed) if spec_obj is None else MixtureSpec.from_dict(spec_obj)
            pairs = sample_mixture(mixture, args.count)
            dataset = GraphDataset.ingest([g for g, _ in pairs], [c for _, c in pairs])
            resolved = mixture.to_dict()
        else:
            task = default_two_class(args.seed) if spec_obj is None else TwoClassTask.from_dict(spec_obj)
            pairs = task.sample(args.count)
            dataset = GraphDataset.ingest([g for g, _ in pairs], [y for _, y in pairs])
            resolved = task.to_dict()

        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_dataset(out / args.out, dataset)
        resolved_cfg = {"kind": args.kind, "spec": resolved, "count": args.count, "seed": args.seed}
        _finish(args, self.name, resolved_cfg, [args.out])
        self.write(str(out / args.out))


class _PairCommand(Command):
    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--a", required=True, metavar="FILE")
        parser.add_argument("--b", required=True, metavar="FILE")
        _add_solver_args(parser, seed_option="--seed")


class AlignCommand(_PairCommand):
    name = "align"
    help = "Optimal alignment kernel and its witness."

    def handle(self, args: argparse.Namespace) -> None:
        a, b = load_graph(args.a), load_graph(args.b)
        res = kernel(a, b, _solver(args))
        self.write(
            json.dumps(
                {
                    "value": res.kernel_value,
                    "witness": list(res.witness.mapping),
                    "exact": res.exact,
                }
            )
        )


class DistCommand(_PairCommand):
    name = "dist"
    help = "Intrinsic distance between two graphs."

    def handle(self, args: argparse.Namespace) -> None:
        self.write(repr(distance(load_graph(args.a), load_graph(args.b), _solver(args))))


class GedCommand(_PairCommand):
    name = "ged"
    help = "Graph edit distance over minimal alignments."

    def handle(self, args: argparse.Namespace) -> None:
        res = ged_alignment(load_graph(args.a), load_graph(args.b), _solver(args))
        self.write(repr(res.cost))


class MeanCommand(Command):
    name = "mean"
    help = "Estimate the mean graph of a dataset."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--data", required=True, metavar="FILE")
        _add_sgg_args(parser)
        _add_output_dir(parser)

    def handle(self, args: argparse.Namespace) -> None:
        dataset = load_dataset(args.data)
        cfg = _sgg(args)
        held = _eval_dataset(args)
        mean, trace = estimate_mean(
            _stream(dataset.graphs, args), cfg, eval_sample=None if held is None else held.graphs
        )
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "mean.json", graph_to_dict(mean))
        trace.write_csv(out / "trace.csv")
        _write_summary(out / "summary.json", dataset, held, Codebook((mean,)), cfg)
        resolved = {"data": args.data, "sgg": cfg.to_dict(), "seed": args.seed}
        _finish(args, self.name, resolved, ["mean.json", "trace.csv", "summary.json"])
        self.write(str(out / "mean.json"))


class QuantizeCommand(Command):
    name = "quantize"
    help = "Learn a codebook by online competitive learning."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--data", required=True, metavar="FILE")
        parser.add_argument("--k", type=int, required=True)
        parser.add_argument("--distortion", choices=[d.value for d in Distortion], default="sq")
        parser.add_argument("--init-separation", type=float, default=1e-6)
        _add_sgg_args(parser)
        _add_output_dir(parser)

    def handle(self, args: argparse.Namespace) -> None:
        dataset = load_dataset(args.data)
        cfg = _sgg(args)
        held = _eval_dataset(args)
        codebook, trace = quantize(
            _stream(dataset.graphs, args),
            args.k,
            cfg,
            Distortion(args.distortion),
            eval_sample=None if held is None else held.graphs,
            init_separation=args.init_separation,
        )
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "codebook.json", codebook_to_obj(codebook))
        trace.write_csv(out / "trace.csv")
        _write_summary(out / "summary.json", dataset, held, codebook, cfg)
        _finish(
            args,
            self.name,
            {
                "data": args.data,
                "k": args.k,
                "distortion": args.distortion,
                "sgg": cfg.to_dict(),
                "seed": args.seed,
            },
            ["codebook.json", "trace.csv", "summary.json"],
        )
        self.write(str(out / "codebook.json"))


def _labeled(dataset: GraphDataset, name: str) -> list[tuple[Any, float]]:
    if dataset.labels is None:
        raise ConfigurationError(f"{name} has no labels", field="labels")
    labeled = list(zip(dataset.graphs, dataset.labels))
    check_labels(labeled)
    return labeled


class AdalineTrainCommand(Command):
    name = "adaline-train"
    help = "Train an orbifold adaline on a labeled dataset."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--data", required=True, metavar="FILE")
        _add_sgg_args(parser, eta0=0.05)
        _add_output_dir(parser)

    def handle(self, args: argparse.Namespace) -> None:
        labeled = _labeled(load_dataset(args.data), args.data)
        cfg = _sgg(args)
        held = _eval_dataset(args)
        model, trace = adaline_train(
            _stream(labeled, args),
            cfg,
            eval_sample=None if held is None else _labeled(held, args.eval),
        )
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "model.json", adaline_to_dict(model))
        trace.write_csv(out / "trace.csv")
        resolved = {"data": args.data, "sgg": cfg.to_dict(), "seed": args.seed}
        _finish(args, self.name, resolved, ["model.json", "trace.csv"])
        self.write(str(out / "model.json"))


class AdalinePredictCommand(Command):
    name = "adaline-predict"
    help = "Predict ±1 labels with a trained adaline."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--model", required=True, metavar="FILE")
        parser.add_argument("--data", required=True, metavar="FILE")
        _add_solver_args(parser, seed_option="--seed")

    def handle(self, args: argparse.Namespace) -> None:
        model = adaline_from_dict(read_json(args.model))
        cfg = _solver(args)
        for g in load_dataset(args.data):
            self.write(str(adaline_predict(model, g, cfg)))


class GradcheckCommand(Command):
    name = "gradcheck"
    help = "Finite-difference check of the subgradient selections."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--loss", choices=["all", *(k.value for k in LossKind)], default="all")
        parser.add_argument("--trials", type=int, default=100)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--order", type=int, default=4)
        parser.add_argument("--attr-dim", type=int, default=2)
        parser.add_argument("--h", type=float, default=1e-6)
        parser.add_argument("--tol", type=float, default=1e-5)
        _add_solver_args(parser)
        _add_output_dir(parser)

    def handle(self, args: argparse.Namespace) -> None:
        kinds = LOSSES.kinds if args.loss == "all" else (LossKind(args.loss),)
        cfg = _solver(args)
        records, summary = gradcheck_table(
            kinds,
            args.trials,
            make_rng(args.seed),
            cfg,
            order=args.order,
            attr_dim=args.attr_dim,
            h=args.h,
            tol=args.tol,
        )
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "gradcheck.csv", GRADCHECK_HEADER, gradcheck_rows(records))
        write_json(out / "gradcheck.json", records)
        write_json(out / "summary.json", summary)
        _finish(
            args,
            self.name,
            {"loss": args.loss, "trials": args.trials, "seed": args.seed, "solver": cfg.to_dict()},
            ["gradcheck.csv", "gradcheck.json", "summary.json"],
        )
        for record in records:
            self.write(json.dumps(record))


class ExperimentCommand(Command):
    name = "experiment"
    help = "Run a bundled experiment, or re-run one from its manifest."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("kind", nargs="?", choices=[k.value for k in ExperimentKind])
        parser.add_argument("--config", metavar="FILE")
        parser.add_argument("--manifest", metavar="FILE")
        parser.add_argument("--output-dir", default=None)

    def handle(self, args: argparse.Namespace) -> None:
        if args.manifest is not None:
            path = rerun_manifest(args.manifest, args.output_dir)
            self.write(str(path))
            return
        if args.config is None and args.kind is None:
            raise ConfigurationError("give an experiment kind, --config or --manifest", field="kind")

        obj: dict[str, Any] = {} if args.config is None else read_json(args.config)
        if not isinstance(obj, dict):
            raise ConfigurationError("configuration must be a JSON object", field="config")
        if args.kind is not None:
            if obj.get("kind", args.kind) != args.kind:
                raise ConfigurationError(
                    f"config is for {obj['kind']!r}, command line asks for {args.kind!r}",
                    field="kind",
                )
            obj["kind"] = args.kind
        if args.output_dir is not None:
            obj["output_dir"] = args.output_dir
        base_dir = Path(args.config).parent if args.config else Path(".")
        cfg = ExperimentConfig.from_dict(obj, base_dir)
        self.write(str(run_experiment(cfg)))


COMMANDS: tuple[type[Command], ...] = (
    GenCommand,
    AlignCommand,
    DistCommand,
    GedCommand,
    MeanCommand,
    QuantizeCommand,
    AdalineTrainCommand,
    AdalinePredictCommand,
    GradcheckCommand,
    ExperimentCommand,
)


def build_parser(stdout: TextIO, stderr: TextIO) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbilearn", description="Learning on graph orbifolds."
    )
    parser.add_argument("--log-level", default=None, help="default: $ORBILEARN_LOG_LEVEL or WARNING")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for cls in COMMANDS:
        command = cls(stdout, stderr)
        sp = sub.add_parser(cls.name, help=cls.help, description=cls.help)
        command.add_arguments(sp)
        sp.set_defaults(handler=command)
    return parser


def run(
    argv: Sequence[str] | None = None,
    stdout: TextIO | None = None,
    stderr: TextIO | None = None,
) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser(stdout, stderr)
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    if args.command is None:
        parser.print_usage(stderr)
        return 2

    try:
        level = args.log_level or Settings.from_env().log_level
        logging.basicConfig(
            level=level.upper(),
            stream=stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )
        args.handler.handle(args)
    except json.JSONDecodeError as exc:
        stderr.write(f"error: malformed JSON: {exc}\n")
        return 1
    except OrbilearnError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        stderr.write(f"error{where}: {exc}\n")
        return 1
    except (OSError, ValueError) as exc:
        stderr.write(f"error: {exc}\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run())
