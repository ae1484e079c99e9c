from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .enums import Distortion, ExperimentKind, SolverMode

EXPERIMENT_KEYS = frozenset(
    {
        "kind",
        "data",
        "solver",
        "sgg",
        "output_dir",
        "seeds",
        "sizes",
        "count",
        "holdout",
        "k",
        "distortion",
        "init_separation",
    }
)
SOLVER_KEYS = frozenset({"mode", "exact_max_order", "restarts", "rng_seed"})
SGG_KEYS = frozenset(
    {"schedule", "projection", "iterations", "checkpoint_every", "rng_seed", "solver"}
)


@dataclass(frozen=True, slots=True)
class CheckMessage:
    """
    One problem found in a configuration document.

    Attributes:
        msg: Human readable description.
        field: Dotted path of the offending field.
        id: Stable identifier, ``orbilearn.E0xx``.
    """

    msg: str
    field: str
    id: str

    def __str__(self) -> str:
        return f"{self.id} [{self.field}] {self.msg}"


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_keys(obj: Mapping[str, Any], allowed: frozenset[str], prefix: str) -> list[CheckMessage]:
    return [
        CheckMessage(f"unknown key '{key}'.", f"{prefix}{key}", "orbilearn.E001")
        for key in obj
        if key not in allowed
    ]


def _check_solver(obj: Any, prefix: str) -> list[CheckMessage]:
    if not isinstance(obj, Mapping):
        return [CheckMessage("must be an object.", prefix.rstrip("."), "orbilearn.E002")]
    errors = _check_keys(obj, SOLVER_KEYS, prefix)
    if "mode" in obj and obj["mode"] not in {m.value for m in SolverMode}:
        errors.append(
            CheckMessage(
                f"unknown solver mode {obj['mode']!r}; expected one of "
                f"{', '.join(m.value for m in SolverMode)}.",
                f"{prefix}mode",
                "orbilearn.E003",
            )
        )
    for key in ("exact_max_order", "restarts"):
        if key in obj and not (_is_int(obj[key]) and obj[key] >= 1):
            errors.append(
                CheckMessage("must be an integer >= 1.", f"{prefix}{key}", "orbilearn.E004")
            )
    if "rng_seed" in obj and not _is_int(obj["rng_seed"]):
        errors.append(
            CheckMessage("seeds must be explicit integers.", f"{prefix}rng_seed", "orbilearn.E005")
        )
    return errors


def _check_sgg(obj: Any) -> list[CheckMessage]:
    if not isinstance(obj, Mapping):
        return [CheckMessage("must be an object.", "sgg", "orbilearn.E002")]
    errors = _check_keys(obj, SGG_KEYS, "sgg.")
    schedule = obj.get("schedule", {})
    if not isinstance(schedule, Mapping):
        errors.append(CheckMessage("must be an object.", "sgg.schedule", "orbilearn.E002"))
    else:
        power = schedule.get("power", 1.0)
        if not (isinstance(power, (int, float)) and 0.5 < power <= 1.0):
            errors.append(
                CheckMessage(
                    "must lie in (0.5, 1] for divergent, square-summable steps.",
                    "sgg.schedule.power",
                    "orbilearn.E006",
                )
            )
        for key in ("eta0", "tau"):
            value = schedule.get(key, 1.0)
            if not (isinstance(value, (int, float)) and value > 0):
                errors.append(
                    CheckMessage("must be > 0.", f"sgg.schedule.{key}", "orbilearn.E006")
                )
    projection = obj.get("projection")
    if projection is not None:
        radius = projection.get("radius") if isinstance(projection, Mapping) else None
        if not (isinstance(radius, (int, float)) and radius > 0):
            errors.append(
                CheckMessage("must be a positive number.", "sgg.projection.radius", "orbilearn.E006")
            )
    for key in ("iterations", "checkpoint_every"):
        if key in obj and not (_is_int(obj[key]) and obj[key] >= 1):
            errors.append(CheckMessage("must be an integer >= 1.", f"sgg.{key}", "orbilearn.E004"))
    if "rng_seed" in obj and not _is_int(obj["rng_seed"]):
        errors.append(
            CheckMessage("seeds must be explicit integers.", "sgg.rng_seed", "orbilearn.E005")
        )
    if "solver" in obj:
        errors.extend(_check_solver(obj["solver"], "sgg.solver."))
    return errors


def _check_data(obj: Any, kind: ExperimentKind | None, base_dir: Path) -> list[CheckMessage]:
    if obj is None:
        return []
    if not isinstance(obj, Mapping):
        return [CheckMessage("must be an object.", "data", "orbilearn.E002")]
    errors = _check_keys(obj, frozenset({"path", "spec"}), "data.")
    if "path" in obj and "spec" in obj:
        errors.append(
            CheckMessage("give either 'path' or 'spec', not both.", "data", "orbilearn.E007")
        )
    if "path" in obj:
        if kind is ExperimentKind.MEAN_CONSISTENCY:
            errors.append(
                CheckMessage(
                    "mean_consistency measures against a seed graph and needs a "
                    "generator 'spec'.",
                    "data.path",
                    "orbilearn.E007",
                )
            )
        elif not (base_dir / str(obj["path"])).is_file():
            errors.append(
                CheckMessage(
                    f"dataset file '{obj['path']}' does not exist.", "data.path", "orbilearn.E008"
                )
            )
    return errors


def check_experiment_config(obj: Any, base_dir: str | Path = ".") -> list[CheckMessage]:
    """
    Validate a parsed experiment configuration document.

    Relative data paths are resolved against ``base_dir``. An empty list means
    the document can be turned into an ExperimentConfig.
    """
    if not isinstance(obj, Mapping):
        return [CheckMessage("configuration must be a JSON object.", "", "orbilearn.E002")]

    errors = _check_keys(obj, EXPERIMENT_KEYS, "")
    kind: ExperimentKind | None = None
    if "kind" not in obj:
        errors.append(CheckMessage("missing experiment kind.", "kind", "orbilearn.E009"))
    else:
        try:
            kind = ExperimentKind(obj["kind"])
        except ValueError:
            errors.append(
                CheckMessage(
                    f"unknown experiment kind {obj['kind']!r}; expected one of "
                    f"{', '.join(k.value for k in ExperimentKind)}.",
                    "kind",
                    "orbilearn.E009",
                )
            )

    if "solver" in obj:
        errors.extend(_check_solver(obj["solver"], "solver."))
    if "sgg" in obj:
        errors.extend(_check_sgg(obj["sgg"]))
    errors.extend(_check_data(obj.get("data"), kind, Path(base_dir)))

    for key in ("seeds", "sizes"):
        values = obj.get(key)
        if values is None:
            continue
        if not (isinstance(values, list) and values and all(_is_int(v) for v in values)):
            errors.append(
                CheckMessage("must be a nonempty list of integers.", key, "orbilearn.E005")
            )
    for key in ("count", "holdout", "k"):
        if key in obj and not (_is_int(obj[key]) and obj[key] >= 1):
            errors.append(CheckMessage("must be an integer >= 1.", key, "orbilearn.E004"))
    if "distortion" in obj and obj["distortion"] not in {d.value for d in Distortion}:
        errors.append(
            CheckMessage(
                f"unknown distortion {obj['distortion']!r}.", "distortion", "orbilearn.E003"
            )
        )
    return errors
