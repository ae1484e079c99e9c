from enum import StrEnum, auto


class SolverMode(StrEnum):
    """
    How the optimal alignment is searched for.
    Members compare equal to their CLI/JSON spelling.
    """

    EXACT = auto()
    HEURISTIC = auto()


class LossKind(StrEnum):
    """Lifted orbifold losses with a witness-based subgradient selection."""

    KERNEL = auto()
    SQ_HALF_DIST = auto()
    DIST = auto()
    ADALINE = auto()
    QUANTIZE_SQ = auto()
    QUANTIZE_DIST = auto()
    MSE_MAP = auto()


class Distortion(StrEnum):
    """Distortion used by structure quantization (½d² or d)."""

    SQ = auto()
    DIST = auto()


class Verdict(StrEnum):
    PASS = auto()
    FAIL = auto()
    NONSMOOTH = "nonsmooth point"


class ExperimentKind(StrEnum):
    MEAN_CONSISTENCY = auto()
    QUANTIZE = auto()
    ADALINE = auto()
    DISTANCE_MATRIX = auto()
    GRADCHECK = auto()
