from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

from .enums import LossKind
from .exceptions import ConfigurationError


@dataclass(frozen=True, slots=True, eq=False)
class LossSpec:
    """
    Immutable registration of one lifted loss.

    Attributes:
        kind: The loss kind.
        implementation: Instance providing parameters/value/gradient/is_tie.
        class_name: Name of the implementing class.
    """

    kind: LossKind
    implementation: Any
    class_name: str


class LossRegistry:
    """
    Collects the lifted losses declared in a namespace.

    Parsing runs once, when the defining module is imported.
    """

    __slots__ = ("_losses",)

    def __init__(self, namespace: Mapping[str, Any]) -> None:
        self._losses: dict[LossKind, LossSpec] = {}
        self._parse_losses(namespace)

    def _parse_losses(self, namespace: Mapping[str, Any]) -> None:
        # Only classes defined with the decorator carry metadata in their own
        # __dict__; imported names and subclasses are not re-registered.
        for name, attr in namespace.items():
            if not isinstance(attr, type):
                continue
            for meta in attr.__dict__.get("_loss_meta", ()):
                kind = meta["kind"]
                if kind in self._losses:
                    raise ConfigurationError(
                        f"loss kind '{kind}' registered by both "
                        f"{self._losses[kind].class_name} and {name}",
                        field="loss_kind",
                    )
                self._losses[kind] = LossSpec(
                    kind=kind, implementation=attr(**meta["options"]), class_name=name
                )

    def get(self, kind: LossKind | str) -> LossSpec:
        """Retrieve the registration for a loss kind."""
        try:
            return self._losses[LossKind(kind)]
        except (KeyError, ValueError):
            raise ConfigurationError(
                f"unknown loss kind {kind!r}", field="loss_kind"
            ) from None

    @property
    def kinds(self) -> tuple[LossKind, ...]:
        """Registered kinds in declaration order of the LossKind enum."""
        return tuple(k for k in LossKind if k in self._losses)
