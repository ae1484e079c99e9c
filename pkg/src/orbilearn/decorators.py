from collections.abc import Callable
from typing import Any, TypeVar

from .enums import LossKind

C = TypeVar("C", bound=type)


def lifted_loss(kind: LossKind, **options: Any) -> Callable[[C], C]:
    """
    Class decorator to mark a lifted orbifold loss.

    It attaches a metadata dictionary to the class, which is later read by
    the LossRegistry. Decorators stack: one implementation can serve several
    loss kinds with different constructor options.

    Args:
        kind: The loss kind the class implements.
        **options: Keyword arguments the registry passes to the constructor.
    """

    def decorator(cls: C) -> C:
        if "_loss_meta" not in cls.__dict__:
            setattr(cls, "_loss_meta", [])

        cls._loss_meta.append({"kind": LossKind(kind), "options": dict(options)})
        return cls

    return decorator
