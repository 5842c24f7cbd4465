from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class CheckResult:
    """Outcome of an assumption validator.  Truthy iff the check passed.

    ``witness`` describes the first failure found; ``violations`` lists all
    of them for checks that collect more than one.
    """

    ok: bool
    witness: Any = None
    violations: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


class InvalidModelError(ValueError):
    pass


class InfeasibleConstraintsError(ValueError):
    pass


class GenerationFailedError(RuntimeError):
    pass
