from __future__ import annotations

from dataclasses import dataclass


class StructureError(ValueError):
    """A table is malformed (wrong shape, dangling id) before any axiom can be checked."""


class ConsistencyError(RuntimeError):
    """An internal invariant failed on valid input; this signals a bug, not bad data."""


@dataclass(frozen=True)
class Violation:
    """One failed axiom together with the tuple of ids that witnesses it."""

    axiom: str
    witness: tuple

    def __str__(self):
        return f"{self.axiom}: {', '.join(map(str, self.witness))}"
