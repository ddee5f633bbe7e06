"""Navigation algorithms under test."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from navtestgen.subjects.base import (
    SensorSnapshot,
    Subject,
    SubjectError,
    UnknownSubject,
)
from navtestgen.subjects.external import ExternalSubject
from navtestgen.subjects.grid_planner import GridReplanner
from navtestgen.subjects.potential_field import PotentialFieldPlanner

SUBJECT_KINDS = {
    "refnav_a": PotentialFieldPlanner,
    "refnav_b": GridReplanner,
    "external": ExternalSubject,
}


def make_subject(kind: str, params: dict[str, Any] | None = None) -> Subject:
    """Build a fresh planner of the given kind with its default parameters overridden by ``params``."""
    try:
        cls = SUBJECT_KINDS[kind]
    except KeyError:
        raise UnknownSubject(f"unknown subject {kind!r}; choose from {sorted(SUBJECT_KINDS)}") from None
    return cls(**(params or {}))


@dataclass(frozen=True)
class SubjectSpec:
    """Picklable recipe for a subject, so worker processes can build their own."""

    kind: str
    params: tuple[tuple[str, Any], ...] = field(default=())

    @classmethod
    def of(cls, kind: str, params: dict[str, Any] | None = None) -> "SubjectSpec":
        if kind not in SUBJECT_KINDS:
            raise UnknownSubject(f"unknown subject {kind!r}; choose from {sorted(SUBJECT_KINDS)}")
        return cls(kind, tuple(sorted((params or {}).items())))

    @property
    def subject_id(self) -> str:
        return self.kind

    def build(self) -> Subject:
        return make_subject(self.kind, dict(self.params))


__all__ = [
    "ExternalSubject",
    "GridReplanner",
    "PotentialFieldPlanner",
    "SensorSnapshot",
    "Subject",
    "SubjectError",
    "SubjectSpec",
    "UnknownSubject",
    "make_subject",
]
