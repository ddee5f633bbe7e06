"""Test suites and their on-disk manifest."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from navtestgen.scenario import (
    SchemaError,
    TestDefinition,
    ValidationError,
    dump_yaml,
    family_of,
    load_test_definition,
    serialize_test_definition,
)

MANIFEST_SCHEMA = 1
MANIFEST_NAME = "manifest.yaml"


class EmptySuite(ValueError):
    pass


@dataclass
class SuiteMember:
    name: str
    test: TestDefinition | None
    seed: str = ""
    iteration: int = 0
    parent: str | None = None
    mutation: dict[str, Any] | None = None
    file: str = ""
    load_error: str = ""

    @property
    def family(self) -> str:
        return family_of(self.name)

    def provenance(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "file": self.file or f"tests/{self.name}.yaml",
            "seed": self.seed or self.family,
            "iteration": self.iteration,
            "parent": self.parent,
            "mutation": self.mutation,
        }


@dataclass
class TestSuite:
    __test__ = False

    name: str
    members: list[SuiteMember] = field(default_factory=list)
    generator: dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.members)

    def names(self) -> list[str]:
        return [m.name for m in self.members]

    @classmethod
    def of_tests(cls, name: str, tests) -> "TestSuite":
        return cls(name, [SuiteMember(t.name, t, seed=t.family) for t in tests])

    def merged(self, other: "TestSuite", name: str | None = None) -> "TestSuite":
        return TestSuite(name or self.name, self.members + other.members, dict(self.generator))


def manifest_dict(suite: TestSuite) -> dict[str, Any]:
    doc: dict[str, Any] = {"schema": MANIFEST_SCHEMA, "name": suite.name}
    if suite.generator:
        doc["generator"] = suite.generator
    doc["count"] = len(suite.members)
    doc["members"] = [m.provenance() for m in suite.members]
    return doc


def write_suite(suite: TestSuite, directory) -> Path:
    """Write the manifest plus one YAML file per member under ``directory``."""
    directory = Path(directory)
    (directory / "tests").mkdir(parents=True, exist_ok=True)
    for m in suite.members:
        m.file = m.file or f"tests/{m.name}.yaml"
        if m.test is not None:
            (directory / m.file).write_text(serialize_test_definition(m.test), encoding="utf-8")
    path = directory / MANIFEST_NAME
    path.write_text(dump_yaml(manifest_dict(suite)), encoding="utf-8")
    return path


def load_suite(directory) -> TestSuite:
    """Read a suite directory. Unreadable members are kept with ``load_error`` set."""
    directory = Path(directory)
    path = directory / MANIFEST_NAME if directory.is_dir() else directory
    base = path.parent
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as e:
        raise SchemaError(str(path), f"cannot read suite manifest: {e}") from None
    if not isinstance(doc, dict) or doc.get("schema") != MANIFEST_SCHEMA:
        raise SchemaError(str(path), f"not a schema-{MANIFEST_SCHEMA} suite manifest")
    members = doc.get("members")
    if not isinstance(members, list) or not members:
        raise EmptySuite(f"{path} lists no members")
    suite = TestSuite(str(doc.get("name", base.name)), generator=doc.get("generator") or {})
    for entry in members:
        m = SuiteMember(entry["name"], None, seed=entry.get("seed", ""),
                        iteration=entry.get("iteration", 0), parent=entry.get("parent"),
                        mutation=entry.get("mutation"), file=entry.get("file", ""))
        try:
            m.test = load_test_definition(base / m.file)
        except (OSError, SchemaError, ValidationError, ValueError) as e:
            m.load_error = f"{type(e).__name__}: {e}"
        suite.members.append(m)
    return suite


def is_suite_dir(path) -> bool:
    return os.path.isfile(os.path.join(path, MANIFEST_NAME))
