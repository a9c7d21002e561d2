"""On-disk data model: problems, labelled samples and augmented samples.

A dataset directory holds ``problems.jsonl``, ``samples.jsonl`` and
``augmented.jsonl`` (one JSON object per line, UTF-8) plus test cases as
paired ``tests/<problem_id>/<NN>.in`` / ``<NN>.out`` files.  ``store`` writes
a canonical form (records sorted by id, keys sorted) so that store/load
round-trips byte for byte.
"""

from __future__ import annotations

import enum
import json
import os
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from logicerr.errors import DatasetError
from logicerr.judge import Status, TestCase
from logicerr.taxonomy import TYPE_IDS

PROBLEMS_FILE = "problems.jsonl"
SAMPLES_FILE = "samples.jsonl"
AUGMENTED_FILE = "augmented.jsonl"
TESTS_DIR = "tests"


class Outcome(str, enum.Enum):
    RIGHT = "RightAugmentation"
    OTHER_TYPE = "OtherTypeOfLogicalError"
    NOT_LOGICAL = "NotALogicalError"
    UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class Problem:
    id: str
    statement: str
    course: str = ""
    io_examples: tuple[TestCase, ...] = ()
    # error kinds that can sensibly be injected into solutions of this problem
    remarks: str = ""

    def to_dict(self) -> dict:
        return {"id": self.id, "statement": self.statement, "course": self.course, "remarks": self.remarks}


@dataclass(frozen=True)
class Provenance:
    submitter_hash: str = ""
    submission_id: str = ""
    annotator_agreement: bool = False


@dataclass(frozen=True)
class LabeledSample:
    id: str
    problem_ref: str
    source_code: str
    source_language: str
    label: tuple[bool, ...] = (False,) * 10
    provenance: Provenance = field(default_factory=Provenance)
    status: str = ""

    @property
    def labeled_types(self) -> frozenset[str]:
        return frozenset(t for t, flag in zip(TYPE_IDS, self.label) if flag)

    @property
    def is_accepted_source(self) -> bool:
        return self.status == Status.ACCEPTED.value

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "problem_ref": self.problem_ref,
            "source_code": self.source_code,
            "source_language": self.source_language,
            "label": [int(x) for x in self.label],
            "provenance": {
                "submitter_hash": self.provenance.submitter_hash,
                "submission_id": self.provenance.submission_id,
                "annotator_agreement": self.provenance.annotator_agreement,
            },
            "status": self.status,
        }


def label_from_types(types: Iterable[str]) -> tuple[bool, ...]:
    wanted = set(types)
    unknown = wanted - set(TYPE_IDS)
    if unknown:
        raise DatasetError(f"unknown error types {sorted(unknown)}")
    return tuple(t in wanted for t in TYPE_IDS)


@dataclass(frozen=True)
class Evidence:
    judge_verdict: str | None = None
    classifier_dominant: str | None = None
    identical_to_source: bool = False


@dataclass(frozen=True)
class AugmentedSample:
    id: str
    source_ref: str
    target_type: str
    generated_code: str
    outcome: Outcome = Outcome.UNRESOLVED
    evidence: Evidence = field(default_factory=Evidence)
    failure: str | None = None
    raw_response: str = ""

    @property
    def failed(self) -> bool:
        return self.failure is not None

    def with_outcome(self, outcome: Outcome, evidence: Evidence) -> "AugmentedSample":
        return replace(self, outcome=outcome, evidence=evidence)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_ref": self.source_ref,
            "target_type": self.target_type,
            "generated_code": self.generated_code,
            "outcome": self.outcome.value,
            "evidence": {
                "judge_verdict": self.evidence.judge_verdict,
                "classifier_dominant": self.evidence.classifier_dominant,
                "identical_to_source": self.evidence.identical_to_source,
            },
            "failure": self.failure,
            "raw_response": self.raw_response,
        }


@dataclass
class Dataset:
    problems: dict[str, Problem] = field(default_factory=dict)
    samples: dict[str, LabeledSample] = field(default_factory=dict)
    augmented: dict[str, AugmentedSample] = field(default_factory=dict)

    def add_problem(self, problem: Problem) -> None:
        self.problems[problem.id] = problem

    def add_sample(self, sample: LabeledSample) -> None:
        self.samples[sample.id] = sample

    def add_augmented(self, aug: AugmentedSample) -> None:
        self.augmented[aug.id] = aug

    def evaluation_samples(self) -> list[LabeledSample]:
        return [s for s in self.samples.values() if any(s.label)]

    def accepted_sources(self) -> list[LabeledSample]:
        return sorted((s for s in self.samples.values() if s.is_accepted_source), key=lambda s: s.id)

    def labels(self) -> dict[str, tuple[bool, ...]]:
        return {s.id: s.label for s in self.samples.values()}

    def problem_for(self, sample_id: str) -> Problem:
        return self.problems[self.samples[sample_id].problem_ref]

    def check_integrity(self) -> None:
        for s in self.samples.values():
            if s.problem_ref not in self.problems:
                raise DatasetError(f"sample {s.id} references unknown problem {s.problem_ref}")
        for a in self.augmented.values():
            if a.source_ref not in self.samples:
                raise DatasetError(f"augmented sample {a.id} references unknown source sample {a.source_ref}")


# --- parsing ------------------------------------------------------------------

class _Record:
    """Field access with errors that name the file, line and field."""

    def __init__(self, obj: Any, where: str):
        if not isinstance(obj, dict):
            raise DatasetError(f"{where}: expected a JSON object")
        self.obj = obj
        self.where = where

    def fail(self, message: str):
        raise DatasetError(f"{self.where}: {message}")

    def get(self, name: str, kind: type | tuple, *, required: bool = True, default: Any = None):
        if name not in self.obj or self.obj[name] is None and not required:
            if required:
                self.fail(f"missing field '{name}'")
            return default
        value = self.obj[name]
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            self.fail(f"field '{name}' has wrong type {type(value).__name__}")
        return value


def _parse_problem(rec: _Record) -> Problem:
    statement = rec.get("statement", str)
    if not statement.strip():
        rec.fail("field 'statement' must be non-empty")
    return Problem(
        id=rec.get("id", str),
        statement=statement,
        course=rec.get("course", str, required=False, default=""),
        remarks=rec.get("remarks", str, required=False, default=""),
    )


def _parse_label(rec: _Record) -> tuple[bool, ...]:
    raw = rec.get("label", list)
    if len(raw) != 10:
        rec.fail(f"label length {len(raw)}, expected 10")
    out = []
    for value in raw:
        if value in (0, 1) and isinstance(value, (int, bool)):
            out.append(bool(value))
        else:
            rec.fail(f"label entries must be 0 or 1, got {value!r}")
    return tuple(out)


def _parse_sample(rec: _Record) -> LabeledSample:
    prov = _Record(rec.get("provenance", dict, required=False, default={}), rec.where + " provenance")
    return LabeledSample(
        id=rec.get("id", str),
        problem_ref=rec.get("problem_ref", str),
        source_code=rec.get("source_code", str),
        source_language=rec.get("source_language", str, required=False, default=""),
        label=_parse_label(rec),
        provenance=Provenance(
            submitter_hash=prov.get("submitter_hash", str, required=False, default=""),
            submission_id=str(prov.get("submission_id", (str, int), required=False, default="")),
            annotator_agreement=prov.get("annotator_agreement", bool, required=False, default=False),
        ),
        status=rec.get("status", str, required=False, default=""),
    )


def _parse_augmented(rec: _Record) -> AugmentedSample:
    target = rec.get("target_type", str)
    if target not in TYPE_IDS:
        rec.fail(f"unknown target_type {target!r}")
    try:
        outcome = Outcome(rec.get("outcome", str, required=False, default=Outcome.UNRESOLVED.value))
    except ValueError:
        rec.fail(f"unknown outcome {rec.obj.get('outcome')!r}")
    ev = _Record(rec.get("evidence", dict, required=False, default={}), rec.where + " evidence")
    return AugmentedSample(
        id=rec.get("id", str),
        source_ref=rec.get("source_ref", str),
        target_type=target,
        generated_code=rec.get("generated_code", str, required=False, default=""),
        outcome=outcome,
        evidence=Evidence(
            judge_verdict=ev.get("judge_verdict", str, required=False),
            classifier_dominant=ev.get("classifier_dominant", str, required=False),
            identical_to_source=ev.get("identical_to_source", bool, required=False, default=False),
        ),
        failure=rec.get("failure", str, required=False),
        raw_response=rec.get("raw_response", str, required=False, default=""),
    )


def read_jsonl(path: Path, parse) -> list:
    if not path.exists():
        return []
    out = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{where}: invalid JSON: {e.msg}") from e
            record = parse(_Record(obj, where))
            if record.id in seen:
                raise DatasetError(f"{where}: duplicate id {record.id!r}")
            seen.add(record.id)
            out.append(record)
    return out


def _read_tests(directory: Path) -> tuple[TestCase, ...]:
    if not directory.is_dir():
        return ()
    cases = []
    for inp in sorted(directory.glob("*.in")):
        out = inp.with_suffix(".out")
        if not out.exists():
            raise DatasetError(f"{inp}: no matching {out.name}")
        cases.append(TestCase(inp.read_text(encoding="utf-8"), out.read_text(encoding="utf-8")))
    return tuple(cases)


def load(root: str | os.PathLike) -> Dataset:
    root = Path(root)
    ds = Dataset()
    for problem in read_jsonl(root / PROBLEMS_FILE, _parse_problem):
        ds.add_problem(replace(problem, io_examples=_read_tests(root / TESTS_DIR / problem.id)))
    for sample in read_jsonl(root / SAMPLES_FILE, _parse_sample):
        ds.add_sample(sample)
    for aug in read_jsonl(root / AUGMENTED_FILE, _parse_augmented):
        ds.add_augmented(aug)
    ds.check_integrity()
    return ds


def canonical_line(record: Mapping) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n"


def write_jsonl(path: Path, records: Iterable[Mapping]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(canonical_line(rec))
    os.replace(tmp, path)


def store(ds: Dataset, root: str | os.PathLike) -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    write_jsonl(root / PROBLEMS_FILE, (p.to_dict() for _, p in sorted(ds.problems.items())))
    write_jsonl(root / SAMPLES_FILE, (s.to_dict() for _, s in sorted(ds.samples.items())))
    write_jsonl(root / AUGMENTED_FILE, (a.to_dict() for _, a in sorted(ds.augmented.items())))
    for pid, problem in sorted(ds.problems.items()):
        if not problem.io_examples:
            continue
        directory = root / TESTS_DIR / pid
        directory.mkdir(parents=True, exist_ok=True)
        for i, case in enumerate(problem.io_examples, start=1):
            (directory / f"{i:02d}.in").write_text(case.stdin, encoding="utf-8", newline="")
            (directory / f"{i:02d}.out").write_text(case.expected_stdout, encoding="utf-8", newline="")


_append_lock = threading.Lock()


def append_records(path: str | os.PathLike, records: Iterable[Mapping]) -> None:
    """Append canonical lines under a process-wide single-writer lock."""
    lines = "".join(canonical_line(r) for r in records)
    with _append_lock:
        with open(path, "a", encoding="utf-8", newline="\n") as f:
            f.write(lines)


# --- distribution ---------------------------------------------------------------

@dataclass(frozen=True)
class DatasetManifest:
    counts_by_type: Mapping[str, int]
    total: int

    def as_row(self) -> list[int]:
        return [self.counts_by_type[t] for t in TYPE_IDS]


def distribution(samples: Dataset | Sequence[LabeledSample]) -> DatasetManifest:
    if isinstance(samples, Dataset):
        samples = list(samples.samples.values())
    counts = {t: 0 for t in TYPE_IDS}
    for s in samples:
        for t in s.labeled_types:
            counts[t] += 1
    return DatasetManifest(counts, len(samples))
