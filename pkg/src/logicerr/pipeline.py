"""Classification and augmentation runs over a dataset.

Classification sends one prompt per error type for a sample, parses the ten
Yes/No verdicts and resolves the detected set to its dominant type.
Augmentation asks for one targeted fault in an Accepted solution;
``categorize`` later decides whether that worked, using the judge verdict
and a classification of the generated code.
"""

from __future__ import annotations

import json
import os
import re
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from logicerr.dataset import (
    AugmentedSample,
    Evidence,
    LabeledSample,
    Outcome,
    canonical_line,
)
from logicerr.errors import (
    AugmentationParseError,
    CredentialError,
    DatasetError,
    FixtureError,
    InvalidArgument,
    PipelineError,
    PreconditionError,
    TransportError,
)
from logicerr.judge import JudgeVerdict, Status
from logicerr.llm import ChatClient, Verdict, VerdictValue, parse_augmentation, parse_verdict
from logicerr.prompts import (
    FewShotBank,
    TemplateSet,
    build_all_classification_prompts,
    build_augmentation_prompt,
    load_fewshot_bank,
    load_templates,
)
from logicerr.taxonomy import TYPE_IDS, Taxonomy, check_type_id, load_taxonomy

RESULTS_FILE = "classifications.jsonl"


@dataclass(frozen=True)
class PromptKit:
    taxonomy: Taxonomy
    templates: TemplateSet
    bank: FewShotBank

    @classmethod
    def load(cls, taxonomy_file=None, template_dir=None, fewshot_file=None) -> "PromptKit":
        return cls(load_taxonomy(taxonomy_file), load_templates(template_dir), load_fewshot_bank(fewshot_file))


@dataclass(frozen=True)
class ClassificationResult:
    sample_ref: str
    verdicts: Mapping[str, Verdict]
    detected: frozenset[str]
    dominant_set: frozenset[str]
    dominant: str | None
    unparseable_count: int
    partial: bool = False
    errors: Mapping[str, str] = field(default_factory=dict)

    def said_yes(self, type_id: str) -> bool:
        return self.verdicts[type_id].is_yes

    def to_dict(self) -> dict:
        return {
            "sample_ref": self.sample_ref,
            "verdicts": {
                t: {"value": v.value.value, "reasoning_excerpt": v.reasoning_excerpt}
                for t, v in sorted(self.verdicts.items())
            },
            "detected": sorted(self.detected),
            "dominant_set": sorted(self.dominant_set),
            "dominant": self.dominant,
            "unparseable_count": self.unparseable_count,
            "partial": self.partial,
            "errors": dict(sorted(self.errors.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassificationResult":
        verdicts = {t: Verdict(VerdictValue(v["value"]), v.get("reasoning_excerpt", "")) for t, v in d["verdicts"].items()}
        if sorted(verdicts) != list(TYPE_IDS):
            raise DatasetError(f"classification {d.get('sample_ref')!r} does not carry all ten verdicts")
        return cls(
            sample_ref=d["sample_ref"],
            verdicts=verdicts,
            detected=frozenset(d["detected"]),
            dominant_set=frozenset(d["dominant_set"]),
            dominant=d["dominant"],
            unparseable_count=d["unparseable_count"],
            partial=d.get("partial", False),
            errors=d.get("errors", {}),
        )


def resolve(sample_ref: str, verdicts: Mapping[str, Verdict], taxonomy: Taxonomy,
            errors: Mapping[str, str] | None = None) -> ClassificationResult:
    """Assemble a result from ten verdicts; Unparseable counts as No for detection."""
    if sorted(verdicts) != list(TYPE_IDS):
        raise PipelineError(f"{sample_ref}: expected verdicts for A-J, got {sorted(verdicts)}")
    detected = frozenset(t for t, v in verdicts.items() if v.is_yes)
    dom = taxonomy.dominant(detected)
    return ClassificationResult(
        sample_ref=sample_ref,
        verdicts=dict(sorted(verdicts.items())),
        detected=detected,
        dominant_set=dom.maximal_set,
        dominant=dom.canonical,
        unparseable_count=sum(v.value is VerdictValue.UNPARSEABLE for v in verdicts.values()),
        partial=bool(errors),
        errors=dict(errors or {}),
    )


def classify(sample_ref: str, problem: str, code: str, client: ChatClient, kit: PromptKit) -> ClassificationResult:
    prompts = build_all_classification_prompts(problem, code, kit.bank, kit.templates, kit.taxonomy)
    with ThreadPoolExecutor(max_workers=client.config.max_in_flight) as pool:
        futures = {p.target_type: pool.submit(client.complete, p.rendered) for p in prompts}
    verdicts: dict[str, Verdict] = {}
    errors: dict[str, str] = {}
    for t in TYPE_IDS:
        try:
            verdicts[t] = parse_verdict(futures[t].result().raw_response)
        except TransportError as e:
            verdicts[t] = Verdict(VerdictValue.UNPARSEABLE, "")
            errors[t] = str(e)
        except (FixtureError, CredentialError):
            raise
    if len(errors) == len(TYPE_IDS):
        raise PipelineError(f"{sample_ref}: every prompt failed ({errors['A']})")
    return resolve(sample_ref, verdicts, kit.taxonomy, errors)


def classify_many(
    items: Sequence[tuple[str, str, str]],
    client: ChatClient,
    kit: PromptKit,
    parallelism: int = 1,
) -> list[ClassificationResult]:
    """Classify ``(sample_ref, problem, code)`` items; output follows input order."""
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        return list(pool.map(lambda item: classify(*item, client, kit), items))


# --- augmentation ---------------------------------------------------------------

def normalize_whitespace(code: str) -> str:
    return " ".join(code.split())


def augment(
    aug_id: str,
    source: LabeledSample,
    problem: str,
    target: str,
    remarks: str,
    client: ChatClient,
    kit: PromptKit,
) -> AugmentedSample:
    check_type_id(target)
    if not source.is_accepted_source:
        raise PreconditionError(f"source {source.id} is not an Accepted submission (status {source.status!r})")
    prompt = build_augmentation_prompt(problem, source.source_code, target, remarks, kit.templates, kit.taxonomy)
    try:
        raw = client.complete(prompt.rendered).raw_response
    except TransportError as e:
        return AugmentedSample(aug_id, source.id, target, "", failure=f"transport: {e}")
    try:
        payload = parse_augmentation(raw)
    except AugmentationParseError as e:
        return AugmentedSample(aug_id, source.id, target, "", failure=str(e), raw_response=raw)
    identical = normalize_whitespace(payload.code) == normalize_whitespace(source.source_code)
    return AugmentedSample(
        aug_id, source.id, target, payload.code,
        evidence=Evidence(identical_to_source=identical),
        raw_response=raw,
    )


NOT_LOGICAL_STATUSES = frozenset({Status.COMPILE_ERROR, Status.ACCEPTED})
LOGICAL_STATUSES = frozenset({Status.WRONG_ANSWER, Status.RUNTIME_ERROR, Status.TIME_LIMIT})


def categorize(
    aug: AugmentedSample,
    judge_result: JudgeVerdict | Status,
    classification: ClassificationResult | None = None,
) -> AugmentedSample:
    status = judge_result.value if isinstance(judge_result, JudgeVerdict) else Status(judge_result)
    if aug.failed:
        raise PreconditionError(f"{aug.id}: failed augmentation cannot be categorized")
    if status not in NOT_LOGICAL_STATUSES | LOGICAL_STATUSES:
        raise InvalidArgument(f"{aug.id}: cannot categorize with judge status {status.value}")
    dominant = classification.dominant if classification is not None else None
    identical = aug.evidence.identical_to_source
    if identical or status in NOT_LOGICAL_STATUSES:
        outcome = Outcome.NOT_LOGICAL
    elif classification is None:
        raise PreconditionError(f"{aug.id}: judge says {status.value}; a classification of the generated code is required")
    elif aug.target_type in classification.detected:
        outcome = Outcome.RIGHT
    else:
        outcome = Outcome.OTHER_TYPE
    return aug.with_outcome(outcome, Evidence(status.value, dominant, identical))


def needs_classification(aug: AugmentedSample, status: Status) -> bool:
    return not aug.evidence.identical_to_source and status in LOGICAL_STATUSES


_LETTER = re.compile(r"\(([A-J])\)")


def feasible_types(remarks: str) -> frozenset[str] | None:
    """Letters named as ``(X)`` in the remarks, or None when none are named."""
    letters = frozenset(_LETTER.findall(remarks or ""))
    return letters or None


def plan_augmentations(
    sources: Sequence[LabeledSample],
    quotas: Mapping[str, int],
    remarks_for: Mapping[str, str] | None = None,
) -> list[tuple[LabeledSample, str]]:
    """Assign sources to targets round-robin, honouring per-problem feasibility.

    ``remarks_for`` maps a source id to its problem's remarks; a source is only
    used for target X when those remarks name ``(X)`` or name no letter at all.
    """
    plan = []
    for target in TYPE_IDS:
        count = quotas.get(target, 0)
        if count < 0:
            raise InvalidArgument(f"negative quota for {target}")
        pool = [
            s for s in sources
            if (f := feasible_types((remarks_for or {}).get(s.id, ""))) is None or target in f
        ]
        if count and not pool:
            raise PreconditionError(f"no Accepted source is feasible for target {target}")
        plan += [(pool[k % len(pool)], target) for k in range(count)]
    return plan


# --- result files and manifests --------------------------------------------------------

def store_results(path: str | os.PathLike, results: Iterable[ClassificationResult]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in sorted(results, key=lambda r: r.sample_ref):
            f.write(canonical_line(r.to_dict()))


def load_results(path: str | os.PathLike) -> list[ClassificationResult]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                out.append(ClassificationResult.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
                raise DatasetError(f"{path}:{lineno}: bad classification record ({e})") from e
    return out


def write_manifest(directory: str | os.PathLike, command: str, config_snapshot: Mapping,
                   sample_ids: Iterable[str], started: datetime) -> Path:
    finished = datetime.now(timezone.utc)
    run_id = f"{started.strftime('%Y%m%dT%H%M%SZ')}-{uuid.uuid4().hex[:8]}"
    record = {
        "run_id": run_id,
        "command": command,
        "config": dict(config_snapshot),
        "sample_ids": sorted(sample_ids),
        "started": started.isoformat(timespec="seconds"),
        "finished": finished.isoformat(timespec="seconds"),
    }
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{run_id}.json"
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
