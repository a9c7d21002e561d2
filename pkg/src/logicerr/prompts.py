"""Deterministic assembly of classification and augmentation prompts.

Section wording lives in ``<template_dir>/classify/*.tmpl`` and
``<template_dir>/augment/*.tmpl``; few-shot examples live in a JSONL bank.
Rendering is a pure function of (templates, taxonomy, bank, sample).
"""

from __future__ import annotations

import json
import os
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from logicerr.errors import ConfigurationError
from logicerr.taxonomy import TYPE_IDS, Taxonomy, check_type_id, load_taxonomy

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_TEMPLATE_DIR = DATA_DIR / "templates"
DEFAULT_FEWSHOT_PATH = DATA_DIR / "fewshot.jsonl"

CLASSIFY_SECTIONS = (
    "BackgroundKnowledge",
    "ErrorDescription",
    "FewShotCoT",
    "Instruction",
    "CodeWithError",
    "ToTPrompt",
    "QuestionOutputIndicator",
)
AUGMENT_SECTIONS = (
    "BackgroundKnowledge",
    "AnonymizedDescriptions",
    "CodeWithoutError",
    "Instruction",
    "AugmentationRemarks",
    "OutputFormatInduction",
)

# the only classification sections allowed to vary with the target type
TARGET_SECTIONS = frozenset({"ErrorDescription", "FewShotCoT"})

SECTION_FILES = {
    "BackgroundKnowledge": "background_knowledge",
    "ErrorDescription": "error_description",
    "FewShotCoT": "few_shot_cot",
    "Instruction": "instruction",
    "CodeWithError": "code_with_error",
    "ToTPrompt": "tot_prompt",
    "QuestionOutputIndicator": "question_output_indicator",
    "AnonymizedDescriptions": "anonymized_descriptions",
    "CodeWithoutError": "code_without_error",
    "AugmentationRemarks": "augmentation_remarks",
    "OutputFormatInduction": "output_format_induction",
}

SECTION_TITLES = {
    "classify": {
        "BackgroundKnowledge": "Background Knowledge",
        "ErrorDescription": "Error Description",
        "FewShotCoT": "Examples",
        "Instruction": "Instruction",
        "CodeWithError": "Code With a Logical Error",
        "ToTPrompt": "Expert Discussion",
        "QuestionOutputIndicator": "Question",
    },
    "augment": {
        "BackgroundKnowledge": "Background Knowledge",
        "AnonymizedDescriptions": "Error Kinds",
        "CodeWithoutError": "Code Without Logical Error",
        "Instruction": "Instruction",
        "AugmentationRemarks": "Augmentation Remarks",
        "OutputFormatInduction": "Response Format",
    },
}

PLACEHOLDERS = {
    "classify": {
        "BackgroundKnowledge": {"error_names"},
        "ErrorDescription": {"letter", "name", "description", "occurrences", "restrictions"},
        "FewShotCoT": {"examples", "letter", "name"},
        "Instruction": set(),
        "CodeWithError": {"problem", "code"},
        "ToTPrompt": set(),
        "QuestionOutputIndicator": set(),
    },
    "augment": {
        "BackgroundKnowledge": set(),
        "AnonymizedDescriptions": {"descriptions", "ordering"},
        "CodeWithoutError": {"problem", "code"},
        "Instruction": {"target"},
        "AugmentationRemarks": {"remarks"},
        "OutputFormatInduction": set(),
    },
}

KIND_SECTIONS = {"classify": CLASSIFY_SECTIONS, "augment": AUGMENT_SECTIONS}


# --- templates ----------------------------------------------------------------

@dataclass(frozen=True)
class PromptTemplates:
    kind: str
    sections: Mapping[str, str]

    def render(self, section: str, values: Mapping[str, str]) -> str:
        allowed = PLACEHOLDERS[self.kind][section]
        return self.sections[section].format(**{k: v for k, v in values.items() if k in allowed})


@dataclass(frozen=True)
class TemplateSet:
    classify: PromptTemplates
    augment: PromptTemplates


def _placeholders(text: str, where: str) -> set[str]:
    names = set()
    try:
        parsed = list(string.Formatter().parse(text))
    except ValueError as e:
        raise ConfigurationError(f"{where}: malformed template: {e}") from e
    for _, name, spec, conversion in parsed:
        if name is None:
            continue
        if not name.isidentifier() or spec or conversion:
            raise ConfigurationError(f"{where}: unsupported placeholder {{{name}}}")
        names.add(name)
    return names


def load_prompt_templates(kind: str, directory: str | os.PathLike) -> PromptTemplates:
    directory = Path(directory)
    sections = {}
    for section in KIND_SECTIONS[kind]:
        path = directory / f"{SECTION_FILES[section]}.tmpl"
        if not path.is_file():
            raise ConfigurationError(f"missing template section {section}: {path}")
        text = path.read_text(encoding="utf-8").rstrip("\n")
        unknown = _placeholders(text, str(path)) - PLACEHOLDERS[kind][section]
        if unknown:
            raise ConfigurationError(
                f"{path}: unknown placeholder(s) {', '.join(sorted(unknown))}; "
                f"allowed: {', '.join(sorted(PLACEHOLDERS[kind][section])) or 'none'}"
            )
        sections[section] = text
    return PromptTemplates(kind, sections)


def load_templates(template_dir: str | os.PathLike | None = None) -> TemplateSet:
    root = Path(template_dir) if template_dir is not None else DEFAULT_TEMPLATE_DIR
    return TemplateSet(
        classify=load_prompt_templates("classify", root / "classify"),
        augment=load_prompt_templates("augment", root / "augment"),
    )


# --- few-shot bank --------------------------------------------------------------

@dataclass(frozen=True)
class FewShotExample:
    error_type: str
    problem_summary: str
    code_snippet: str
    reasoning: str
    verdict: str

    def render(self, index: int) -> str:
        return (
            f"Example {index}\n"
            f"Problem: {self.problem_summary}\n"
            f"Code:\n```\n{self.code_snippet}\n```\n"
            f"Reasoning:\n{self.reasoning}\n"
            f"Answer: {self.verdict}"
        )


@dataclass(frozen=True)
class FewShotBank:
    examples_by_type: Mapping[str, tuple[FewShotExample, ...]] = field(default_factory=dict)

    def for_type(self, type_id: str) -> tuple[FewShotExample, ...]:
        return self.examples_by_type.get(check_type_id(type_id), ())


def _verdict_matches_reasoning(verdict: str, reasoning: str) -> bool:
    last = reasoning.strip().splitlines()[-1] if reasoning.strip() else ""
    return re.search(rf"\b{verdict}\b", last, re.IGNORECASE) is not None


def load_fewshot_bank(path: str | os.PathLike | None = None, *, require_all: bool = True) -> FewShotBank:
    path = Path(path) if path is not None else DEFAULT_FEWSHOT_PATH
    by_type: dict[str, list[FewShotExample]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"{where}: invalid JSON: {e.msg}") from e
            missing = [k for k in ("type", "problem_summary", "code", "reasoning", "verdict") if k not in rec]
            if missing:
                raise ConfigurationError(f"{where}: missing field(s) {', '.join(missing)}")
            if rec["type"] not in TYPE_IDS:
                raise ConfigurationError(f"{where}: unknown type {rec['type']!r}")
            if rec["verdict"] not in ("Yes", "No"):
                raise ConfigurationError(f"{where}: verdict must be Yes or No, got {rec['verdict']!r}")
            if not _verdict_matches_reasoning(rec["verdict"], rec["reasoning"]):
                raise ConfigurationError(
                    f"{where}: verdict {rec['verdict']} does not appear in the final line of the reasoning"
                )
            by_type.setdefault(rec["type"], []).append(
                FewShotExample(rec["type"], rec["problem_summary"], rec["code"], rec["reasoning"], rec["verdict"])
            )
    if require_all:
        empty = [t for t in TYPE_IDS if t not in by_type]
        if empty:
            raise ConfigurationError(f"{path}: no few-shot examples for type(s) {', '.join(empty)}")
    return FewShotBank({t: tuple(v) for t, v in sorted(by_type.items())})


# --- rendered prompts ------------------------------------------------------------

@dataclass(frozen=True)
class ClassificationPrompt:
    target_type: str
    sections: tuple[tuple[str, str], ...]
    rendered: str

    def section(self, section_id: str) -> str:
        return dict(self.sections)[section_id]


@dataclass(frozen=True)
class AugmentationPrompt:
    target_type: str
    sections: tuple[tuple[str, str], ...]
    rendered: str

    def section(self, section_id: str) -> str:
        return dict(self.sections)[section_id]


def render_sections(kind: str, sections: Iterable[tuple[str, str]]) -> str:
    titles = SECTION_TITLES[kind]
    return "\n\n".join(f"### {titles[sid]}\n{text}" for sid, text in sections) + "\n"


def split_sections(kind: str, rendered: str) -> list[tuple[str, str]]:
    """Recover (section_id, text) pairs by scanning the ``### Title`` markers."""
    by_title = {title: sid for sid, title in SECTION_TITLES[kind].items()}
    marker = re.compile(r"^### (.+)$", re.MULTILINE)
    hits = [m for m in marker.finditer(rendered) if m.group(1) in by_title]
    out = []
    for i, m in enumerate(hits):
        end = hits[i + 1].start() if i + 1 < len(hits) else len(rendered)
        out.append((by_title[m.group(1)], rendered[m.end() + 1:end].rstrip("\n")))
    return out


def restriction_lines(target: str, taxonomy: Taxonomy, *, anonymize: bool = False) -> list[str]:
    lines = []
    for other in taxonomy.higher_ranked_neighbors(target):
        note = taxonomy.overlap_note(target, other)
        if anonymize:
            lines.append(f"Not this kind when {note}; that case counts as ({other}).")
        else:
            lines.append(
                f"Do not classify the code as this error type when {note}; "
                f"that case belongs to the higher-priority type {taxonomy.get(other).label}."
            )
    return lines


def _error_description(target: str, taxonomy: Taxonomy) -> dict[str, str]:
    et = taxonomy.get(target)
    restrictions = restriction_lines(target, taxonomy)
    if restrictions:
        restriction_text = "Restrictions:\n" + "\n".join(f"- {r}" for r in restrictions)
    else:
        restriction_text = "Restrictions: none. This type takes precedence over every other type."
    return {
        "letter": et.id,
        "name": et.name,
        "description": et.description,
        "occurrences": "\n".join(f"{i}. {ex}" for i, ex in enumerate(et.occurrence_examples, start=1)),
        "restrictions": restriction_text,
    }


def build_classification_prompt(
    problem: str,
    code: str,
    target: str,
    bank: FewShotBank,
    templates: TemplateSet,
    taxonomy: Taxonomy | None = None,
) -> ClassificationPrompt:
    taxonomy = taxonomy or load_taxonomy()
    check_type_id(target)
    examples = bank.for_type(target)
    if not examples:
        raise ConfigurationError(f"few-shot bank has no examples for type {target}")
    tmpl = templates.classify
    values = {
        "error_names": "\n".join(t.label for t in taxonomy.types),
        "examples": "\n\n".join(ex.render(i) for i, ex in enumerate(examples, start=1)),
        "problem": problem,
        "code": code,
        **_error_description(target, taxonomy),
    }
    sections = tuple((sid, tmpl.render(sid, values)) for sid in CLASSIFY_SECTIONS)
    return ClassificationPrompt(target, sections, render_sections("classify", sections))


def build_all_classification_prompts(
    problem: str,
    code: str,
    bank: FewShotBank,
    templates: TemplateSet,
    taxonomy: Taxonomy | None = None,
) -> list[ClassificationPrompt]:
    taxonomy = taxonomy or load_taxonomy()
    return [build_classification_prompt(problem, code, t, bank, templates, taxonomy) for t in TYPE_IDS]


def anonymized_descriptions(taxonomy: Taxonomy) -> str:
    blocks = []
    for et in taxonomy.types:
        lines = [f"({et.id}) {et.description}"]
        lines += [f"    {i}. {ex}" for i, ex in enumerate(et.occurrence_examples, start=1)]
        lines += [f"    {r}" for r in restriction_lines(et.id, taxonomy, anonymize=True)]
        blocks.append("\n".join(lines))
    return "\n".join(blocks)


def build_augmentation_prompt(
    problem: str,
    accepted_code: str,
    target: str,
    remarks: str,
    templates: TemplateSet,
    taxonomy: Taxonomy | None = None,
) -> AugmentationPrompt:
    taxonomy = taxonomy or load_taxonomy()
    check_type_id(target)
    if not remarks or not remarks.strip():
        raise ConfigurationError("augmentation remarks are required (list the error kinds feasible for this problem)")
    values = {
        "descriptions": anonymized_descriptions(taxonomy),
        "ordering": taxonomy.ordering_string(),
        "problem": problem,
        "code": accepted_code,
        "target": target,
        "remarks": remarks.strip(),
    }
    tmpl = templates.augment
    sections = tuple((sid, tmpl.render(sid, values)) for sid in AUGMENT_SECTIONS)
    rendered = render_sections("augment", sections)
    check = anonymization_check(rendered, taxonomy)
    if not check:
        raise ConfigurationError(
            f"augmentation prompt reveals category names: {', '.join(check.offenders)}"
        )
    return AugmentationPrompt(target, sections, rendered)


# --- anonymization ---------------------------------------------------------------

@dataclass(frozen=True)
class AnonymizationResult:
    passed: bool
    offenders: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.passed


_SUFFIX = r"(?:errors?|category|categories|types?|mistakes?)"


def _category_patterns(taxonomy: Taxonomy) -> list[re.Pattern]:
    patterns = []
    for et in taxonomy.types:
        name = r"\s*/\s*".join(re.escape(part) for part in et.name.split("/"))
        patterns.append(re.compile(rf"\b{name}[\s-]+{_SUFFIX}\b", re.IGNORECASE))
        patterns.append(re.compile(rf"\([A-J]\)\s*{name}\b", re.IGNORECASE))
        if "/" in et.name:
            # a slash-joined name is a category label on its own
            patterns.append(re.compile(rf"\b{name}\b", re.IGNORECASE))
    return patterns


def anonymization_check(text: str, taxonomy: Taxonomy | None = None) -> AnonymizationResult:
    """Fail when ``text`` names one of the ten categories as a category.

    Bare words such as "input" or "loop" are allowed; phrases such as
    "Input error", "(A) Input" or "Array/String" are not.
    """
    taxonomy = taxonomy or load_taxonomy()
    hits: list[tuple[int, str]] = []
    for pattern in _category_patterns(taxonomy):
        hits += [(m.start(), m.group(0)) for m in pattern.finditer(text)]
    offenders = []
    for _, phrase in sorted(hits):
        if phrase not in offenders:
            offenders.append(phrase)
    return AnonymizationResult(not offenders, tuple(offenders))
