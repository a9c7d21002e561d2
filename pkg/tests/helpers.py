"""Builders for mock-transport fixtures shared by several test modules."""

from __future__ import annotations

import json
from fractions import Fraction

from logicerr.dataset import AugmentedSample, Evidence, Outcome, label_from_types
from logicerr.llm import Verdict, VerdictValue, prompt_hash
from logicerr.pipeline import ClassificationResult, resolve
from logicerr.prompts import build_all_classification_prompts, build_augmentation_prompt
from logicerr.taxonomy import TYPE_IDS


def verdict_text(t: str, yes: bool) -> str:
    word = "Yes" if yes else "No"
    return f"Checking the code for error kind ({t}) step by step.\nAnswer: {word}"


def classification_fixtures(kit, problem: str, code: str, yes_types) -> dict[str, str]:
    prompts = build_all_classification_prompts(problem, code, kit.bank, kit.templates, kit.taxonomy)
    return {prompt_hash(p.rendered): verdict_text(p.target_type, p.target_type in yes_types) for p in prompts}


def augmentation_fixture(kit, problem: str, code: str, target: str, remarks: str, response: str) -> dict[str, str]:
    prompt = build_augmentation_prompt(problem, code, target, remarks, kit.templates, kit.taxonomy)
    return {prompt_hash(prompt.rendered): response}


def code_response(code: str) -> str:
    return json.dumps({"code": code, "explanation": "changed one line"})


def write_fixture_file(path, fixtures: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for key in sorted(fixtures):
            f.write(json.dumps({"hash": key, "response": fixtures[key]}, sort_keys=True) + "\n")



# --- evaluation fixtures ------------------------------------------------------------

# per-type (correct, total) for a classifier run with error descriptions in the prompt
REFERENCE_ACCURACY_COUNTS = {
    "A": (5, 10), "B": (8, 10), "C": (3, 5), "D": (4, 9), "E": (8, 12),
    "F": (4, 8), "G": (5, 10), "H": (4, 8), "I": (5, 8), "J": (2, 6),
}
REFERENCE_ACCURACY_CELLS = {
    "A": "50% (5/10)", "B": "80% (8/10)", "C": "60% (3/5)", "D": "44% (4/9)", "E": "67% (8/12)",
    "F": "50% (4/8)", "G": "50% (5/10)", "H": "50% (4/8)", "I": "63% (5/8)", "J": "33% (2/6)",
}

# (augmented, right, other, not_logical) per target type
REFERENCE_OUTCOME_ROWS = {
    "A": (10, 9, 1, 0), "B": (13, 11, 1, 1), "C": (10, 4, 2, 4), "D": (10, 1, 6, 3),
    "E": (10, 1, 1, 8), "F": (12, 3, 4, 5), "G": (12, 5, 2, 5), "H": (11, 4, 2, 5),
    "I": (10, 4, 2, 4), "J": (13, 7, 3, 3),
}


def synthetic_results(counts, taxonomy):
    """Single-label samples where exactly ``correct`` of each type's prompt says Yes."""
    results, labels = [], {}
    for t, (correct, total) in counts.items():
        for i in range(total):
            sid = f"{t}{i:02d}"
            verdicts = {u: Verdict(VerdictValue.YES if (u == t and i < correct) else VerdictValue.NO, "")
                        for u in TYPE_IDS}
            results.append(resolve(sid, verdicts, taxonomy))
            labels[sid] = label_from_types(t)
    return results, labels


def outcome_samples(rows):
    out = []
    for t, (_, right, other, not_logical) in rows.items():
        plan = [Outcome.RIGHT] * right + [Outcome.OTHER_TYPE] * other + [Outcome.NOT_LOGICAL] * not_logical
        for i, outcome in enumerate(plan):
            verdict = "CompileError" if outcome is Outcome.NOT_LOGICAL else "WrongAnswer"
            out.append(AugmentedSample(f"aug-{t}-{i:02d}", "src", t, "code", outcome, Evidence(verdict, None, False)))
    return out


def random_grid(rng, n_samples):
    """Random multi-label labels and Yes/No verdict grid; returns (results, labels)."""
    results, labels = [], {}
    for i in range(n_samples):
        sid = f"s{i:04d}"
        labels[sid] = tuple(rng.random() < 0.2 for _ in TYPE_IDS)
        verdicts = {t: Verdict(rng.choice((VerdictValue.YES, VerdictValue.NO, VerdictValue.UNPARSEABLE)), "")
                    for t in TYPE_IDS}
        detected = frozenset(t for t, v in verdicts.items() if v.is_yes)
        # dominant fields are irrelevant to the metrics
        results.append(ClassificationResult(sid, verdicts, detected, frozenset(), None, 0))
    return results, labels


def oracle_fpr(results, labels, mode):
    """Nested-loop recount over the full sample x type grid."""
    out = {}
    for j, t in enumerate(TYPE_IDS):
        num = den = 0
        for r in results:
            label = labels[r.sample_ref]
            if mode == "negatives":
                if not label[j]:
                    den += 1
                    if r.verdicts[t].value.value == "Yes":
                        num += 1
            else:
                if label[j]:
                    den += 10
                    for k, u in enumerate(TYPE_IDS):
                        if not label[k] and r.verdicts[u].value.value == "Yes":
                            num += 1
        out[t] = Fraction(num, den) if den else None
    return out


def oracle_accuracy(results, labels):
    out = {}
    for j, t in enumerate(TYPE_IDS):
        correct = total = 0
        for r in results:
            if labels[r.sample_ref][j]:
                total += 1
                if r.verdicts[t].value.value == "Yes":
                    correct += 1
        out[t] = (correct, total)
    return out
