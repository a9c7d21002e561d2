"""Acceptance suite: one test per criterion, each timed against its budget.

Every test records a PASS/FAIL line that ``conftest.py`` prints in the
terminal summary, so a plain ``pytest`` run shows all ten outcomes.
"""

from __future__ import annotations

import itertools
import json
import random
import shutil
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

import corpus
from conftest import ACCEPTANCE_LINES
from helpers import (
    REFERENCE_ACCURACY_CELLS,
    REFERENCE_ACCURACY_COUNTS,
    REFERENCE_OUTCOME_ROWS,
    oracle_fpr,
    random_grid,
    synthetic_results,
    outcome_samples,
)
from logicerr import cli
from logicerr.dataset import AugmentedSample, Evidence, Outcome
from logicerr.errors import AugmentationParseError
from logicerr.evaluate import FPR_MODES, augmentation_table, evaluate, fpr, render_report
from logicerr.judge import DEFAULT_PROFILES, JudgeVerdict, Status, TestCase, judge
from logicerr.llm import Verdict, VerdictValue, parse_augmentation, parse_verdict
from logicerr.pipeline import PromptKit, categorize, resolve
from logicerr.prompts import (
    TARGET_SECTIONS,
    anonymization_check,
    build_all_classification_prompts,
    build_augmentation_prompt,
    split_sections,
)
from logicerr.taxonomy import TYPE_IDS, load_taxonomy

FIXTURES = Path(__file__).parent / "fixtures"
ORDERING = "(J) > (A) > (C) > (H) > (I) > (E) = (G) > (D) > (F) > (B)"


@contextmanager
def criterion(number: int, title: str, limit: float):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        passed = ok and elapsed < limit
        ACCEPTANCE_LINES.append((number, title, passed, elapsed, limit))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {title} ({elapsed:.2f}s / {limit:g}s)")
    assert elapsed < limit, f"criterion {number} took {elapsed:.2f}s, budget {limit}s"


@pytest.fixture(scope="module")
def kit():
    return PromptKit.load()


# 1 ---------------------------------------------------------------------------------

def ordering_oracle(text: str):
    """Comparator built only from the literal ordering string."""
    position = {}
    for depth, tier in enumerate(text.split(">")):
        for letter in tier.split("="):
            position[letter.strip().strip("()")] = depth

    def compare(a, b):
        # earlier tier = higher priority
        return (position[b] > position[a]) - (position[b] < position[a])

    return compare


def test_criterion_01_ordering_oracle():
    tax = load_taxonomy()
    with criterion(1, "ordering oracle equivalence", 1.0):
        compare = ordering_oracle(ORDERING)
        pairs = list(itertools.combinations(TYPE_IDS, 2))
        assert len(pairs) == 45
        ties = []
        for a, b in pairs:
            got = (tax.rank(a) > tax.rank(b)) - (tax.rank(a) < tax.rank(b))
            assert got == compare(a, b), (a, b)
            if got == 0:
                ties.append((a, b))
        assert ties == [("E", "G")]


# 2 ---------------------------------------------------------------------------------

def random_sample(rng: random.Random) -> tuple[str, str]:
    nouns = ["integers", "a string", "n numbers", "a matrix", "two words", "a sequence"]
    verbs = ["Read", "Take", "Given"]
    asks = ["print their sum", "print the maximum", "print it reversed", "count the vowels", "sort and print"]
    problem = f"{rng.choice(verbs)} {rng.choice(nouns)} and {rng.choice(asks)}. Limit: n <= {rng.randint(1, 10**5)}."
    lines = ["#include <iostream>", "int main() {", f"    int n = {rng.randint(0, 99)};"]
    for _ in range(rng.randint(1, 8)):
        v = rng.choice("xyzijk")
        lines.append(rng.choice([
            f"    for (int {v} = 0; {v} < n; {v}++) n -= {rng.randint(1, 3)};",
            f"    if (n {rng.choice(['<', '>', '=='])} {rng.randint(0, 9)}) std::cout << n;",
            "    std::cin >> n;",
            f"    n = n * {rng.randint(2, 9)} % 7;",
        ]))
    lines.append("}")
    return problem, "\n".join(lines) + "\n"


def test_criterion_02_ten_prompt_protocol(kit):
    rng = random.Random(2)
    with criterion(2, "ten-prompt protocol", 1.0):
        for _ in range(10):
            problem, code = random_sample(rng)
            prompts = build_all_classification_prompts(problem, code, kit.bank, kit.templates, kit.taxonomy)
            assert len(prompts) == 10
            assert [p.target_type for p in prompts] == list(TYPE_IDS)
            parsed = [dict(split_sections("classify", p.rendered)) for p in prompts]
            for x, y in itertools.combinations(parsed, 2):
                assert x.keys() == y.keys()
                differing = {sid for sid in x if x[sid] != y[sid]}
                assert differing == TARGET_SECTIONS


# 3 ---------------------------------------------------------------------------------

def test_criterion_03_anonymization(kit):
    rng = random.Random(3)
    remark_pool = [f"({t})" for t in TYPE_IDS]
    with criterion(3, "anonymization property", 5.0):
        for i in range(50):
            problem, code = random_sample(rng)
            target = rng.choice(TYPE_IDS)
            remarks = ", ".join(sorted(rng.sample(remark_pool, rng.randint(1, 5)) + [f"({target})"]))
            prompt = build_augmentation_prompt(problem, code, target, remarks, kit.templates, kit.taxonomy)
            result = anonymization_check(prompt.rendered, kit.taxonomy)
            assert result.passed, (i, result.offenders)


# 4 ---------------------------------------------------------------------------------

def test_criterion_04_reference_accuracy_cells():
    tax = load_taxonomy()
    with criterion(4, "reference accuracy cells", 1.0):
        results, labels = synthetic_results(REFERENCE_ACCURACY_COUNTS, tax)
        report = evaluate(results, labels)
        text = render_report(report, "text", tax)
        rows = text.splitlines()[1:]
        for t, row in zip(TYPE_IDS, rows):
            assert tax.get(t).label in row and REFERENCE_ACCURACY_CELLS[t] in row
            assert report.accuracy[t].render() == REFERENCE_ACCURACY_CELLS[t]
        assert report.average_accuracy.render() == "56% (48/86)"
        assert rows[-1].startswith("AVG") and "56% (48/86)" in rows[-1]


# 5 ---------------------------------------------------------------------------------

def test_criterion_05_outcome_tabulation():
    with criterion(5, "augmentation outcome tabulation", 1.0):
        report = augmentation_table(outcome_samples(REFERENCE_OUTCOME_ROWS))
        lines = render_report(report, "text").splitlines()
        assert lines[1].split() == ["Input", "10", "9", "1", "0"]
        assert lines[-1].split() == ["Total", "111", "49", "24", "38"]
        assert report.per_type["A"].as_tuple() == (10, 9, 1, 0)
        assert report.totals.as_tuple() == (111, 49, 24, 38)


# 6 ---------------------------------------------------------------------------------

def test_criterion_06_fpr_oracle():
    with criterion(6, "FPR oracle equivalence (1000 seeds)", 30.0):
        for seed in range(1000):
            rng = random.Random(seed)
            results, labels = random_grid(rng, 100 + rng.randint(0, 20))
            for mode in FPR_MODES:
                assert fpr(results, labels, mode) == oracle_fpr(results, labels, mode), (seed, mode)


# 7 ---------------------------------------------------------------------------------

def test_criterion_07_categorization_table():
    tax = load_taxonomy()
    statuses = [Status.ACCEPTED, Status.WRONG_ANSWER, Status.COMPILE_ERROR, Status.RUNTIME_ERROR, Status.TIME_LIMIT]
    with criterion(7, "categorization table completeness", 1.0):
        seen = set()
        for status, detected, identical in itertools.product(statuses, (True, False), (True, False)):
            yes = {"D", "H"} if detected else {"H"}
            cls = resolve("x", {t: Verdict(VerdictValue.YES if t in yes else VerdictValue.NO, "") for t in TYPE_IDS}, tax)
            aug = AugmentedSample("x", "src", "D", "code", evidence=Evidence(identical_to_source=identical))
            out = categorize(aug, JudgeVerdict(status), cls).outcome
            not_logical = identical or status in (Status.COMPILE_ERROR, Status.ACCEPTED)
            assert (out is Outcome.NOT_LOGICAL) == not_logical
            if not not_logical:
                assert out is (Outcome.RIGHT if detected else Outcome.OTHER_TYPE)
            seen.add((status, detected, identical))
        assert len(seen) == 20


# 8 ---------------------------------------------------------------------------------

def snapshot_outputs(root: Path) -> dict[str, bytes]:
    skip = {"runs", "exchanges.jsonl"}
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and not skip & set(p.relative_to(root).parts)
    }


def end_to_end(root: Path, kit) -> dict[str, bytes]:
    if root.exists():
        shutil.rmtree(root)
    env = corpus.build_corpus(root, kit)
    common = ["--config", str(env["config"]), "--mock", str(env["fixtures"])]
    for argv in (
        ["classify", "--labeled", *common],
        ["augment", *common],
        ["judge", "--augmented", "--profile", "stub", *common],
    ):
        assert cli.main(argv) == 0, argv
    for fmt in ("text", "json"):
        assert cli.main(["evaluate", "--config", str(env["config"]), "--format", fmt,
                         "--out", str(root / "report"), "--verbose"]) == 0
    return snapshot_outputs(root)


def test_criterion_08_mock_determinism(tmp_path, kit, capsys):
    root = tmp_path / "run"
    with criterion(8, "mock end-to-end determinism (3 runs)", 60.0):
        runs = []
        for _ in range(3):
            files = end_to_end(root, kit)
            runs.append((files, capsys.readouterr().out))
        first_files, first_out = runs[0]
        assert "data/classifications.jsonl" in first_files and "data/augmented.jsonl" in first_files
        assert "report/classification.png" in first_files and "report/augmentation.json" in first_files
        for files, out in runs[1:]:
            assert files.keys() == first_files.keys()
            for name in files:
                assert files[name] == first_files[name], name
            assert out == first_out


# 9 ---------------------------------------------------------------------------------

@pytest.mark.skipif(shutil.which("g++") is None, reason="g++ not installed")
def test_criterion_09_judge_suite():
    programs = FIXTURES / "programs"
    profile = DEFAULT_PROFILES["cpp17"]
    assert profile.time_limit == 2.0
    range_tests = [TestCase(t["stdin"], t["expected_stdout"]) for t in json.loads((programs / "range_tests.json").read_text())]
    echo_tests = [TestCase("hello world\n", "hello world\n"), TestCase("1 2 3\nfour\n", "1 2 3\nfour\n")]
    cases = [
        ("echo.cpp", echo_tests, Status.ACCEPTED),
        ("range_wrong_condition.cpp", range_tests, Status.WRONG_ANSWER),
        ("syntax_broken.cpp", range_tests, Status.COMPILE_ERROR),
        ("infinite_loop.cpp", range_tests, Status.TIME_LIMIT),
    ]
    with criterion(9, "judge verdict suite", 15.0):
        for name, tests, expected in cases:
            verdict = judge((programs / name).read_text(), profile, tests)
            assert verdict.value is expected, (name, verdict)


# 10 --------------------------------------------------------------------------------

def test_criterion_10_parser_robustness():
    corpus_lines = (FIXTURES / "verdicts.jsonl").read_text().splitlines()
    cases = [json.loads(line) for line in corpus_lines if line.strip()]
    expected_code = json.loads((FIXTURES / "augment" / "expected.json").read_text())
    with criterion(10, "parser robustness", 1.0):
        assert len(cases) >= 30
        wrong = [c["response"] for c in cases if parse_verdict(c["response"]).value.value != c["expected"]]
        assert wrong == []
        for name, code in expected_code.items():
            text = (FIXTURES / "augment" / name).read_text()
            if code is None:
                with pytest.raises(AugmentationParseError):
                    parse_augmentation(text)
            else:
                assert parse_augmentation(text).code == code
