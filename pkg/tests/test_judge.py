from __future__ import annotations

import json
import shutil
import time
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logicerr.errors import InvalidArgument, JudgeEnvironmentError
from logicerr.judge import (
    DEFAULT_PROFILES,
    Status,
    TestCase,
    ToolchainProfile,
    judge,
    judge_many,
    normalize_output,
)

PROGRAMS = Path(__file__).parent / "fixtures" / "programs"
needs_gxx = pytest.mark.skipif(shutil.which("g++") is None, reason="g++ not installed")

CPP = DEFAULT_PROFILES["cpp17"]
PY = DEFAULT_PROFILES["python3"]


def range_tests():
    return [TestCase(**t) for t in json.loads((PROGRAMS / "range_tests.json").read_text())]


def source(name):
    return (PROGRAMS / name).read_text()


@pytest.mark.parametrize(
    "text, lines",
    [
        ("Yes\n", ["Yes"]),
        ("Yes   \n\n\n", ["Yes"]),
        ("a b \r\nc", ["a b", "c"]),
        ("", []),
        ("\n x\n", ["", " x"]),
    ],
)
def test_normalize(text, lines):
    assert normalize_output(text) == lines


@needs_gxx
@pytest.mark.parametrize(
    "program, status, failed",
    [
        ("range_correct.cpp", Status.ACCEPTED, None),
        ("range_wrong_condition.cpp", Status.WRONG_ANSWER, 1),
        ("syntax_broken.cpp", Status.COMPILE_ERROR, None),
        ("infinite_loop.cpp", Status.TIME_LIMIT, 0),
        ("crash.cpp", Status.RUNTIME_ERROR, 0),
    ],
)
def test_cpp_verdicts(program, status, failed):
    verdict = judge(source(program), CPP, range_tests())
    assert verdict.value is status
    assert verdict.failed_test == failed


@needs_gxx
def test_compile_error_carries_diagnostics():
    verdict = judge(source("syntax_broken.cpp"), CPP, range_tests())
    assert "error" in verdict.detail


def test_python_profile():
    tests = [TestCase("2 3\n", "5\n"), TestCase("10 -4\n", "6\n")]
    assert judge("a, b = map(int, input().split())\nprint(a + b)\n", PY, tests).value is Status.ACCEPTED
    assert judge("a, b = map(int, input().split())\nprint(a - b)\n", PY, tests).value is Status.WRONG_ANSWER
    assert judge("print(1/0)\n", PY, tests).value is Status.RUNTIME_ERROR
    assert judge("def f(:\n", PY, tests).value is Status.COMPILE_ERROR


def test_time_limit_enforced_promptly():
    profile = ToolchainProfile("python3", run_command="{python} {src}", source_name="main.py", time_limit=1.0)
    started = time.monotonic()
    verdict = judge("while True:\n    pass\n", profile, [TestCase("", "")])
    elapsed = time.monotonic() - started
    assert verdict.value is Status.TIME_LIMIT
    assert elapsed < 1.0 + 1.0


def test_memory_limit_enforced():
    profile = ToolchainProfile(
        "python3", run_command="{python} {src}", source_name="main.py", memory_limit=256 * 1024 * 1024
    )
    verdict = judge("x = bytearray(1024 * 1024 * 1024)\nprint(len(x))\n", profile, [TestCase("", "1073741824\n")])
    assert verdict.value is Status.RUNTIME_ERROR


def test_runs_in_scratch_dir_with_scrubbed_env():
    code = (
        "import os\n"
        "print('main.py' in os.listdir('.') and 'logicerr-judge-' in os.getcwd())\n"
        "print('LOGICERR_API_KEY' in os.environ)\n"
    )
    assert judge(code, PY, [TestCase("", "True\nFalse\n")]).value is Status.ACCEPTED


def test_missing_toolchain():
    profile = ToolchainProfile("ghost", compile_command="no-such-compiler-xyz {src}", run_command="{out}")
    with pytest.raises(JudgeEnvironmentError, match="no-such-compiler-xyz"):
        judge("x", profile, [TestCase("", "")])
    profile = ToolchainProfile("ghost", run_command="no-such-interpreter-xyz {src}")
    with pytest.raises(JudgeEnvironmentError):
        judge("x", profile, [TestCase("", "")])


def test_no_tests_rejected():
    with pytest.raises(InvalidArgument):
        judge("print(1)", PY, [])


def test_judge_many_keeps_order():
    tests = [TestCase("", "1\n")]
    codes = ["print(1)", "print(2)", "print(1)", "raise SystemExit(3)"]
    verdicts = judge_many([(c, PY, tests) for c in codes], max_workers=3)
    assert [v.value for v in verdicts] == [
        Status.ACCEPTED, Status.WRONG_ANSWER, Status.ACCEPTED, Status.RUNTIME_ERROR,
    ]


ECHO_DOUBLE = "import sys\nfor line in sys.stdin:\n    n = int(line)\n    print(n * 2 if n % 3 else n)\n"


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=5), st.data())
def test_removing_tests_never_turns_accept_into_wrong(values, data):
    tests = [TestCase(f"{v}\n", f"{v * 2}\n") for v in values]
    full = judge(ECHO_DOUBLE, PY, tests)
    keep = data.draw(st.lists(st.sampled_from(range(len(tests))), min_size=1, unique=True))
    subset = judge(ECHO_DOUBLE, PY, [tests[i] for i in sorted(keep)])
    if full.value is Status.ACCEPTED:
        assert subset.value is Status.ACCEPTED
    if subset.value is Status.WRONG_ANSWER:
        assert full.value is Status.WRONG_ANSWER
