"""Compile-and-run judge with per-test time and memory limits.

Each invocation runs inside its own scratch directory with a scrubbed
environment and OS resource limits.  It is meant for local, trusted corpora,
not as a hardened sandbox.
"""

from __future__ import annotations

import enum
import math
import os
import resource
import shlex
import signal
import subprocess
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from logicerr.errors import InvalidArgument, JudgeEnvironmentError

DETAIL_CHARS = 2000


class Status(str, enum.Enum):
    ACCEPTED = "Accepted"
    WRONG_ANSWER = "WrongAnswer"
    COMPILE_ERROR = "CompileError"
    RUNTIME_ERROR = "RuntimeError"
    TIME_LIMIT = "TimeLimit"
    # never produced by the judge; only for ingested statuses we cannot map
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class TestCase:
    stdin: str
    expected_stdout: str

    __test__ = False  # keep pytest from collecting this as a test class


@dataclass(frozen=True)
class JudgeVerdict:
    value: Status
    detail: str = ""
    failed_test: int | None = None


@dataclass(frozen=True)
class ToolchainProfile:
    language_id: str
    run_command: str
    compile_command: str | None = None
    source_name: str = "main"
    time_limit: float = 2.0
    memory_limit: int = 512 * 1024 * 1024
    compile_timeout: float = 60.0

    def __post_init__(self):
        if self.time_limit <= 0:
            raise InvalidArgument("time_limit must be positive")
        if self.memory_limit <= 0:
            raise InvalidArgument("memory_limit must be positive")


DEFAULT_PROFILES = {
    "cpp17": ToolchainProfile(
        "cpp17",
        compile_command="g++ -std=gnu++17 -O2 -o {out} {src}",
        run_command="{out}",
        source_name="main.cpp",
    ),
    "c11": ToolchainProfile(
        "c11",
        compile_command="gcc -std=gnu11 -O2 -o {out} {src} -lm",
        run_command="{out}",
        source_name="main.c",
    ),
    "python3": ToolchainProfile(
        "python3",
        compile_command="{python} -m py_compile {src}",
        run_command="{python} {src}",
        source_name="main.py",
    ),
}


def normalize_output(text: str) -> list[str]:
    lines = [line.rstrip() for line in text.split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def _argv(template: str, values: dict[str, str]) -> list[str]:
    try:
        return [part.format(**values) for part in shlex.split(template)]
    except (KeyError, ValueError) as e:
        raise JudgeEnvironmentError(f"bad command template {template!r}: {e}") from e


def _run_env() -> dict[str, str]:
    return {"PATH": os.environ.get("PATH", "/usr/bin:/bin"), "LANG": "C.UTF-8", "HOME": "/nonexistent"}


def _limiter(profile: ToolchainProfile):
    cpu = math.ceil(profile.time_limit) + 1

    def apply():
        resource.setrlimit(resource.RLIMIT_CPU, (cpu, cpu + 1))
        resource.setrlimit(resource.RLIMIT_AS, (profile.memory_limit, profile.memory_limit))
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))

    return apply


def _excerpt(text: str) -> str:
    return text[:DETAIL_CHARS]


def _run_test(argv: list[str], test: TestCase, profile: ToolchainProfile, workdir: str) -> tuple[str, int | None, str]:
    """Returns (kind, returncode, stdout|stderr) with kind in ok/timeout/crash."""
    try:
        proc = subprocess.Popen(
            argv,
            cwd=workdir,
            env=_run_env(),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            start_new_session=True,
            preexec_fn=_limiter(profile),
        )
    except FileNotFoundError as e:
        raise JudgeEnvironmentError(f"cannot run {argv[0]!r}: {e.strerror}") from e
    except OSError as e:
        raise JudgeEnvironmentError(f"sandbox setup failed: {e}") from e
    try:
        out, err = proc.communicate(test.stdin.encode("utf-8"), timeout=profile.time_limit)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        proc.communicate()
        return "timeout", None, ""
    if proc.returncode in (-signal.SIGXCPU, -signal.SIGKILL):
        return "timeout", proc.returncode, ""
    if proc.returncode != 0:
        return "crash", proc.returncode, err.decode("utf-8", "replace")
    return "ok", 0, out.decode("utf-8", "replace")


def judge(code: str, profile: ToolchainProfile, tests: Sequence[TestCase]) -> JudgeVerdict:
    if not tests:
        raise InvalidArgument("judge needs at least one test case")
    try:
        scratch = tempfile.TemporaryDirectory(prefix="logicerr-judge-")
    except OSError as e:
        raise JudgeEnvironmentError(f"cannot create scratch directory: {e}") from e
    with scratch as workdir:
        src = Path(workdir) / profile.source_name
        src.write_text(code, encoding="utf-8")
        values = {"src": str(src), "out": str(Path(workdir) / "prog"), "dir": workdir, "python": sys.executable}
        values["bin"] = values["out"]

        if profile.compile_command:
            argv = _argv(profile.compile_command, values)
            try:
                proc = subprocess.run(
                    argv, cwd=workdir, capture_output=True, timeout=profile.compile_timeout, env=_run_env()
                )
            except FileNotFoundError as e:
                raise JudgeEnvironmentError(f"compiler {argv[0]!r} not found") from e
            except subprocess.TimeoutExpired:
                return JudgeVerdict(Status.COMPILE_ERROR, "compilation timed out")
            if proc.returncode != 0:
                diag = (proc.stderr or proc.stdout).decode("utf-8", "replace")
                return JudgeVerdict(Status.COMPILE_ERROR, _excerpt(diag))

        run_argv = _argv(profile.run_command, values)
        for index, test in enumerate(tests):
            kind, code_, output = _run_test(run_argv, test, profile, workdir)
            if kind == "timeout":
                return JudgeVerdict(Status.TIME_LIMIT, f"test {index}: exceeded {profile.time_limit}s", index)
            if kind == "crash":
                return JudgeVerdict(Status.RUNTIME_ERROR, f"test {index}: exit status {code_}\n{_excerpt(output)}", index)
            if normalize_output(output) != normalize_output(test.expected_stdout):
                return JudgeVerdict(Status.WRONG_ANSWER, f"test {index}: output differs", index)
    return JudgeVerdict(Status.ACCEPTED)


def judge_many(
    jobs: Iterable[tuple[str, ToolchainProfile, Sequence[TestCase]]],
    max_workers: int = 2,
) -> list[JudgeVerdict]:
    """Judge several submissions in parallel; results keep the input order."""
    jobs = list(jobs)
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        return list(pool.map(lambda job: judge(*job), jobs))
