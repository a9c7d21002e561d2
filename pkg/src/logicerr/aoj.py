"""Submission ingestion from an AOJ-style judge API.

Endpoint paths, pagination and the status-code table are configuration:
the public API has changed before and may change again.  Every response
can be cached on disk so a run can be replayed without the network.
"""

from __future__ import annotations

import hashlib
import html
import json
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import httpx

from logicerr.dataset import Dataset, LabeledSample, Problem, Provenance
from logicerr.errors import InvalidArgument, TransportError
from logicerr.judge import Status

logger = logging.getLogger(__name__)

DEFAULT_STATUS_MAP = {
    # numeric codes used by the v1 judge API
    "0": Status.COMPILE_ERROR,
    "1": Status.WRONG_ANSWER,
    "2": Status.TIME_LIMIT,
    "3": Status.RUNTIME_ERROR,  # memory limit exceeded
    "4": Status.ACCEPTED,
    "6": Status.RUNTIME_ERROR,  # output limit exceeded
    "7": Status.RUNTIME_ERROR,
    "8": Status.WRONG_ANSWER,  # presentation error
    "CE": Status.COMPILE_ERROR,
    "WA": Status.WRONG_ANSWER,
    "TLE": Status.TIME_LIMIT,
    "MLE": Status.RUNTIME_ERROR,
    "AC": Status.ACCEPTED,
    "OLE": Status.RUNTIME_ERROR,
    "RE": Status.RUNTIME_ERROR,
    "PE": Status.WRONG_ANSWER,
}

DEFAULT_COURSES = {
    "ITP1": [f"ITP1_{topic}_{letter}" for topic in range(1, 12) for letter in "ABCD"],
}


@dataclass(frozen=True)
class AojConfig:
    base_url: str = "https://judgeapi.u-aizu.ac.jp"
    records_endpoint: str = "/submission_records/problems/{problem_id}"
    source_endpoint: str = "/reviews/{judge_id}"
    description_endpoint: str | None = "/resources/descriptions/en/{problem_id}"
    page_size: int = 100
    max_pages: int = 5
    cache_dir: str | None = None
    salt: str = ""
    timeout: float = 30.0
    max_attempts: int = 3
    backoff: float = 1.0
    status_map: dict[str, Status] = field(default_factory=lambda: dict(DEFAULT_STATUS_MAP))
    courses: dict[str, list[str]] = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_COURSES.items()})

    def course_problems(self, course: str) -> list[str]:
        try:
            return list(self.courses[course])
        except KeyError:
            raise InvalidArgument(f"unknown course id {course!r}; known: {', '.join(sorted(self.courses))}") from None


@dataclass(frozen=True)
class RawSubmission:
    submission_id: str
    problem_id: str
    submitter_hash: str
    language: str
    status: Status
    raw_status: str
    code: str = ""


def hash_submitter(user_id: str, salt: str = "") -> str:
    return hashlib.sha256((salt + user_id).encode("utf-8")).hexdigest()[:16]


def map_status(raw, status_map: dict[str, Status]) -> Status:
    key = str(raw).strip()
    if key in status_map:
        return status_map[key]
    for status in Status:
        if key.lower() == status.value.lower():
            return status
    return Status.UNKNOWN


def _first(record: dict, *keys, default=None):
    for key in keys:
        if key in record and record[key] is not None:
            return record[key]
    return default


def _html_to_text(markup: str) -> str:
    text = re.sub(r"<(script|style)\b.*?</\1>", "", markup, flags=re.S | re.I)
    text = re.sub(r"<br\s*/?>|</p>|</h\d>|</li>|</pre>", "\n", text, flags=re.I)
    text = html.unescape(re.sub(r"<[^>]+>", "", text))
    return re.sub(r"\n{3,}", "\n\n", text).strip()


class AojClient:
    def __init__(
        self,
        config: AojConfig,
        *,
        http: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._http = http
        self._sleep = sleep

    def close(self) -> None:
        if self._http is not None:
            self._http.close()

    def _cache_path(self, url: str) -> Path | None:
        if not self.config.cache_dir:
            return None
        digest = hashlib.sha256(url.encode("utf-8")).hexdigest()
        return Path(self.config.cache_dir) / f"{digest}.json"

    def get_json(self, path: str, params: dict | None = None):
        url = str(httpx.URL(self.config.base_url.rstrip("/") + path, params=params or {}))
        cached = self._cache_path(url)
        if cached is not None and cached.exists():
            return json.loads(cached.read_text(encoding="utf-8"))
        if self._http is None:
            self._http = httpx.Client(timeout=self.config.timeout)
        last = ""
        for attempt in range(1, self.config.max_attempts + 1):
            try:
                resp = self._http.get(url)
            except httpx.TransportError as e:
                last = str(e) or type(e).__name__
            else:
                if resp.status_code == 200:
                    data = resp.json()
                    if cached is not None:
                        cached.parent.mkdir(parents=True, exist_ok=True)
                        cached.write_text(json.dumps(data), encoding="utf-8")
                    return data
                if resp.status_code == 404:
                    return None
                last = f"HTTP {resp.status_code}"
                if resp.status_code < 500 and resp.status_code != 429:
                    break
            if attempt < self.config.max_attempts:
                self._sleep(self.config.backoff * 2 ** (attempt - 1))
        raise TransportError(f"GET {url} failed: {last}")

    def records(self, problem_id: str) -> list[dict]:
        path = self.config.records_endpoint.format(problem_id=problem_id)
        out = []
        for page in range(self.config.max_pages):
            batch = self.get_json(path, {"page": page, "size": self.config.page_size}) or []
            if not isinstance(batch, list):
                raise TransportError(f"{path}: expected a list of submission records")
            out.extend(batch)
            if len(batch) < self.config.page_size:
                break
        return out

    def source(self, judge_id: str) -> str:
        data = self.get_json(self.config.source_endpoint.format(judge_id=judge_id)) or {}
        return _first(data, "sourceCode", "source_code", "code", default="")

    def description(self, problem_id: str) -> str:
        if not self.config.description_endpoint:
            return ""
        data = self.get_json(self.config.description_endpoint.format(problem_id=problem_id)) or {}
        return _html_to_text(_first(data, "html", "description", "statement", default=""))


def ingest_aoj(
    problem_ids: Iterable[str],
    client: AojClient,
    *,
    status: Status | None = None,
    known_ids: Iterable[str] = (),
) -> list[RawSubmission]:
    """Fetch submissions for ``problem_ids``, optionally keeping one status only.

    Submissions whose id is in ``known_ids`` (or repeats within this run) are
    skipped, which makes re-running an ingest idempotent.
    """
    seen = set(known_ids)
    out = []
    for problem_id in problem_ids:
        for record in client.records(problem_id):
            sid = str(_first(record, "judgeId", "judge_id", "id", default=""))
            if not sid or sid in seen:
                continue
            seen.add(sid)
            raw_status = _first(record, "status", "judgeStatus", default="")
            mapped = map_status(raw_status, client.config.status_map)
            if mapped is Status.UNKNOWN:
                logger.warning("submission %s: unmapped status %r kept as Unknown", sid, raw_status)
            if status is not None and mapped is not status:
                continue
            out.append(RawSubmission(
                submission_id=sid,
                problem_id=str(_first(record, "problemId", "problem_id", default=problem_id)),
                submitter_hash=hash_submitter(str(_first(record, "userId", "user_id", default="")), client.config.salt),
                language=str(_first(record, "language", default="")),
                status=mapped,
                raw_status=str(raw_status),
                code=client.source(sid),
            ))
    return out


def sample_id(submission_id: str) -> str:
    return f"aoj-{submission_id}"


def merge_submissions(ds: Dataset, subs: Iterable[RawSubmission], client: AojClient | None = None, course: str = "") -> int:
    """Add new submissions to ``ds`` as unlabelled samples; returns how many were new."""
    added = 0
    for sub in subs:
        sid = sample_id(sub.submission_id)
        if sid in ds.samples:
            continue
        if sub.problem_id not in ds.problems:
            statement = client.description(sub.problem_id) if client is not None else ""
            ds.add_problem(Problem(sub.problem_id, statement or f"AOJ problem {sub.problem_id}", course))
        ds.add_sample(LabeledSample(
            id=sid,
            problem_ref=sub.problem_id,
            source_code=sub.code,
            source_language=sub.language,
            provenance=Provenance(sub.submitter_hash, sub.submission_id, False),
            status=sub.status.value if sub.status is not Status.UNKNOWN else f"Unknown:{sub.raw_status}",
        ))
        added += 1
    return added
