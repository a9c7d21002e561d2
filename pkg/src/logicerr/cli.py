"""``logicerr`` command line: ingest, classify, augment, judge, evaluate.

Exit codes: 0 success, 1 operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from logicerr import __version__
from logicerr.aoj import AojClient, AojConfig, ingest_aoj, merge_submissions
from logicerr.config import RunConfig, load_config
from logicerr.dataset import Dataset, Outcome, distribution, load, store
from logicerr.errors import (
    ConfigurationError,
    EvaluationError,
    InvalidArgument,
    LogicErrError,
    PreconditionError,
)
from logicerr.evaluate import FORMATS, FPR_MODES, augmentation_table, evaluate, render_report
from logicerr.judge import Status, judge, judge_many
from logicerr.llm import ChatClient, ExchangeLog
from logicerr.pipeline import (
    RESULTS_FILE,
    PromptKit,
    augment,
    categorize,
    classify_many,
    load_results,
    needs_classification,
    plan_augmentations,
    store_results,
    write_manifest,
)
from logicerr.plotting import plot_augmentation, plot_classification
from logicerr.taxonomy import TYPE_IDS

logger = logging.getLogger("logicerr")

STATUS_CHOICES = {
    "all": None,
    "accepted": Status.ACCEPTED,
    "wrong-answer": Status.WRONG_ANSWER,
    "compile-error": Status.COMPILE_ERROR,
    "runtime-error": Status.RUNTIME_ERROR,
    "time-limit": Status.TIME_LIMIT,
}
REPORT_SUFFIX = {"text": "txt", "csv": "csv", "json": "json"}


# --- shared plumbing -------------------------------------------------------------

def make_aoj_client(config: AojConfig) -> AojClient:
    return AojClient(config)


def _config(args, *, require_dataset: bool = True) -> RunConfig:
    overrides = {
        "dataset_dir": args.dataset_dir,
        "parallelism": args.parallelism,
        "model_id": args.model,
        "endpoint_base": args.api_base,
        "fpr_mode": getattr(args, "fpr_mode", None),
    }
    if getattr(args, "mock", None):
        overrides["transport"] = "mock"
        overrides["fixture_path"] = str(Path(args.mock).resolve())
    cfg = load_config(args.config, overrides=overrides)
    cfg.check_paths(require_dataset=require_dataset)
    return cfg


def _kit(cfg: RunConfig) -> PromptKit:
    return PromptKit.load(cfg.taxonomy_file, cfg.template_dir, cfg.fewshot_file)


def _client(cfg: RunConfig) -> ChatClient:
    log = None if cfg.model.transport == "mock" else ExchangeLog(cfg.exchange_log_path())
    return ChatClient(cfg.model, log=log)


def _manifest(cfg: RunConfig, args, sample_ids, started) -> None:
    snapshot = {**cfg.snapshot(), "argv": list(args.argv)}
    path = write_manifest(cfg.dataset_dir / "runs", args.command, snapshot, sample_ids, started)
    logger.info("run manifest written to %s", path)


def _results_path(cfg: RunConfig) -> Path:
    return cfg.dataset_dir / RESULTS_FILE


def _merge_results(cfg: RunConfig, results) -> None:
    merged = {r.sample_ref: r for r in load_results(_results_path(cfg))}
    merged.update({r.sample_ref: r for r in results})
    store_results(_results_path(cfg), merged.values())


# --- ingest ----------------------------------------------------------------------

def cmd_ingest(args) -> int:
    started = datetime.now(timezone.utc)
    cfg = _config(args, require_dataset=False)
    cfg.dataset_dir.mkdir(parents=True, exist_ok=True)
    problem_ids = list(args.problem or [])
    for course in args.course or []:
        problem_ids += cfg.aoj.course_problems(course)
    if not problem_ids:
        raise InvalidArgument("nothing to ingest: give --course or --problem")
    ds = load(cfg.dataset_dir)
    known = {s.provenance.submission_id for s in ds.samples.values() if s.provenance.submission_id}
    client = make_aoj_client(cfg.aoj)
    try:
        subs = ingest_aoj(problem_ids, client, status=STATUS_CHOICES[args.status], known_ids=known)
        course = args.course[0] if args.course and len(args.course) == 1 else ""
        added = merge_submissions(ds, subs, client, course)
    finally:
        client.close()
    store(ds, cfg.dataset_dir)

    print(f"{added} new submissions ({len(ds.samples)} in dataset)")
    statuses = Counter(s.status for s in ds.samples.values())
    print("status: " + " ".join(f"{k or '-'}={v}" for k, v in sorted(statuses.items())))
    manifest = distribution(ds)
    print("labels: " + " ".join(f"{t}={manifest.counts_by_type[t]}" for t in TYPE_IDS) + f" total={manifest.total}")
    _manifest(cfg, args, [s.id for s in ds.samples.values()], started)
    return 0


# --- classify --------------------------------------------------------------------

def _select_samples(ds: Dataset, args) -> list:
    if args.all:
        chosen = [s for s in ds.samples.values() if not s.is_accepted_source]
    elif args.labeled:
        chosen = ds.evaluation_samples()
    else:
        chosen = []
        for sid in args.sample:
            if sid in ds.samples:
                chosen.append(ds.samples[sid])
            else:
                print(f"warning: no sample {sid}", file=sys.stderr)
    return sorted(chosen, key=lambda s: s.id)


def cmd_classify(args) -> int:
    started = datetime.now(timezone.utc)
    cfg = _config(args)
    ds = load(cfg.dataset_dir)
    samples = _select_samples(ds, args)
    if not samples:
        print("0 samples matched; nothing to classify")
        return 0
    kit = _kit(cfg)
    client = _client(cfg)
    try:
        items = [(s.id, ds.problems[s.problem_ref].statement, s.source_code) for s in samples]
        results = classify_many(items, client, kit, cfg.parallelism)
    finally:
        client.close()
    _merge_results(cfg, results)
    for r in results:
        note = f" (partial: {','.join(sorted(r.errors))} failed)" if r.partial else ""
        print(f"{r.sample_ref}: dominant={r.dominant or 'none'}{note}")
    unparseable = sum(r.unparseable_count for r in results)
    print(f"{len(results)} samples classified; {unparseable} unparseable verdicts")
    _manifest(cfg, args, [s.id for s in samples], started)
    return 0


# --- augment ---------------------------------------------------------------------

def _next_index(ds: Dataset, target: str) -> int:
    prefix = f"aug-{target}-"
    used = [int(a.id[len(prefix):]) for a in ds.augmented.values()
            if a.id.startswith(prefix) and a.id[len(prefix):].isdigit()]
    return max(used, default=0) + 1


def cmd_augment(args) -> int:
    started = datetime.now(timezone.utc)
    cfg = _config(args)
    ds = load(cfg.dataset_dir)
    quotas = {args.target: args.count} if args.target else dict(cfg.quotas)
    if not any(quotas.values()):
        raise ConfigurationError("no augmentation quotas: pass --target/--count or set [quotas] in the config")
    sources = ds.accepted_sources()
    if args.source:
        sources = [s for s in sources if s.id in set(args.source)]
    if not sources:
        raise PreconditionError("no Accepted source samples to augment")
    remarks_for = {s.id: args.remarks or ds.problems[s.problem_ref].remarks for s in sources}
    missing = sorted(sid for sid, text in remarks_for.items() if not text.strip())
    if missing:
        raise ConfigurationError(f"no augmentation remarks for sources {', '.join(missing)}; pass --remarks")
    plan = plan_augmentations(sources, quotas, remarks_for)

    jobs = []
    counters = {t: _next_index(ds, t) for t in TYPE_IDS}
    for source, target in plan:
        jobs.append((f"aug-{target}-{counters[target]:04d}", source, target))
        counters[target] += 1

    kit = _kit(cfg)
    client = _client(cfg)

    def run(job):
        aug_id, source, target = job
        problem = ds.problems[source.problem_ref].statement
        return augment(aug_id, source, problem, target, remarks_for[source.id], client, kit)

    try:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            produced = list(pool.map(run, jobs))
    finally:
        client.close()
    for aug in produced:
        ds.add_augmented(aug)
    store(ds, cfg.dataset_dir)

    for t in TYPE_IDS:
        mine = [a for a in produced if a.target_type == t]
        if mine:
            failed = sum(a.failed for a in mine)
            identical = sum(a.evidence.identical_to_source for a in mine)
            print(f"target {t}: {len(mine)} attempts recorded ({failed} failed, {identical} identical to source)")
    print(f"{len(produced)} augmentation attempts recorded")
    _manifest(cfg, args, [a.id for a in produced], started)
    return 0


# --- judge -----------------------------------------------------------------------

def _profile(cfg: RunConfig, name: str):
    try:
        return cfg.toolchains[name]
    except KeyError:
        raise ConfigurationError(f"unknown toolchain profile {name!r}; known: {', '.join(sorted(cfg.toolchains))}") from None


def _tests_for(ds: Dataset, problem_id: str):
    tests = ds.problems[problem_id].io_examples
    if not tests:
        raise PreconditionError(f"problem {problem_id} has no test cases (expected tests/{problem_id}/NN.in/.out)")
    return tests


def cmd_judge(args) -> int:
    started = datetime.now(timezone.utc)
    cfg = _config(args)
    ds = load(cfg.dataset_dir)
    profile = _profile(cfg, args.profile)

    if args.code:
        if not args.problem or args.problem not in ds.problems:
            raise InvalidArgument("--code needs --problem naming a problem in the dataset")
        verdict = judge(Path(args.code).read_text(encoding="utf-8"), profile, _tests_for(ds, args.problem))
        print(verdict.value.value)
        if verdict.detail:
            print(verdict.detail)
        return 0

    todo = [a for a in sorted(ds.augmented.values(), key=lambda a: a.id)
            if not a.failed and (args.rejudge or a.outcome is Outcome.UNRESOLVED)]
    if not todo:
        print("0 augmented samples to judge")
        return 0
    jobs = []
    for aug in todo:
        source = ds.samples[aug.source_ref]
        jobs.append((aug.generated_code, profile, _tests_for(ds, source.problem_ref)))
    verdicts = judge_many(jobs, cfg.parallelism)

    to_classify = [
        (aug.id, ds.problems[ds.samples[aug.source_ref].problem_ref].statement, aug.generated_code)
        for aug, v in zip(todo, verdicts) if needs_classification(aug, v.value)
    ]
    classifications = {}
    if to_classify:
        kit = _kit(cfg)
        client = _client(cfg)
        try:
            results = classify_many(to_classify, client, kit, cfg.parallelism)
        finally:
            client.close()
        _merge_results(cfg, results)
        classifications = {r.sample_ref: r for r in results}

    for aug, verdict in zip(todo, verdicts):
        done = categorize(aug, verdict, classifications.get(aug.id))
        ds.add_augmented(done)
        print(f"{aug.id}: {verdict.value.value} -> {done.outcome.value}")
    store(ds, cfg.dataset_dir)
    _manifest(cfg, args, [a.id for a in todo], started)
    return 0


# --- evaluate --------------------------------------------------------------------

def _write(out_dir: Path | None, name: str, text: str) -> None:
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text, encoding="utf-8")


def cmd_evaluate(args) -> int:
    started = datetime.now(timezone.utc)
    cfg = _config(args)
    ds = load(cfg.dataset_dir)
    kit_tax = _kit(cfg).taxonomy
    out_dir = Path(args.out) if args.out else None
    suffix = REPORT_SUFFIX[args.format]
    evaluated = []

    labeled = {s.id for s in ds.evaluation_samples()}
    results = [r for r in load_results(_results_path(cfg)) if r.sample_ref in labeled]
    unclassified = sorted(labeled - {r.sample_ref for r in results})
    if unclassified:
        print(f"warning: {len(unclassified)} labelled samples have no classification: {', '.join(unclassified)}",
              file=sys.stderr)
    if results:
        snapshot = f"model={cfg.model.model_id} temperature={cfg.model.temperature} fpr_mode={cfg.fpr_mode}"
        report = evaluate(results, ds, cfg.fpr_mode, config_snapshot=snapshot, verbose=args.verbose)
        text = render_report(report, args.format, kit_tax)
        sys.stdout.write(text)
        _write(out_dir, f"classification.{suffix}", text)
        if out_dir is not None:
            plot_classification(report, out_dir / "classification.png", kit_tax)
        evaluated += [r.sample_ref for r in results]

    augmented = list(ds.augmented.values())
    if augmented:
        unresolved = sorted(a.id for a in augmented if not a.failed and a.outcome is Outcome.UNRESOLVED)
        if unresolved:
            raise EvaluationError(f"{len(unresolved)} unresolved augmentations (run `logicerr judge --augmented`): "
                                  f"{', '.join(unresolved)}")
        report = augmentation_table(augmented)
        text = render_report(report, args.format, kit_tax)
        if results:
            sys.stdout.write("\n")
        sys.stdout.write(text)
        _write(out_dir, f"augmentation.{suffix}", text)
        if out_dir is not None:
            plot_augmentation(report, out_dir / "augmentation.png", kit_tax)
        evaluated += [a.id for a in augmented]

    if not evaluated:
        print("nothing to evaluate: no classifications of labelled samples and no augmentations")
    _manifest(cfg, args, evaluated, started)
    return 0


# --- argument parsing ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (default: $LOGICERR_CONFIG or ./logicerr.toml)")
    common.add_argument("--dataset-dir", help="dataset directory (overrides the config file)")
    common.add_argument("--parallelism", type=int, help="samples processed concurrently")
    common.add_argument("--model", help="model id for chat completions")
    common.add_argument("--api-base", help="OpenAI-compatible endpoint base URL")
    common.add_argument("-v", "--verbose", action="store_true", help="more logging; evaluate also reports both FPR modes")

    parser = argparse.ArgumentParser(prog="logicerr", description="Classify and augment logical errors in student code.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ingest", parents=[common], help="fetch judge submissions into the dataset")
    p.add_argument("--course", action="append", help="course id, e.g. ITP1 (repeatable)")
    p.add_argument("--problem", action="append", help="problem id (repeatable)")
    p.add_argument("--status", choices=sorted(STATUS_CHOICES), default="all", help="keep only this verdict")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("classify", parents=[common], help="run the ten-prompt classifier over samples")
    sel = p.add_mutually_exclusive_group(required=True)
    sel.add_argument("--all", action="store_true", help="every sample that is not an Accepted source")
    sel.add_argument("--labeled", action="store_true", help="every sample with at least one label")
    sel.add_argument("--sample", action="append", help="sample id (repeatable)")
    p.add_argument("--mock", metavar="FIXTURES", help="answer prompts from a recorded fixture file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("augment", parents=[common], help="generate code with a targeted logical error")
    p.add_argument("--target", choices=TYPE_IDS, help="error type to inject (default: config quotas)")
    p.add_argument("--count", type=int, default=1, help="attempts for --target (default 1)")
    p.add_argument("--remarks", help="feasible error kinds to tell the model (default: the problem's remarks)")
    p.add_argument("--source", action="append", help="restrict to this Accepted sample id (repeatable)")
    p.add_argument("--mock", metavar="FIXTURES", help="answer prompts from a recorded fixture file")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("judge", parents=[common], help="compile and run code against problem tests")
    what = p.add_mutually_exclusive_group(required=True)
    what.add_argument("--augmented", action="store_true", help="judge and categorize unresolved augmentations")
    what.add_argument("--code", metavar="FILE", help="judge a single source file (needs --problem)")
    p.add_argument("--problem", help="problem id for --code")
    p.add_argument("--profile", default="cpp17", help="toolchain profile (default cpp17)")
    p.add_argument("--rejudge", action="store_true", help="also re-judge already categorized augmentations")
    p.add_argument("--mock", metavar="FIXTURES", help="classifier answers from a recorded fixture file")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("evaluate", parents=[common], help="accuracy/FPR and augmentation outcome reports")
    p.add_argument("--fpr-mode", choices=FPR_MODES, help="FPR denominator (default from config: negatives)")
    p.add_argument("--format", choices=FORMATS, default="text", help="report format on stdout and in --out")
    p.add_argument("--out", metavar="DIR", help="also write report files and PNG figures here")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    if args.parallelism is not None and args.parallelism < 1:
        parser.error("--parallelism must be >= 1")
    if getattr(args, "count", 1) < 0:
        parser.error("--count must be >= 0")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (LogicErrError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
