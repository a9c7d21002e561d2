"""Run configuration: a TOML file, overridden by env vars, overridden by flags.

Relative paths in the file are resolved against the file's directory.
Example ``logicerr.toml``::

    dataset_dir = "data"
    parallelism = 4
    fpr_mode = "negatives"

    [model]
    model_id = "gpt-4"
    max_in_flight = 8

    [quotas]
    A = 10
    B = 13

    [toolchains.cpp17]
    compile_command = "g++ -std=gnu++17 -O2 -o {out} {src}"
    run_command = "{out}"
    source_name = "main.cpp"
    time_limit = 2.0

    [aoj]
    cache_dir = "aoj-cache"
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from logicerr.aoj import AojConfig, map_status
from logicerr.errors import ConfigurationError
from logicerr.evaluate import FPR_MODES
from logicerr.judge import DEFAULT_PROFILES, Status, ToolchainProfile
from logicerr.llm import API_BASE_ENV, ModelConfig
from logicerr.taxonomy import TYPE_IDS

CONFIG_ENV = "LOGICERR_CONFIG"
DEFAULT_CONFIG_NAME = "logicerr.toml"

_MODEL_KEYS = {"model_id", "temperature", "max_output_tokens", "endpoint_base", "timeout",
               "max_attempts", "backoff", "max_in_flight"}
_TOP_KEYS = {"dataset_dir", "template_dir", "taxonomy_file", "fewshot_file", "parallelism", "fpr_mode",
             "exchange_log", "model", "quotas", "toolchains", "aoj"}


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    dataset_dir: Path = Path("data")
    template_dir: Path | None = None
    taxonomy_file: Path | None = None
    fewshot_file: Path | None = None
    parallelism: int = 1
    fpr_mode: str = "negatives"
    quotas: Mapping[str, int] = field(default_factory=dict)
    toolchains: Mapping[str, ToolchainProfile] = field(default_factory=lambda: dict(DEFAULT_PROFILES))
    aoj: AojConfig = field(default_factory=AojConfig)
    exchange_log: Path | None = None
    source: str = "defaults"

    def __post_init__(self):
        if self.parallelism < 1:
            raise ConfigurationError("parallelism must be >= 1")
        if self.fpr_mode not in FPR_MODES:
            raise ConfigurationError(f"fpr_mode must be one of {', '.join(FPR_MODES)}, got {self.fpr_mode!r}")
        for t, n in self.quotas.items():
            if t not in TYPE_IDS:
                raise ConfigurationError(f"quota for unknown error type {t!r}")
            if not isinstance(n, int) or n < 0:
                raise ConfigurationError(f"quota for {t} must be a non-negative integer")

    def check_paths(self, *, require_dataset: bool = True) -> None:
        for name in ("template_dir", "taxonomy_file", "fewshot_file"):
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise ConfigurationError(f"{name} {value} does not exist")
        if require_dataset and not self.dataset_dir.is_dir():
            raise ConfigurationError(f"dataset_dir {self.dataset_dir} does not exist")

    def exchange_log_path(self) -> Path:
        return self.exchange_log or self.dataset_dir / "exchanges.jsonl"

    def snapshot(self) -> dict:
        """Plain, secret-free view of the configuration for run manifests."""
        return {
            "config_source": self.source,
            "model": {k: getattr(self.model, k) for k in sorted(_MODEL_KEYS | {"transport", "fixture_path"})},
            "dataset_dir": str(self.dataset_dir),
            "template_dir": str(self.template_dir) if self.template_dir else None,
            "taxonomy_file": str(self.taxonomy_file) if self.taxonomy_file else None,
            "fewshot_file": str(self.fewshot_file) if self.fewshot_file else None,
            "parallelism": self.parallelism,
            "fpr_mode": self.fpr_mode,
            "quotas": dict(sorted(self.quotas.items())),
            "toolchains": {k: dataclasses.asdict(v) for k, v in sorted(self.toolchains.items())},
        }


def _path(value, base: Path) -> Path | None:
    if value in (None, ""):
        return None
    p = Path(os.path.expanduser(str(value)))
    return p if p.is_absolute() else base / p


def _toolchains(raw: Mapping[str, Any]) -> dict[str, ToolchainProfile]:
    out = dict(DEFAULT_PROFILES)
    fields = {f.name for f in dataclasses.fields(ToolchainProfile)} - {"language_id"}
    for name, spec in raw.items():
        if not isinstance(spec, dict):
            raise ConfigurationError(f"toolchains.{name} must be a table")
        unknown = set(spec) - fields
        if unknown:
            raise ConfigurationError(f"toolchains.{name}: unknown keys {sorted(unknown)}")
        base = dataclasses.asdict(out[name]) if name in out else {}
        base.update(spec)
        base["language_id"] = name
        if "run_command" not in base:
            raise ConfigurationError(f"toolchains.{name} needs run_command")
        out[name] = ToolchainProfile(**base)
    return out


def _aoj(raw: Mapping[str, Any], base: Path) -> AojConfig:
    raw = dict(raw)
    fields = {f.name for f in dataclasses.fields(AojConfig)}
    unknown = set(raw) - fields
    if unknown:
        raise ConfigurationError(f"aoj: unknown keys {sorted(unknown)}")
    if "cache_dir" in raw:
        raw["cache_dir"] = str(_path(raw["cache_dir"], base)) if raw["cache_dir"] else None
    if "status_map" in raw:
        mapping = {}
        for code, name in raw["status_map"].items():
            status = map_status(name, {})
            if status is Status.UNKNOWN:
                raise ConfigurationError(f"aoj.status_map[{code!r}]: unknown status {name!r}")
            mapping[str(code)] = status
        raw["status_map"] = {**AojConfig().status_map, **mapping}
    return AojConfig(**raw)


def read_config_file(path: Path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"{path}: {e}") from e
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e.strerror}") from e


def load_config(
    path: str | os.PathLike | None = None,
    *,
    env: Mapping[str, str] | None = None,
    overrides: Mapping[str, Any] | None = None,
    cwd: str | os.PathLike | None = None,
) -> RunConfig:
    """Build a RunConfig with precedence flags (``overrides``) > env > file > defaults.

    ``path`` comes from a --config flag; otherwise ``LOGICERR_CONFIG``; otherwise
    ``./logicerr.toml`` if present.  An explicitly named file must exist.
    """
    env = os.environ if env is None else env
    cwd = Path(cwd) if cwd is not None else Path.cwd()
    explicit = path or env.get(CONFIG_ENV)
    if explicit:
        cfg_path = _path(explicit, cwd)
        if not cfg_path.is_file():
            raise ConfigurationError(f"config file {cfg_path} not found")
    else:
        cfg_path = cwd / DEFAULT_CONFIG_NAME
        if not cfg_path.is_file():
            cfg_path = None
    raw = read_config_file(cfg_path) if cfg_path else {}
    base = cfg_path.parent if cfg_path else cwd

    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
    model_raw = dict(raw.get("model", {}))
    bad = set(model_raw) - _MODEL_KEYS
    if bad:
        raise ConfigurationError(f"model: unknown keys {sorted(bad)}")

    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if env.get(API_BASE_ENV):
        model_raw["endpoint_base"] = env[API_BASE_ENV]
    for key in ("model_id", "endpoint_base", "transport", "fixture_path", "max_in_flight"):
        if key in overrides:
            model_raw[key] = overrides[key]

    try:
        model = ModelConfig(**model_raw)
    except TypeError as e:
        raise ConfigurationError(f"model: {e}") from e

    def pick(key, default=None):
        return overrides.get(key, raw.get(key, default))

    dataset_dir = overrides.get("dataset_dir")
    dataset_dir = _path(dataset_dir, cwd) if dataset_dir else _path(raw.get("dataset_dir", "data"), base)
    return RunConfig(
        model=model,
        dataset_dir=dataset_dir,
        template_dir=_path(raw.get("template_dir"), base),
        taxonomy_file=_path(raw.get("taxonomy_file"), base),
        fewshot_file=_path(raw.get("fewshot_file"), base),
        parallelism=int(pick("parallelism", 1)),
        fpr_mode=pick("fpr_mode", "negatives"),
        quotas=dict(raw.get("quotas", {})),
        toolchains=_toolchains(raw.get("toolchains", {})),
        aoj=_aoj(raw.get("aoj", {}), base),
        exchange_log=_path(raw.get("exchange_log"), base),
        source=str(cfg_path) if cfg_path else "defaults",
    )
