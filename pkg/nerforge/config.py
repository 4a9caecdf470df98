import hashlib
import json
import os
from typing import Any

from nerforge import constants
from nerforge.errors import ConfigError
from nerforge.simple_logging import LEVELS, eprint

workspace = os.path.dirname(os.path.realpath(__file__))

bundled_labelmap_path = os.path.join(workspace, "benchmark", "labelmaps.json")

prompt_variants = ["type", "definition"]
template_variants = ["per-type", "all-in-one", "definition"]
negative_strategies = ["none", "uniform", "frequency"]
benchmark_formats = ["conll", "spans"]


class ChunkConfig:
    def __init__(
        self,
        max_tokens: int = constants.max_tokens_per_passage,
        sample_size: int = constants.passage_sample_size,
        seed: int = constants.default_seed,
    ) -> None:
        self.max_tokens = max_tokens
        self.sample_size = sample_size
        self.seed = seed
        self.validate()

    def validate(self) -> None:
        if self.max_tokens < 1:
            raise ConfigError("chunk.max_tokens must be at least 1")
        if self.sample_size < 0:
            raise ConfigError("chunk.sample_size must not be negative")

    def to_dict(self) -> dict[str, Any]:
        return {"max_tokens": self.max_tokens, "sample_size": self.sample_size, "seed": self.seed}


class GatewayConfig:
    def __init__(
        self,
        endpoint: str = "https://api.openai.com/v1",
        model: str = "gpt-3.5-turbo-0301",
        max_concurrency: int = 4,
        retry_limit: int = 3,
        timeout: float = 60.0,
        retry_max_wait: float = 30.0,
        variant: str = "type",
    ) -> None:
        self.endpoint = endpoint
        self.model = model
        self.max_concurrency = max_concurrency
        self.retry_limit = retry_limit
        self.timeout = timeout
        self.retry_max_wait = retry_max_wait
        self.variant = variant
        self.validate()

    def validate(self) -> None:
        if self.max_concurrency < 1:
            raise ConfigError("gateway.max_concurrency must be at least 1")
        if self.retry_limit < 0:
            raise ConfigError("gateway.retry_limit must not be negative")
        if self.timeout <= 0:
            raise ConfigError("gateway.timeout must be positive")
        if self.variant not in prompt_variants:
            raise ConfigError("gateway.variant must be one of " + ", ".join(prompt_variants))

    def to_dict(self) -> dict[str, Any]:
        return {
            "endpoint": self.endpoint,
            "model": self.model,
            "max_concurrency": self.max_concurrency,
            "retry_limit": self.retry_limit,
            "timeout": self.timeout,
            "retry_max_wait": self.retry_max_wait,
            "variant": self.variant,
        }


class BuildConfig:
    def __init__(
        self,
        variant: str = "per-type",
        negatives: str = "frequency",
        negatives_per_example: int = constants.negatives_per_example,
        dataset_field: bool = False,
        dataset: str | None = None,
        supervised: bool = False,
    ) -> None:
        self.variant = variant
        self.negatives = negatives
        self.negatives_per_example = negatives_per_example
        self.dataset_field = dataset_field
        self.dataset = dataset
        self.supervised = supervised
        self.validate()

    def validate(self) -> None:
        if self.variant not in template_variants:
            raise ConfigError("build.variant must be one of " + ", ".join(template_variants))
        if self.negatives not in negative_strategies:
            raise ConfigError("build.negatives must be one of " + ", ".join(negative_strategies))
        if self.negatives_per_example < 0:
            raise ConfigError("build.negatives_per_example must not be negative")
        if self.dataset_field and not self.supervised and not self.dataset:
            raise ConfigError("build.dataset is required when build.dataset_field is set")

    def to_dict(self) -> dict[str, Any]:
        return {
            "variant": self.variant,
            "negatives": self.negatives,
            "negatives_per_example": self.negatives_per_example,
            "dataset_field": self.dataset_field,
            "dataset": self.dataset,
            "supervised": self.supervised,
        }


class BenchmarkConfig:
    def __init__(
        self,
        input_format: str = "conll",
        dataset: str = "",
        domain: str = "general",
        labelmap: str = bundled_labelmap_path,
        cap: int = constants.max_queries_per_dataset,
    ) -> None:
        self.input_format = input_format
        self.dataset = dataset
        self.domain = domain
        self.labelmap = labelmap
        self.cap = cap
        self.validate()

    def validate(self) -> None:
        if self.input_format not in benchmark_formats:
            raise ConfigError(
                "benchmark.input_format must be one of " + ", ".join(benchmark_formats)
            )
        if self.cap < 1:
            raise ConfigError("benchmark.cap must be at least 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "input_format": self.input_format,
            "dataset": self.dataset,
            "domain": self.domain,
            "labelmap": self.labelmap,
            "cap": self.cap,
        }


class EvalConfig:
    def __init__(self, partial: bool = False) -> None:
        self.partial = partial

    def validate(self) -> None:
        pass

    def to_dict(self) -> dict[str, Any]:
        return {"partial": self.partial}


class ArtifactPaths:
    def __init__(self) -> None:
        self.directory = "."
        self.corpus = "corpus"
        self.raw_benchmark = "raw_benchmark.conll"
        self.passages = "passages.jsonl"
        self.annotations = "annotations.jsonl"
        self.stats = "stats.json"
        self.conversations = "conversations.jsonl"
        self.benchmark = "benchmark.jsonl"
        self.predictions = "predictions.jsonl"
        self.report = "report.json"

    def resolve(self, name: str) -> str:
        return os.path.join(self.directory, getattr(self, name))

    def validate(self) -> None:
        names = [name for name in self.to_dict() if name != "directory"]
        resolved: dict[str, str] = {}
        for name in names:
            path = os.path.normpath(os.path.abspath(self.resolve(name)))
            if path in resolved:
                raise ConfigError(f"paths.{name} and paths.{resolved[path]} refer to the same file")
            resolved[path] = name

    def to_dict(self) -> dict[str, Any]:
        return {
            "directory": self.directory,
            "corpus": self.corpus,
            "raw_benchmark": self.raw_benchmark,
            "passages": self.passages,
            "annotations": self.annotations,
            "stats": self.stats,
            "conversations": self.conversations,
            "benchmark": self.benchmark,
            "predictions": self.predictions,
            "report": self.report,
        }


class PipelineConfig:
    def __init__(self) -> None:
        self.seed = constants.default_seed
        self.log_level = "info"
        self.chunk = ChunkConfig()
        self.gateway = GatewayConfig()
        self.build = BuildConfig()
        self.benchmark = BenchmarkConfig()
        self.evaluation = EvalConfig()
        self.paths = ArtifactPaths()

    def sections(self) -> dict[str, Any]:
        return {
            "chunk": self.chunk,
            "gateway": self.gateway,
            "build": self.build,
            "benchmark": self.benchmark,
            "evaluation": self.evaluation,
            "paths": self.paths,
        }

    def validate(self) -> None:
        if self.log_level not in LEVELS:
            raise ConfigError("log_level must be one of " + ", ".join(LEVELS))
        for section in self.sections().values():
            section.validate()
        # A single seed drives every seeded stage
        self.chunk.seed = self.seed

    def to_dict(self) -> dict[str, Any]:
        result: dict[str, Any] = {"seed": self.seed, "log_level": self.log_level}
        for name, section in self.sections().items():
            result[name] = section.to_dict()
        return result

    def to_json_string(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def _hashed_values(self) -> dict[str, Any]:
        """Settings which change artifacts, without the location of the run or the install."""
        values = self.to_dict()
        del values["log_level"]
        directory = os.path.abspath(self.paths.directory)
        values["paths"] = {
            name: _relative_path(os.path.join(directory, path), directory)
            for name, path in values["paths"].items()
            if name != "directory"
        }
        labelmap = self.benchmark.labelmap
        if os.path.realpath(labelmap) == os.path.realpath(bundled_labelmap_path):
            values["benchmark"]["labelmap"] = "bundled"
        else:
            values["benchmark"]["labelmap"] = _relative_path(labelmap, directory)
        return values

    def config_hash(self) -> str:
        canonical = json.dumps(self._hashed_values(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _relative_path(path: str, directory: str) -> str:
    return os.path.relpath(os.path.abspath(path), directory).replace(os.sep, "/")


def _assign(target: Any, key: str, value: Any, qualified_name: str) -> None:
    if not hasattr(target, key) or key.startswith("_"):
        raise ConfigError("Unknown config key " + qualified_name)
    current = getattr(target, key)
    if current is not None and value is not None:
        if isinstance(current, bool) != isinstance(value, bool):
            raise ConfigError(f"{qualified_name} must be of type {type(current).__name__}")
        if isinstance(current, float) and isinstance(value, int):
            value = float(value)
        elif not isinstance(value, type(current)):
            raise ConfigError(f"{qualified_name} must be of type {type(current).__name__}")
    setattr(target, key, value)


def _apply_file_values(config: PipelineConfig, data: dict[str, Any]) -> None:
    sections = config.sections()
    for key, value in data.items():
        if key in sections:
            if not isinstance(value, dict):
                raise ConfigError("Config section " + key + " must be an object")
            for sub_key, sub_value in value.items():
                _assign(sections[key], sub_key, sub_value, key + "." + sub_key)
        else:
            _assign(config, key, value, key)


def _lookup(config: PipelineConfig, dotted_key: str) -> tuple[Any, str]:
    parts = dotted_key.split(".")
    target: Any = config
    for part in parts[:-1]:
        sections = target.sections() if isinstance(target, PipelineConfig) else {}
        if part not in sections:
            raise ConfigError("Unknown config key " + dotted_key)
        target = sections[part]
    return target, parts[-1]


def load_config(path: str | None, overrides: dict[str, Any] | None = None) -> PipelineConfig:
    """
    Precedence is flags > config file > defaults. Overrides use dotted keys,
    e.g. ``{"chunk.max_tokens": 128}``, and None values mean "flag not given".
    """
    config = PipelineConfig()
    file_values: dict[str, Any] = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError("Config file " + path + " does not exist")
        with open(path, encoding="utf-8") as f:
            try:
                file_values = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"Config file {path} is not valid JSON: {e.msg}") from None
        if not isinstance(file_values, dict):
            raise ConfigError("Config file " + path + " must contain a JSON object")
        _apply_file_values(config, file_values)

    for dotted_key, value in (overrides or {}).items():
        if value is None:
            continue
        target, key = _lookup(config, dotted_key)
        previous = getattr(target, key, None)
        _assign(target, key, value, dotted_key)
        if path is not None and _is_set_in_file(file_values, dotted_key) and previous != value:
            eprint(f"Flag overrides config value {dotted_key}: {previous} -> {value}")

    config.validate()
    return config


def _is_set_in_file(file_values: dict[str, Any], dotted_key: str) -> bool:
    current: Any = file_values
    for part in dotted_key.split("."):
        if not isinstance(current, dict) or part not in current:
            return False
        current = current[part]
    return True
