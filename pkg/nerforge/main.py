import argparse
import glob
import os
import shutil
import sys
from collections.abc import Callable
from typing import Any

from nerforge import __version__, constants
from nerforge.annotation.backends import ChatBackend, MockBackend, create_backend
from nerforge.annotation.gateway import annotate, log_annotation_summary
from nerforge.annotation.prompts import PromptVariant
from nerforge.artifacts import (
    find_stale_files,
    read_jsonl,
    require_file,
    write_json,
    write_jsonl,
    write_manifest,
)
from nerforge.benchmark.process import process_benchmark
from nerforge.config import (
    PipelineConfig,
    benchmark_formats,
    load_config,
    negative_strategies,
    prompt_variants,
    template_variants,
    workspace,
)
from nerforge.conversation.ablation import ablation_outputs, run_negative_sampling_ablation
from nerforge.conversation.builder import (
    BuildSummary,
    build_conversations,
    build_supervised_conversations,
)
from nerforge.conversation.negatives import NegativeSamplingStrategy
from nerforge.conversation.templates import TemplateVariant
from nerforge.corpus_sampler import chunk_and_sample
from nerforge.errors import ForgeError, MissingPrerequisite
from nerforge.evaluation.report import evaluate, log_report
from nerforge.model import (
    AnnotatedPassage,
    BenchmarkRecord,
    Passage,
    RawPrediction,
    RecordError,
)
from nerforge.simple_logging import LEVELS, eprint, error_print, set_log_level, warn_print
from nerforge.typeset_stats import (
    TypeFrequencyTable,
    bucket_report,
    load_frequency_table,
    log_bucket_report,
    stats_document,
)

demo_fixtures = os.path.join(workspace, "fixtures", "demo")


def _corpus_inputs(path: str) -> list[str]:
    if os.path.isdir(path):
        return sorted(glob.glob(os.path.join(path, "**", "*.txt"), recursive=True))
    require_file(path)
    return [path]


def chunk_stage(config: PipelineConfig) -> str:
    corpus = config.paths.resolve("corpus")
    if not os.path.exists(corpus):
        raise MissingPrerequisite(corpus + " does not exist, it must contain the input articles")
    output = config.paths.resolve("passages")
    passages = chunk_and_sample(corpus, config.chunk)
    write_jsonl(output, passages)
    write_manifest(output, "chunk", config.config_hash(), _corpus_inputs(corpus))
    return output


def _mock_fixture_path(config: PipelineConfig) -> str | None:
    """Relative mock fixture files are looked up in the artifact directory."""
    endpoint = config.gateway.endpoint
    if not endpoint.startswith(constants.mock_endpoint_prefix):
        return None
    path = endpoint[len(constants.mock_endpoint_prefix) :]
    if os.path.isabs(path):
        return path
    return os.path.join(config.paths.directory, path)


def annotate_stage(config: PipelineConfig) -> str:
    passages_path = config.paths.resolve("passages")
    passages = list(read_jsonl(passages_path, Passage))
    inputs = [passages_path]
    fixture_path = _mock_fixture_path(config)
    backend: ChatBackend
    if fixture_path is not None:
        backend = MockBackend.from_file(fixture_path)
        inputs.append(fixture_path)
    else:
        backend = create_backend(config.gateway)
    output = config.paths.resolve("annotations")
    variant = PromptVariant(config.gateway.variant)
    records = list(annotate(passages, variant, config.gateway, backend))
    log_annotation_summary(records)
    write_jsonl(output, records)
    write_manifest(output, "annotate", config.config_hash(), inputs)
    return output


def stats_stage(config: PipelineConfig) -> str:
    annotations_path = config.paths.resolve("annotations")
    records = list(read_jsonl(annotations_path, AnnotatedPassage))
    document = stats_document(records)
    output = config.paths.resolve("stats")
    write_json(output, document)
    write_manifest(output, "stats", config.config_hash(), [annotations_path])
    statistics = document["statistics"]
    eprint(
        f"{statistics['pairs']} usable passages with {statistics['entities']} entities "
        + f"of {statistics['distinct_types']} types"
    )
    if statistics["distinct_types"] > 0:
        log_bucket_report(bucket_report(load_frequency_table(output)))
    return output


def _gold_type_counts(records: list[BenchmarkRecord]) -> TypeFrequencyTable:
    table = TypeFrequencyTable()
    for record in records:
        for entity_type, _ in record.gold:
            table.add(entity_type)
    return table


def build_stage(config: PipelineConfig) -> str:
    cfg = config.build
    variant = TemplateVariant(cfg.variant)
    output = config.paths.resolve("conversations")
    summary = BuildSummary()
    if cfg.supervised:
        benchmark_path = config.paths.resolve("benchmark")
        records = list(read_jsonl(benchmark_path, BenchmarkRecord))
        neg = NegativeSamplingStrategy.from_config(cfg, _gold_type_counts(records), config.seed)
        conversations = build_supervised_conversations(
            records, variant, neg, cfg.dataset_field, summary
        )
        inputs = [benchmark_path]
    else:
        annotations_path = config.paths.resolve("annotations")
        require_file(annotations_path)
        inputs = [annotations_path]
        vocabulary = None
        if cfg.negatives != "none":
            stats_path = config.paths.resolve("stats")
            vocabulary = load_frequency_table(stats_path)
            inputs.append(stats_path)
        neg = NegativeSamplingStrategy.from_config(cfg, vocabulary, config.seed)
        dataset = cfg.dataset if cfg.dataset_field else None
        annotations = read_jsonl(annotations_path, AnnotatedPassage)
        conversations = build_conversations(annotations, variant, neg, dataset, summary)
    eprint("Building", variant.value, "conversations with negatives", neg)
    write_jsonl(output, conversations)
    summary.log()
    write_manifest(output, "build", config.config_hash(), inputs)
    return output


def process_stage(config: PipelineConfig) -> str:
    raw_path = config.paths.resolve("raw_benchmark")
    require_file(raw_path)
    records = process_benchmark(raw_path, config.benchmark, config.seed)
    output = config.paths.resolve("benchmark")
    write_jsonl(output, records)
    inputs = [raw_path]
    if os.path.isfile(config.benchmark.labelmap):
        inputs.append(config.benchmark.labelmap)
    write_manifest(output, "process", config.config_hash(), inputs)
    return output


def eval_stage(config: PipelineConfig) -> str:
    benchmark_path = config.paths.resolve("benchmark")
    predictions_path = config.paths.resolve("predictions")
    require_file(benchmark_path)
    require_file(predictions_path)
    report = evaluate(
        read_jsonl(benchmark_path, BenchmarkRecord), read_jsonl(predictions_path, RawPrediction)
    )
    output = config.paths.resolve("report")
    write_json(output, report.to_dict())
    write_manifest(output, "eval", config.config_hash(), [benchmark_path, predictions_path])
    log_report(report, config.evaluation.partial)
    return output


def ablate_stage(config: PipelineConfig) -> str:
    annotations_path = config.paths.resolve("annotations")
    records = list(read_jsonl(annotations_path, AnnotatedPassage))
    stats_path = config.paths.resolve("stats")
    vocabulary = load_frequency_table(stats_path)
    directory = os.path.join(config.paths.directory, "ablation")
    dataset = config.build.dataset if config.build.dataset_field else None
    run_negative_sampling_ablation(
        records,
        vocabulary,
        TemplateVariant(config.build.variant),
        config.build.negatives_per_example,
        config.seed,
        directory,
        dataset,
    )
    for output in ablation_outputs(directory):
        write_manifest(output, "ablate", config.config_hash(), [annotations_path, stats_path])
    return directory


class StaleArtifacts(ForgeError):
    code = "StaleArtifacts"


def verify_stage(config: PipelineConfig) -> str:
    directory = config.paths.directory
    manifests = sorted(
        glob.glob(os.path.join(directory, "**", "*.manifest.json"), recursive=True)
    )
    stale_count = 0
    for manifest in manifests:
        stale = find_stale_files(manifest)
        artifact = manifest[: -len(".manifest.json")]
        for path in stale:
            error_print("stale", artifact + ":", path, "changed or is missing")
        stale_count += int(bool(stale))
    eprint(f"Checked {len(manifests)} manifests, {stale_count} artifacts are stale")
    if stale_count:
        raise StaleArtifacts(f"{stale_count} artifacts in {directory} are out of date")
    return directory


pipeline_stages: dict[str, Callable[[PipelineConfig], str]] = {
    "chunk": chunk_stage,
    "annotate": annotate_stage,
    "stats": stats_stage,
    "build": build_stage,
    "process": process_stage,
    "eval": eval_stage,
    "ablate": ablate_stage,
    "verify": verify_stage,
}


def _copy_demo_fixtures(directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    for name in sorted(os.listdir(demo_fixtures)):
        source = os.path.join(demo_fixtures, name)
        target = os.path.join(directory, name)
        if name == "forge.json":
            continue
        if os.path.isdir(source):
            shutil.copytree(source, target, dirs_exist_ok=True)
        else:
            shutil.copyfile(source, target)


def demo_stage(config: PipelineConfig) -> str:
    """chunk -> annotate (mock backend) -> stats -> build -> process -> eval."""
    _copy_demo_fixtures(config.paths.directory)
    output = config.paths.directory
    for stage in ("chunk", "annotate", "stats", "build", "process", "eval"):
        eprint("=========================================")
        eprint("Stage", stage)
        output = pipeline_stages[stage](config)
    return output


def _error_code(error: Exception) -> str:
    if isinstance(error, ForgeError):
        return error.code
    return type(error).__name__


def run_stage(stage: str, config_path: str | None, overrides: dict[str, Any]) -> int:
    """
    Runs one stage and returns the exit status. Problems the user can fix are
    reported as a single line 'error <Code>: <message>'.
    """
    try:
        config = load_config(config_path, overrides)
        set_log_level(config.log_level)
        if stage == "demo":
            output = demo_stage(config)
        else:
            output = pipeline_stages[stage](config)
    except (ForgeError, RecordError) as e:
        error_print(f"error {_error_code(e)}: {e}")
        return 1
    eprint("Finished", stage, "->", output)
    return 0


def _flag(
    parser: argparse.ArgumentParser, name: str, dest: str, help_text: str, **kwargs: Any
) -> None:
    parser.add_argument(name, dest=dest, default=None, help=help_text, **kwargs)


def _switch(parser: argparse.ArgumentParser, name: str, dest: str, help_text: str) -> None:
    parser.add_argument(name, dest=dest, action="store_const", const=True, help=help_text)


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", default=argparse.SUPPRESS, help="JSON config file, flags take precedence"
    )
    common.add_argument(
        "--seed", type=int, default=argparse.SUPPRESS, help="Seed of every random draw"
    )
    common.add_argument(
        "--log-level", dest="log_level", choices=list(LEVELS), default=argparse.SUPPRESS
    )
    return common


def _create_parser() -> argparse.ArgumentParser:
    common = _common_arguments()
    parser = argparse.ArgumentParser(
        prog="forge",
        description="Builds NER instruction tuning data with an LLM and evaluates NER models",
        parents=[common],
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    subparsers = parser.add_subparsers(dest="stage", required=True)

    chunk = subparsers.add_parser("chunk", parents=[common], help="Chunk and sample articles")
    _flag(chunk, "--input", "paths.corpus", "Directory of .txt files or a JSONL of articles")
    _flag(chunk, "--max-tokens", "chunk.max_tokens", "Maximal tokens per passage", type=int)
    _flag(chunk, "--sample", "chunk.sample_size", "Number of passages to keep", type=int)
    _flag(chunk, "--out", "paths.passages", "Output passages.jsonl")

    annotate_parser = subparsers.add_parser(
        "annotate", parents=[common], help="Annotate passages with an LLM"
    )
    _flag(annotate_parser, "--passages", "paths.passages", "Input passages.jsonl")
    _flag(
        annotate_parser, "--variant", "gateway.variant", "Prompt variant", choices=prompt_variants
    )
    _flag(
        annotate_parser,
        "--endpoint",
        "gateway.endpoint",
        "Chat completions URL or mock:FIXTURES.jsonl, the API key is read from "
        + constants.api_key_environment_variable,
    )
    _flag(annotate_parser, "--model", "gateway.model", "Model name sent to the endpoint")
    _flag(
        annotate_parser, "--concurrency", "gateway.max_concurrency", "Parallel requests", type=int
    )
    _flag(annotate_parser, "--retries", "gateway.retry_limit", "Retries per request", type=int)
    _flag(annotate_parser, "--out", "paths.annotations", "Output annotations.jsonl")

    stats = subparsers.add_parser("stats", parents=[common], help="Entity type statistics")
    _flag(stats, "--annotations", "paths.annotations", "Input annotations.jsonl")
    _flag(stats, "--out", "paths.stats", "Output stats.json")

    build = subparsers.add_parser("build", parents=[common], help="Build conversations")
    _flag(build, "--annotations", "paths.annotations", "Input annotations.jsonl")
    _flag(build, "--variant", "build.variant", "Template variant", choices=template_variants)
    _flag(build, "--neg", "build.negatives", "Negative sampling", choices=negative_strategies)
    _flag(build, "--neg-k", "build.negatives_per_example", "Negatives per example", type=int)
    _flag(build, "--stats", "paths.stats", "Input stats.json, the negative type vocabulary")
    _switch(build, "--dataset-field", "build.dataset_field", "Prefix the text with the dataset")
    _flag(build, "--dataset", "build.dataset", "Dataset name used by --dataset-field")
    _switch(
        build,
        "--supervised",
        "build.supervised",
        "Build from benchmark records instead of annotations",
    )
    _flag(build, "--benchmark", "paths.benchmark", "Input benchmark.jsonl for --supervised")
    _flag(build, "--out", "paths.conversations", "Output conversations.jsonl")

    process = subparsers.add_parser("process", parents=[common], help="Normalize a dataset")
    _flag(process, "--input", "paths.raw_benchmark", "Raw dataset file")
    _flag(
        process, "--format", "benchmark.input_format", "Input format", choices=benchmark_formats
    )
    _flag(process, "--dataset", "benchmark.dataset", "Dataset name in the label map")
    _flag(process, "--domain", "benchmark.domain", "Domain used for the report")
    _flag(process, "--labelmap", "benchmark.labelmap", "Label map JSON file")
    _flag(process, "--cap", "benchmark.cap", "Maximal passage-query pairs", type=int)
    _flag(process, "--out", "paths.benchmark", "Output benchmark.jsonl")

    eval_parser = subparsers.add_parser("eval", parents=[common], help="Score predictions")
    _flag(eval_parser, "--benchmark", "paths.benchmark", "Input benchmark.jsonl")
    _flag(eval_parser, "--predictions", "paths.predictions", "Input predictions.jsonl")
    _flag(eval_parser, "--out", "paths.report", "Output report.json")
    _switch(eval_parser, "--partial", "evaluation.partial", "Show partial match scores")

    ablate = subparsers.add_parser(
        "ablate", parents=[common], help="Build one dataset per negative sampling strategy"
    )
    _flag(ablate, "--annotations", "paths.annotations", "Input annotations.jsonl")
    _flag(ablate, "--stats", "paths.stats", "Input stats.json")
    _flag(ablate, "--variant", "build.variant", "Template variant", choices=template_variants)
    _flag(ablate, "--neg-k", "build.negatives_per_example", "Negatives per example", type=int)

    demo = subparsers.add_parser(
        "demo", parents=[common], help="Run every stage on the bundled fixtures"
    )
    _flag(demo, "--out-dir", "paths.directory", "Directory for all artifacts")

    verify = subparsers.add_parser(
        "verify", parents=[common], help="Find artifacts whose inputs changed"
    )
    _flag(verify, "--dir", "paths.directory", "Artifact directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _create_parser()
    args = vars(parser.parse_args(argv))
    stage = args.pop("stage")
    config_path = args.pop("config", None)
    if stage == "demo":
        if config_path is not None:
            warn_print("--config is ignored by demo, it uses the bundled config")
        config_path = os.path.join(demo_fixtures, "forge.json")
        args.setdefault("paths.directory", None)
        if args["paths.directory"] is None:
            args["paths.directory"] = "forge-demo"
    overrides = {key: value for key, value in args.items() if value is not None}
    return run_stage(stage, config_path, overrides)


if __name__ == "__main__":
    sys.exit(main())
