import os
from typing import Any

from nerforge.artifacts import write_json, write_jsonl
from nerforge.conversation.builder import BuildSummary, build_conversations
from nerforge.conversation.negatives import NegativeSamplingStrategy, NegativeStrategyKind
from nerforge.conversation.templates import TemplateVariant
from nerforge.model import AnnotatedPassage
from nerforge.simple_logging import eprint
from nerforge.typeset_stats import TypeFrequencyTable


def ablation_path(directory: str, kind: NegativeStrategyKind) -> str:
    return os.path.join(directory, f"conversations.{kind.value}.jsonl")


def ablation_outputs(directory: str) -> list[str]:
    """Every file the ablation writes, the summary last."""
    paths = [ablation_path(directory, kind) for kind in NegativeStrategyKind]
    return [*paths, os.path.join(directory, "ablation.json")]


def run_negative_sampling_ablation(
    annotations: list[AnnotatedPassage],
    vocabulary: TypeFrequencyTable,
    variant: TemplateVariant,
    k: int,
    seed: int,
    directory: str,
    dataset: str | None = None,
) -> dict[str, Any]:
    """
    Builds one conversation file per negative sampling strategy from the same
    annotations and seed, so that the resulting training sets differ only in
    their negative queries. Returns the per strategy summary.
    """
    summaries: dict[str, Any] = {}
    for kind in NegativeStrategyKind:
        neg = NegativeSamplingStrategy(kind, k, vocabulary, seed)
        summary = BuildSummary()
        path = ablation_path(directory, kind)
        write_jsonl(path, build_conversations(annotations, variant, neg, dataset, summary))
        eprint("Negative sampling strategy", kind.value)
        summary.log()
        summaries[kind.value] = summary.to_dict()
    result = {"variant": variant.value, "k": k, "seed": seed, "strategies": summaries}
    write_json(ablation_outputs(directory)[-1], result)
    return result
