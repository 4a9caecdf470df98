import json
from collections.abc import Iterable, Iterator
from typing import Any

from nerforge import constants
from nerforge.conversation.negatives import NegativeSamplingStrategy, sample_negatives
from nerforge.conversation.templates import TemplateVariant, render_messages
from nerforge.errors import ConfigError, MalformedInput
from nerforge.model import (
    AnnotatedPassage,
    AnnotationStatus,
    BenchmarkRecord,
    ConversationExample,
    Role,
)
from nerforge.simple_logging import eprint, warn_print


class BuildSummary:
    def __init__(self) -> None:
        self.conversations = 0
        self.positive_queries = 0
        self.negative_queries = 0
        self.clamped = 0
        self.skipped = 0

    def add(self, positives: int, negatives: int, clamped: bool) -> None:
        self.conversations += 1
        self.positive_queries += positives
        self.negative_queries += negatives
        self.clamped += int(clamped)

    def to_dict(self) -> dict[str, int]:
        return {
            "conversations": self.conversations,
            "positive_queries": self.positive_queries,
            "negative_queries": self.negative_queries,
            "clamped": self.clamped,
            "skipped": self.skipped,
        }

    def log(self) -> None:
        eprint(
            f"Built {self.conversations} conversations with {self.positive_queries} positive "
            + f"and {self.negative_queries} negative queries"
        )
        if self.skipped:
            eprint(f"Skipped {self.skipped} malformed annotations")
        if self.clamped:
            warn_print(
                f"VocabularyTooSmall: fewer negative types than requested for {self.clamped} "
                + "examples"
            )


def _check_dataset_name(dataset: str | None) -> None:
    if dataset is not None and (not dataset or constants.dataset_separator in dataset):
        raise ConfigError(f"Dataset name {dataset!r} can't be used in a prompt")


def _check_kinds(ap: AnnotatedPassage, variant: TemplateVariant) -> None:
    expected = variant.annotation_kind()
    for entity in ap.entities:
        if entity.kind != expected:
            raise MalformedInput(
                f"Annotation {ap.passage.id} has {entity.kind.value} annotations, "
                + f"the {variant.value} template needs {expected.value} annotations"
            )


def _build(
    ap: AnnotatedPassage,
    variant: TemplateVariant,
    neg: NegativeSamplingStrategy,
    dataset: str | None,
    summary: BuildSummary | None,
) -> ConversationExample:
    if ap.status != AnnotationStatus.Ok:
        raise MalformedInput(f"Annotation {ap.passage.id} is malformed, it can't be converted")
    _check_kinds(ap, variant)
    _check_dataset_name(dataset)
    positives = ap.entities_by_type()
    negatives = sample_negatives(positives.keys(), neg, ap.passage.id)
    clamped = len(negatives) < neg.k
    if summary is not None:
        summary.add(len(positives), len(negatives), clamped)
    elif clamped:
        warn_print(
            f"VocabularyTooSmall: only {len(negatives)} of {neg.k} negative types available "
            + "for "
            + ap.passage.id
        )
    messages = render_messages(ap.passage.text, dataset, positives, negatives, variant)
    return ConversationExample(ap.passage.id, dataset, messages)


def build_conversation(
    ap: AnnotatedPassage,
    variant: TemplateVariant,
    neg: NegativeSamplingStrategy,
    dataset: str | None = None,
) -> ConversationExample:
    return _build(ap, variant, neg, dataset, None)


def build_conversations(
    annotations: Iterable[AnnotatedPassage],
    variant: TemplateVariant,
    neg: NegativeSamplingStrategy,
    dataset: str | None = None,
    summary: BuildSummary | None = None,
) -> Iterator[ConversationExample]:
    """Stage form of build_conversation: malformed annotations are skipped and counted."""
    summary = summary if summary is not None else BuildSummary()
    for ap in annotations:
        if ap.status != AnnotationStatus.Ok:
            summary.skipped += 1
            continue
        yield _build(ap, variant, neg, dataset, summary)


def build_supervised_conversations(
    records: Iterable[BenchmarkRecord],
    variant: TemplateVariant,
    neg: NegativeSamplingStrategy,
    use_dataset_field: bool,
    summary: BuildSummary | None = None,
) -> Iterator[ConversationExample]:
    """
    Negatives come from the allowed types of each record, so only labels of
    the record's own dataset are ever queried.
    """
    if variant == TemplateVariant.Definition:
        raise ConfigError(
            "Benchmark records carry type names, the definition template can't be used"
        )
    summary = summary if summary is not None else BuildSummary()
    for record in records:
        dataset = record.dataset if use_dataset_field else None
        _check_dataset_name(dataset)
        positives: dict[str, list[str]] = {}
        for entity_type, mention in record.gold:
            positives.setdefault(entity_type, []).append(mention)
        negatives = sample_negatives(positives.keys(), neg, record.id, pool=record.allowed_types)
        summary.add(len(positives), len(negatives), len(negatives) < neg.k)
        messages = render_messages(record.text, dataset, positives, negatives, variant)
        yield ConversationExample(record.id, dataset, messages)


class ExtractedConversation:
    def __init__(
        self,
        passage_text: str,
        dataset: str | None,
        positives: dict[str, list[str]],
        negatives: list[str],
    ) -> None:
        self.passage_text = passage_text
        self.dataset = dataset
        self.positives = positives
        self.negatives = negatives

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ExtractedConversation) and self.to_dict() == other.to_dict()

    def to_dict(self) -> dict[str, Any]:
        return {
            "passage_text": self.passage_text,
            "dataset": self.dataset,
            "positives": [list(entry) for entry in self.positives.items()],
            "negatives": self.negatives,
        }


def _strip_affixes(text: str, prefix: str, suffix: str, owner: str) -> str:
    fits = len(text) >= len(prefix + suffix)
    if not fits or not text.startswith(prefix) or not text.endswith(suffix):
        raise MalformedInput(f"{owner}: unexpected turn {text!r}")
    return text[len(prefix) : len(text) - len(suffix)]


def _parse_text_turn(content: str, owner: str) -> tuple[str, str | None]:
    dataset = None
    if content.startswith(constants.dataset_prefix):
        dataset, separator, content = content[len(constants.dataset_prefix) :].partition(
            constants.dataset_separator
        )
        if not separator:
            raise MalformedInput(owner + ": dataset line is not terminated")
    return _strip_affixes(content, constants.text_prefix, "", owner), dataset


def _answer(content: str, expected: type, owner: str) -> Any:
    try:
        value = json.loads(content)
    except json.JSONDecodeError:
        raise MalformedInput(owner + ": answer is not valid JSON") from None
    if not isinstance(value, expected):
        raise MalformedInput(f"{owner}: answer must be a JSON {expected.__name__}")
    return value


def extract_conversation(
    example: ConversationExample, variant: TemplateVariant
) -> ExtractedConversation:
    """
    Inverse of the renderer: recovers the passage, the dataset named in the
    prompt, the positive types with their mentions and the negative types.
    """
    owner = "ConversationExample " + example.id
    messages = example.messages
    if len(messages) < 3 or messages[0].content != constants.conversation_system_message:
        raise MalformedInput(owner + ": missing preamble")
    if messages[2].content != constants.read_acknowledgement:
        raise MalformedInput(owner + ": missing acknowledgement")
    passage_text, dataset = _parse_text_turn(messages[1].content, owner)

    pairs = list(zip(messages[3::2], messages[4::2], strict=False))
    if len(messages[3:]) % 2 != 0:
        raise MalformedInput(owner + ": query without answer")
    answers: list[tuple[str, list[str]]] = []
    if variant == TemplateVariant.AllInOne:
        if len(pairs) > 1:
            raise MalformedInput(owner + ": all-in-one conversations have a single query")
        for query, answer in pairs:
            queried = _answer(
                _strip_affixes(query.content, constants.all_in_one_query_prefix, "", owner),
                list,
                owner,
            )
            mapping = _answer(answer.content, dict, owner)
            if list(mapping) != queried:
                raise MalformedInput(owner + ": answer keys don't match the queried types")
            answers = list(mapping.items())
    else:
        for query, answer in pairs:
            if query.role != Role.User or answer.role != Role.Assistant:
                raise MalformedInput(owner + ": turns are out of order")
            entity_type = _strip_affixes(
                query.content, constants.type_query_prefix, constants.type_query_suffix, owner
            )
            answers.append((entity_type, _answer(answer.content, list, owner)))

    positives = {entity_type: mentions for entity_type, mentions in answers if mentions}
    negatives = [entity_type for entity_type, mentions in answers if not mentions]
    return ExtractedConversation(passage_text, dataset, positives, negatives)
