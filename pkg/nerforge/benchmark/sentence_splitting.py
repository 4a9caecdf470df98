import re
from collections.abc import Iterable, Iterator

from nerforge.benchmark.documents import RawDocument
from nerforge.errors import ForgeError
from nerforge.model import BenchmarkRecord
from nerforge.simple_logging import debug_print, eprint, warn_print

_sentence_end = re.compile(r"[.!?]\s+")


class OffsetOutOfRange(ForgeError):
    code = "OffsetOutOfRange"


def split_sentences(text: str) -> list[tuple[int, int]]:
    """
    Stand-in splitter: a sentence ends after '.', '!' or '?' followed by
    whitespace. Leading and trailing whitespace belongs to no sentence.
    """
    stripped_start = len(text) - len(text.lstrip())
    stripped_end = len(text.rstrip())
    if stripped_start >= stripped_end:
        return []
    sentences = []
    start = stripped_start
    for match in _sentence_end.finditer(text, stripped_start, stripped_end):
        sentences.append((start, match.start() + 1))
        start = match.end()
    sentences.append((start, stripped_end))
    return sentences


class SplitSummary:
    def __init__(self) -> None:
        self.documents = 0
        self.sentences = 0
        self.entities = 0
        self.dropped_entities = 0

    def log(self) -> None:
        eprint(
            f"Split {self.documents} documents into {self.sentences} sentences "
            + f"with {self.entities - self.dropped_entities} entities"
        )
        if self.dropped_entities:
            warn_print(f"Dropped {self.dropped_entities} entities which cross a sentence boundary")


class SplitDocument:
    def __init__(self, records: list[BenchmarkRecord], separators: list[str]) -> None:
        self.records = records
        # separators[i] precedes records[i], the last one trails the document
        self.separators = separators
        self.dropped_entities = 0

    def reconstruct(self) -> str:
        parts = []
        for separator, record in zip(self.separators, self.records, strict=False):
            parts.append(separator)
            parts.append(record.text)
        parts.append(self.separators[-1])
        return "".join(parts)


def _check_offsets(document: RawDocument, sentences: list[tuple[int, int]]) -> None:
    previous_end = 0
    for start, end in sentences:
        if start < previous_end or end < start or end > len(document.text):
            raise OffsetOutOfRange(
                f"Sentence ({start}, {end}) of {document.id} is out of order or outside the text"
            )
        previous_end = end
    for label, start, end in document.entities:
        if start < 0 or end <= start or end > len(document.text):
            raise OffsetOutOfRange(
                f"Entity {label} ({start}, {end}) of {document.id} is outside the text"
            )


def split_document(document: RawDocument, dataset: str, domain: str) -> SplitDocument:
    """
    One record per sentence. Entities go to the sentence which contains their
    whole span, entities crossing a boundary are dropped and counted. The
    records of the raw document still carry the raw labels.
    """
    sentences = (
        document.sentences if document.sentences is not None else split_sentences(document.text)
    )
    _check_offsets(document, sentences)
    gold: list[list[tuple[str, str]]] = [[] for _ in sentences]
    dropped = 0
    for label, start, end in sorted(document.entities, key=lambda entity: entity[1:]):
        index = next(
            (i for i, (s, e) in enumerate(sentences) if s <= start and end <= e),
            None,
        )
        if index is None:
            debug_print("Dropping", label, repr(document.text[start:end]), "in", document.id)
            dropped += 1
            continue
        gold[index].append((label, document.text[start:end]))

    records = []
    separators = []
    previous_end = 0
    for i, (start, end) in enumerate(sentences):
        separators.append(document.text[previous_end:start])
        records.append(
            BenchmarkRecord(
                f"{document.id}-s{i}",
                dataset,
                domain,
                document.text[start:end],
                tuple(gold[i]),
                frozenset(label for label, _ in gold[i]),
            )
        )
        previous_end = end
    separators.append(document.text[previous_end:])
    result = SplitDocument(records, separators)
    result.dropped_entities = dropped
    return result


def split_documents(
    documents: Iterable[RawDocument],
    dataset: str,
    domain: str,
    summary: SplitSummary | None = None,
) -> Iterator[BenchmarkRecord]:
    summary = summary if summary is not None else SplitSummary()
    for document in documents:
        split = split_document(document, dataset, domain)
        summary.documents += 1
        summary.sentences += len(split.records)
        summary.entities += len(document.entities)
        summary.dropped_entities += split.dropped_entities
        yield from split.records
