import json
import os
from collections.abc import Iterator

from nerforge.errors import MalformedInput
from nerforge.model import nfc


class RawDocument:
    """
    A document as the dataset ships it: entities are (raw label, start, end)
    character offsets into text, end exclusive. Sentence offsets are optional,
    the sentence splitter provides them when the dataset doesn't.
    """

    def __init__(
        self,
        document_id: str,
        text: str,
        entities: list[tuple[str, int, int]],
        sentences: list[tuple[int, int]] | None = None,
    ) -> None:
        self.id = document_id
        self.text = text
        self.entities = entities
        self.sentences = sentences

    def __repr__(self) -> str:
        return f"RawDocument({self.id}, {len(self.entities)} entities)"


def _split_tag(tag: str) -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    prefix, separator, label = tag.partition("-")
    if not separator or prefix not in ("B", "I", "E", "S") or not label:
        raise ValueError(f"Invalid tag {tag!r}, expected O or B-, I-, E-, S- followed by a label")
    return prefix, label


def tags_to_spans(tags: list[str]) -> list[tuple[str, int, int]]:
    """
    Converts BIO, IOB1 or IOBES tags into (label, first token, end token)
    spans, end exclusive. An I- tag which doesn't continue a span of the same
    label starts a new one, which is how IOB1 marks its spans.
    """
    spans: list[tuple[str, int, int]] = []
    start: int | None = None
    current: str | None = None

    def close(end: int) -> None:
        nonlocal start, current
        if start is not None and current is not None:
            spans.append((current, start, end))
        start, current = None, None

    for i, tag in enumerate(tags):
        prefix, label = _split_tag(tag)
        if prefix == "O":
            close(i)
        elif prefix in ("B", "S"):
            close(i)
            start, current = i, label
        elif start is None or current != label:
            close(i)
            start, current = i, label
        if prefix in ("E", "S"):
            close(i + 1)
    close(len(tags))
    return spans


class _DocumentBuilder:
    def __init__(self, document_id: str) -> None:
        self.id = document_id
        self.tokens: list[str] = []
        self.offsets: list[int] = []
        self.entities: list[tuple[str, int, int]] = []
        self.sentences: list[tuple[int, int]] = []
        self.length = 0

    def add_sentence(self, tokens: list[str], tags: list[str]) -> None:
        if self.tokens:
            self.length += 1
        sentence_start = self.length
        first = len(self.tokens)
        for token in tokens:
            self.offsets.append(self.length)
            self.tokens.append(token)
            self.length += len(token) + 1
        self.length -= 1
        self.sentences.append((sentence_start, self.length))
        for label, start, end in tags_to_spans(tags):
            start_offset = self.offsets[first + start]
            end_offset = self.offsets[first + end - 1] + len(self.tokens[first + end - 1])
            self.entities.append((label, start_offset, end_offset))

    def is_empty(self) -> bool:
        return not self.tokens

    def build(self) -> RawDocument:
        return RawDocument(self.id, " ".join(self.tokens), self.entities, self.sentences)


def read_conll(path: str, dataset: str) -> Iterator[RawDocument]:
    """
    Column format: the first column is the token, the last one the tag. Blank
    lines end a sentence and -DOCSTART- lines start a new document. A file
    without -DOCSTART- lines is a single document.
    """
    document_index = 0
    builder = _DocumentBuilder(f"{dataset}-d{document_index:05d}")
    tokens: list[str] = []
    tags: list[str] = []

    def flush_sentence(line_number: int) -> None:
        try:
            if tokens:
                builder.add_sentence(tokens, tags)
        except ValueError as e:
            raise MalformedInput(f"{path}:{line_number}: {e}") from None
        tokens.clear()
        tags.clear()

    with open(path, encoding="utf-8") as f:
        line_number = 0
        for line_number, line in enumerate(f, start=1):
            columns = line.split()
            if not columns:
                flush_sentence(line_number)
                continue
            if columns[0] == "-DOCSTART-":
                flush_sentence(line_number)
                if not builder.is_empty():
                    yield builder.build()
                    document_index += 1
                    builder = _DocumentBuilder(f"{dataset}-d{document_index:05d}")
                continue
            if len(columns) < 2:
                raise MalformedInput(f"{path}:{line_number}: expected a token and a tag")
            tokens.append(nfc(columns[0]))
            tags.append(columns[-1])
        flush_sentence(line_number)
    if not builder.is_empty():
        yield builder.build()


def _offsets(value: object, owner: str) -> tuple[int, int]:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise MalformedInput(owner + ": offsets must be [start, end] integers")
    return value[0], value[1]


def _normalized_offset(text: str, normalized: str, offset: int, owner: str) -> int:
    if offset < 0:
        return offset
    if offset > len(text):
        return offset - len(text) + len(normalized)
    prefix = nfc(text[:offset])
    if not normalized.startswith(prefix):
        raise MalformedInput(f"{owner}: offset {offset} splits a combined character")
    return len(prefix)


def _normalized_document(
    document_id: str,
    text: str,
    entities: list[tuple[str, int, int]],
    sentences: list[tuple[int, int]] | None,
    owner: str,
) -> RawDocument:
    normalized = nfc(text)
    if normalized == text:
        return RawDocument(document_id, text, entities, sentences)

    def move(offset: int) -> int:
        return _normalized_offset(text, normalized, offset, owner)

    moved_entities = [(label, move(start), move(end)) for label, start, end in entities]
    moved_sentences = None
    if sentences is not None:
        moved_sentences = [(move(start), move(end)) for start, end in sentences]
    return RawDocument(document_id, normalized, moved_entities, moved_sentences)


def read_spans(path: str) -> Iterator[RawDocument]:
    """
    JSONL with {"id", "text", "entities": [{"label", "start", "end"}], "sentences"?},
    "sentences" being a list of [start, end] offsets.
    The text is NFC normalized and the offsets are moved onto the normalized text.
    """
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            owner = f"{path}:{line_number}"
            try:
                data = json.loads(line)
            except json.JSONDecodeError:
                raise MalformedInput(owner + ": not valid JSON") from None
            if (
                not isinstance(data, dict)
                or not isinstance(data.get("id"), str)
                or not isinstance(data.get("text"), str)
                or not isinstance(data.get("entities"), list)
            ):
                raise MalformedInput(owner + ": expected {id, text, entities}")
            entities = []
            for entity in data["entities"]:
                if not isinstance(entity, dict) or not isinstance(entity.get("label"), str):
                    raise MalformedInput(owner + ": entities need a label")
                start, end = _offsets([entity.get("start"), entity.get("end")], owner)
                entities.append((entity["label"], start, end))
            sentences = None
            if data.get("sentences") is not None:
                if not isinstance(data["sentences"], list):
                    raise MalformedInput(owner + ": sentences must be a list")
                sentences = [_offsets(sentence, owner) for sentence in data["sentences"]]
            yield _normalized_document(data["id"], data["text"], entities, sentences, owner)


def read_raw_documents(path: str, input_format: str, dataset: str) -> Iterator[RawDocument]:
    if not os.path.isfile(path):
        raise MalformedInput(path + " is not a file")
    if input_format == "conll":
        return read_conll(path, dataset)
    if input_format == "spans":
        return read_spans(path)
    raise MalformedInput("Unknown benchmark input format " + input_format)
