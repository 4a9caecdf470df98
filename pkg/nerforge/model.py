import json
import unicodedata
from abc import abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, TypeVar

from nerforge import constants


class RecordError(ValueError):
    """Base class for every problem with a single serialized record."""


class RecordSyntaxError(RecordError):
    pass


class SchemaError(RecordError):
    pass


class InvariantError(RecordError):
    pass


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def whitespace_tokens(text: str) -> list[str]:
    """
    A token is a maximal run of non-whitespace characters. All token counts
    in the pipeline (chunk limits, partial matching) use this definition.
    """
    return text.split()


class AnnotationKind(Enum):
    TypeName = "type"
    Definition = "definition"


class AnnotationStatus(Enum):
    Ok = "ok"
    Malformed = "malformed"


class Role(Enum):
    System = "system"
    User = "user"
    Assistant = "assistant"


def _check_keys(data: dict[str, Any], owner: str, expected: tuple[str, ...]) -> None:
    missing = [key for key in expected if key not in data]
    if missing:
        raise SchemaError(owner + ": missing field " + ", ".join(missing))
    extra = sorted(key for key in data if key not in expected)
    if extra:
        raise SchemaError(owner + ": unexpected field " + ", ".join(extra))


def _string(data: dict[str, Any], key: str, owner: str) -> str:
    value = data[key]
    if not isinstance(value, str):
        raise SchemaError(f"{owner}.{key} must be a string")
    return value


def _optional_string(data: dict[str, Any], key: str, owner: str) -> str | None:
    if data[key] is None:
        return None
    return _string(data, key, owner)


def _integer(data: dict[str, Any], key: str, owner: str) -> int:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{owner}.{key} must be an integer")
    return value


def _boolean(data: dict[str, Any], key: str, owner: str) -> bool:
    value = data[key]
    if not isinstance(value, bool):
        raise SchemaError(f"{owner}.{key} must be a boolean")
    return value


def _list(data: dict[str, Any], key: str, owner: str) -> list[Any]:
    value = data[key]
    if not isinstance(value, list):
        raise SchemaError(f"{owner}.{key} must be a list")
    return value


def _object(value: Any, owner: str) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise SchemaError(owner + " must be a JSON object")
    return value


def _enum(enum_type: type[Any], data: dict[str, Any], key: str, owner: str) -> Any:
    value = _string(data, key, owner)
    try:
        return enum_type(value)
    except ValueError:
        allowed = ", ".join(member.value for member in enum_type)
        raise SchemaError(f"{owner}.{key} must be one of {allowed}") from None


class Record:
    """
    Base for all pipeline records. Subclasses are frozen dataclasses, their
    field order is the key order of the canonical JSON line.
    """

    @abstractmethod
    def to_dict(self) -> dict[str, Any]:
        pass

    @classmethod
    @abstractmethod
    def from_dict(cls, data: dict[str, Any]) -> "Record":
        pass


RecordT = TypeVar("RecordT", bound=Record)


def serialize(record: Record) -> str:
    return json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":"))


def deserialize(line: str, expected: type[RecordT]) -> RecordT:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as e:
        raise RecordSyntaxError(f"{expected.__name__}: not valid JSON ({e.msg})") from None
    result = expected.from_dict(_object(data, expected.__name__))
    if not isinstance(result, expected):
        raise SchemaError(expected.__name__ + ": wrong record type")
    return result


@dataclass(frozen=True)
class Passage(Record):
    id: str
    source: str
    text: str
    token_count: int

    def __post_init__(self) -> None:
        if not self.id:
            raise InvariantError("Passage.id must not be empty")
        if not self.text.strip():
            raise InvariantError("Passage.text must not be empty " + self.id)
        if self.token_count != len(whitespace_tokens(self.text)):
            raise InvariantError(
                f"Passage.token_count is {self.token_count} but the text of {self.id} has "
                + f"{len(whitespace_tokens(self.text))} tokens"
            )

    @staticmethod
    def from_text(passage_id: str, source: str, text: str) -> "Passage":
        return Passage(passage_id, source, text, len(whitespace_tokens(text)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "source": self.source,
            "text": self.text,
            "token_count": self.token_count,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Passage":
        _check_keys(data, "Passage", ("id", "source", "text", "token_count"))
        return Passage(
            _string(data, "id", "Passage"),
            _string(data, "source", "Passage"),
            _string(data, "text", "Passage"),
            _integer(data, "token_count", "Passage"),
        )


@dataclass(frozen=True)
class EntityAnnotation(Record):
    mention: str
    entity_type: str
    kind: AnnotationKind = AnnotationKind.TypeName

    def __post_init__(self) -> None:
        if not self.mention.strip():
            raise InvariantError("EntityAnnotation.mention must not be empty")
        if not self.entity_type.strip():
            raise InvariantError("EntityAnnotation.entity_type must not be empty")

    def to_dict(self) -> dict[str, Any]:
        return {"mention": self.mention, "entity_type": self.entity_type, "kind": self.kind.value}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EntityAnnotation":
        _check_keys(data, "EntityAnnotation", ("mention", "entity_type", "kind"))
        return EntityAnnotation(
            _string(data, "mention", "EntityAnnotation"),
            _string(data, "entity_type", "EntityAnnotation"),
            _enum(AnnotationKind, data, "kind", "EntityAnnotation"),
        )


@dataclass(frozen=True)
class AnnotatedPassage(Record):
    passage: Passage
    entities: tuple[EntityAnnotation, ...]
    raw_response: str
    status: AnnotationStatus
    malformed_reason: str | None = None

    def __post_init__(self) -> None:
        if self.status == AnnotationStatus.Malformed:
            if self.entities:
                raise InvariantError(
                    "AnnotatedPassage.entities must be empty for a malformed record "
                    + self.passage.id
                )
            if not self.malformed_reason:
                raise InvariantError(
                    "AnnotatedPassage.malformed_reason is required for " + self.passage.id
                )
        elif self.malformed_reason is not None:
            raise InvariantError(
                "AnnotatedPassage.malformed_reason must be null for an ok record "
                + self.passage.id
            )

    def entities_by_type(self) -> dict[str, list[str]]:
        """Types in order of first appearance, mentions in annotation order."""
        result: dict[str, list[str]] = {}
        for entity in self.entities:
            result.setdefault(entity.entity_type, []).append(entity.mention)
        return result

    def to_dict(self) -> dict[str, Any]:
        return {
            "passage": self.passage.to_dict(),
            "entities": [entity.to_dict() for entity in self.entities],
            "raw_response": self.raw_response,
            "status": self.status.value,
            "malformed_reason": self.malformed_reason,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "AnnotatedPassage":
        owner = "AnnotatedPassage"
        _check_keys(
            data, owner, ("passage", "entities", "raw_response", "status", "malformed_reason")
        )
        return AnnotatedPassage(
            Passage.from_dict(_object(data["passage"], owner + ".passage")),
            tuple(
                EntityAnnotation.from_dict(_object(entity, owner + ".entities"))
                for entity in _list(data, "entities", owner)
            ),
            _string(data, "raw_response", owner),
            _enum(AnnotationStatus, data, "status", owner),
            _optional_string(data, "malformed_reason", owner),
        )


def _is_json_answer(content: str) -> bool:
    try:
        value = json.loads(content)
    except json.JSONDecodeError:
        return False
    return isinstance(value, list | dict)


@dataclass(frozen=True)
class Message(Record):
    role: Role
    content: str
    in_loss: bool = False

    def __post_init__(self) -> None:
        if self.in_loss and self.role != Role.Assistant:
            raise InvariantError("Message.in_loss is only allowed on assistant messages")
        if self.in_loss and self.content == constants.read_acknowledgement:
            raise InvariantError("Message.in_loss must be false for the acknowledgement turn")
        if self.in_loss and not _is_json_answer(self.content):
            raise InvariantError("Message.in_loss requires a JSON list or object as content")

    def to_dict(self) -> dict[str, Any]:
        return {"role": self.role.value, "content": self.content, "in_loss": self.in_loss}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Message":
        _check_keys(data, "Message", ("role", "content", "in_loss"))
        return Message(
            _enum(Role, data, "role", "Message"),
            _string(data, "content", "Message"),
            _boolean(data, "in_loss", "Message"),
        )


@dataclass(frozen=True)
class ConversationExample(Record):
    id: str
    dataset: str | None
    messages: tuple[Message, ...]

    def __post_init__(self) -> None:
        if not self.messages or self.messages[0].role != Role.System:
            raise InvariantError(
                "ConversationExample " + self.id + " must start with a system message"
            )
        for i, message in enumerate(self.messages[1:]):
            expected = Role.User if i % 2 == 0 else Role.Assistant
            if message.role != expected:
                raise InvariantError(
                    f"ConversationExample {self.id}: message {i + 1} must be "
                    + f"{expected.value} but is {message.role.value}"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "dataset": self.dataset,
            "messages": [message.to_dict() for message in self.messages],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ConversationExample":
        owner = "ConversationExample"
        _check_keys(data, owner, ("id", "dataset", "messages"))
        return ConversationExample(
            _string(data, "id", owner),
            _optional_string(data, "dataset", owner),
            tuple(
                Message.from_dict(_object(message, owner + ".messages"))
                for message in _list(data, "messages", owner)
            ),
        )


@dataclass(frozen=True)
class BenchmarkRecord(Record):
    id: str
    dataset: str
    domain: str
    text: str
    gold: tuple[tuple[str, str], ...]
    allowed_types: frozenset[str]

    def __post_init__(self) -> None:
        for entity_type, mention in self.gold:
            if entity_type not in self.allowed_types:
                raise InvariantError(
                    f"BenchmarkRecord {self.id}: gold type '{entity_type}' "
                    + "is not in allowed_types"
                )
            if not mention or mention not in self.text:
                raise InvariantError(
                    f"BenchmarkRecord {self.id}: gold mention '{mention}' is not part of the text"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "dataset": self.dataset,
            "domain": self.domain,
            "text": self.text,
            "gold": [[entity_type, mention] for entity_type, mention in self.gold],
            "allowed_types": sorted(self.allowed_types),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BenchmarkRecord":
        owner = "BenchmarkRecord"
        _check_keys(data, owner, ("id", "dataset", "domain", "text", "gold", "allowed_types"))
        gold = []
        for pair in _list(data, "gold", owner):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(part, str) for part in pair)
            ):
                raise SchemaError(owner + ".gold entries must be [type, mention] string pairs")
            gold.append((pair[0], nfc(pair[1])))
        allowed = _list(data, "allowed_types", owner)
        if not all(isinstance(entity_type, str) for entity_type in allowed):
            raise SchemaError(owner + ".allowed_types must be a list of strings")
        return BenchmarkRecord(
            _string(data, "id", owner),
            _string(data, "dataset", owner),
            _string(data, "domain", owner),
            nfc(_string(data, "text", owner)),
            tuple(gold),
            frozenset(allowed),
        )


@dataclass(frozen=True)
class RawPrediction(Record):
    """One line of predictions.jsonl: the model output for one (record, type) query."""

    record_id: str
    entity_type: str
    raw_output: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "entity_type": self.entity_type,
            "raw_output": self.raw_output,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RawPrediction":
        _check_keys(data, "RawPrediction", ("record_id", "entity_type", "raw_output"))
        return RawPrediction(
            _string(data, "record_id", "RawPrediction"),
            _string(data, "entity_type", "RawPrediction"),
            _string(data, "raw_output", "RawPrediction"),
        )


@dataclass(frozen=True)
class PredictionRecord(Record):
    record_id: str
    entity_type: str
    mentions: tuple[str, ...]
    parse_ok: bool

    def __post_init__(self) -> None:
        if not self.parse_ok and self.mentions:
            raise InvariantError(
                "PredictionRecord.mentions must be empty when the output was not parsable"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "entity_type": self.entity_type,
            "mentions": list(self.mentions),
            "parse_ok": self.parse_ok,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PredictionRecord":
        owner = "PredictionRecord"
        _check_keys(data, owner, ("record_id", "entity_type", "mentions", "parse_ok"))
        mentions = _list(data, "mentions", owner)
        if not all(isinstance(mention, str) for mention in mentions):
            raise SchemaError(owner + ".mentions must be a list of strings")
        return PredictionRecord(
            _string(data, "record_id", owner),
            _string(data, "entity_type", owner),
            tuple(mentions),
            _boolean(data, "parse_ok", owner),
        )
