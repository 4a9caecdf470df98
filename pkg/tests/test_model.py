import json
import unittest
from collections.abc import Callable

import numpy as np

from nerforge.model import (
    AnnotatedPassage,
    AnnotationKind,
    AnnotationStatus,
    BenchmarkRecord,
    ConversationExample,
    EntityAnnotation,
    InvariantError,
    Message,
    Passage,
    PredictionRecord,
    RawPrediction,
    Record,
    RecordSyntaxError,
    Role,
    SchemaError,
    deserialize,
    serialize,
    whitespace_tokens,
)


alphabet = [
    "a", "Z", "7", "\u00fc", "\u00e9", "\u6771\u4eac", "\U0001f642", '"', "\\", "{", "[", " ", "\n"
]


def _random_text(rng: np.random.Generator, minimum: int = 1) -> str:
    while True:
        length = int(rng.integers(minimum, 12))
        text = "".join(alphabet[int(i)] for i in rng.integers(0, len(alphabet), length))
        if minimum == 0 or text.strip():
            return text


def _random_passage(rng: np.random.Generator) -> Passage:
    return Passage.from_text(_random_text(rng), _random_text(rng), _random_text(rng))


def _random_annotated_passage(rng: np.random.Generator) -> AnnotatedPassage:
    if rng.random() < 0.3:
        return AnnotatedPassage(
            _random_passage(rng),
            (),
            _random_text(rng, 0),
            AnnotationStatus.Malformed,
            ["NoList", "ArityNot2", "Transport"][int(rng.integers(0, 3))],
        )
    kind = AnnotationKind.Definition if rng.random() < 0.5 else AnnotationKind.TypeName
    entities = tuple(
        EntityAnnotation(_random_text(rng), _random_text(rng), kind)
        for _ in range(int(rng.integers(0, 4)))
    )
    raw_response = _random_text(rng, 0)
    return AnnotatedPassage(_random_passage(rng), entities, raw_response, AnnotationStatus.Ok)


def _random_conversation(rng: np.random.Generator) -> ConversationExample:
    messages = [Message(Role.System, _random_text(rng, 0))]
    for _ in range(int(rng.integers(0, 4))):
        messages.append(Message(Role.User, _random_text(rng, 0)))
        answer = [_random_text(rng) for _ in range(int(rng.integers(0, 3)))]
        content = json.dumps(answer, ensure_ascii=False)
        messages.append(Message(Role.Assistant, content, in_loss=bool(rng.random() < 0.5)))
    dataset = _random_text(rng) if rng.random() < 0.5 else None
    return ConversationExample(_random_text(rng), dataset, tuple(messages))


def _random_benchmark_record(rng: np.random.Generator) -> BenchmarkRecord:
    text = _random_text(rng)
    types = [_random_text(rng) for _ in range(int(rng.integers(1, 4)))]
    gold = []
    for _ in range(int(rng.integers(0, 4))):
        start = int(rng.integers(0, len(text)))
        end = int(rng.integers(start + 1, len(text) + 1))
        gold.append((types[int(rng.integers(0, len(types)))], text[start:end]))
    return BenchmarkRecord(
        _random_text(rng), _random_text(rng), _random_text(rng), text, tuple(gold), frozenset(types)
    )


def _random_raw_prediction(rng: np.random.Generator) -> RawPrediction:
    return RawPrediction(_random_text(rng), _random_text(rng), _random_text(rng, 0))


def _random_prediction_record(rng: np.random.Generator) -> PredictionRecord:
    parse_ok = bool(rng.random() < 0.7)
    count = int(rng.integers(0, 4)) if parse_ok else 0
    mentions = tuple(_random_text(rng) for _ in range(count))
    return PredictionRecord(_random_text(rng), _random_text(rng), mentions, parse_ok)


record_generators: list[Callable[[np.random.Generator], Record]] = [
    _random_passage,
    _random_annotated_passage,
    _random_conversation,
    _random_benchmark_record,
    _random_raw_prediction,
    _random_prediction_record,
]


def _passage() -> Passage:
    return Passage.from_text("wiki-000001-0000", "wiki", "Los Angeles is a city in California.")


class TestModel(unittest.TestCase):

    def test_random_records_survive_serialization(self) -> None:
        rng = np.random.default_rng(41)
        for generator in record_generators:
            for _ in range(1000):
                record = generator(rng)
                line = serialize(record)
                self.assertNotIn("\n", line)
                restored = deserialize(line, type(record))
                self.assertEqual(restored, record, line)
                self.assertEqual(serialize(restored), line)

    def test_whitespace_tokens(self) -> None:
        self.assertEqual(whitespace_tokens("  a\tb\n c  "), ["a", "b", "c"])
        self.assertEqual(whitespace_tokens(""), [])

    def test_passage_token_count_is_checked(self) -> None:
        self.assertEqual(_passage().token_count, 7)
        with self.assertRaises(InvariantError):
            Passage("p", "s", "two tokens", 3)
        with self.assertRaises(InvariantError):
            Passage.from_text("p", "s", "   ")

    def test_canonical_line(self) -> None:
        line = serialize(_passage())
        self.assertEqual(
            line,
            '{"id":"wiki-000001-0000","source":"wiki",'
            + '"text":"Los Angeles is a city in California.","token_count":7}',
        )
        self.assertEqual(deserialize(line, Passage), _passage())

    def test_non_ascii_is_kept_literally(self) -> None:
        passage = Passage.from_text("p", "s", "Zürich")
        self.assertIn("Zürich", serialize(passage))

    def test_annotated_passage(self) -> None:
        record = AnnotatedPassage(
            _passage(),
            (
                EntityAnnotation("Los Angeles", "city"),
                EntityAnnotation("California", "state"),
                EntityAnnotation("LA", "city"),
            ),
            '[("Los Angeles", "city")]',
            AnnotationStatus.Ok,
        )
        self.assertEqual(deserialize(serialize(record), AnnotatedPassage), record)
        self.assertEqual(
            record.entities_by_type(), {"city": ["Los Angeles", "LA"], "state": ["California"]}
        )

    def test_malformed_record_invariants(self) -> None:
        with self.assertRaises(InvariantError):
            AnnotatedPassage(
                _passage(),
                (EntityAnnotation("a", "b"),),
                "",
                AnnotationStatus.Malformed,
                "NoList",
            )
        with self.assertRaises(InvariantError):
            AnnotatedPassage(_passage(), (), "", AnnotationStatus.Malformed)
        with self.assertRaises(InvariantError):
            AnnotatedPassage(_passage(), (), "", AnnotationStatus.Ok, "NoList")

    def test_entity_annotation_must_not_be_blank(self) -> None:
        with self.assertRaises(InvariantError):
            EntityAnnotation(" ", "city")
        with self.assertRaises(InvariantError):
            EntityAnnotation("Paris", "")
        self.assertEqual(EntityAnnotation("Paris", "city").kind, AnnotationKind.TypeName)

    def test_message_invariants(self) -> None:
        Message(Role.Assistant, "[]", in_loss=True)
        Message(Role.Assistant, '{"city": []}', in_loss=True)
        with self.assertRaises(InvariantError):
            Message(Role.User, "[]", in_loss=True)
        with self.assertRaises(InvariantError):
            Message(Role.Assistant, "I've read this text.", in_loss=True)
        with self.assertRaises(InvariantError):
            Message(Role.Assistant, "not json", in_loss=True)

    def test_conversation_roles_alternate(self) -> None:
        system = Message(Role.System, "s")
        user = Message(Role.User, "u")
        assistant = Message(Role.Assistant, "a")
        ConversationExample("c", None, (system, user, assistant))
        with self.assertRaises(InvariantError):
            ConversationExample("c", None, (user, assistant))
        with self.assertRaises(InvariantError):
            ConversationExample("c", None, (system, user, user))

    def test_benchmark_record_invariants(self) -> None:
        text = "Obama visited Paris."
        record = BenchmarkRecord(
            "d-s0", "demo", "news", text, (("person", "Obama"),), frozenset(["person", "city"])
        )
        self.assertEqual(deserialize(serialize(record), BenchmarkRecord), record)
        self.assertIn('"allowed_types":["city","person"]', serialize(record))
        with self.assertRaises(InvariantError):
            BenchmarkRecord("d", "demo", "news", text, (("city", "Paris"),), frozenset(["person"]))
        with self.assertRaises(InvariantError):
            BenchmarkRecord(
                "d", "demo", "news", text, (("person", "Biden"),), frozenset(["person"])
            )

    def test_prediction_records(self) -> None:
        raw = RawPrediction("d-s0", "person", '["Obama"]')
        self.assertEqual(deserialize(serialize(raw), RawPrediction), raw)
        with self.assertRaises(InvariantError):
            PredictionRecord("d-s0", "person", ("Obama",), False)

    def test_syntax_and_schema_errors(self) -> None:
        with self.assertRaises(RecordSyntaxError):
            deserialize("{not json", Passage)
        with self.assertRaises(SchemaError):
            deserialize("[]", Passage)
        with self.assertRaises(SchemaError):
            deserialize('{"id":"p","source":"s","text":"a"}', Passage)
        with self.assertRaises(SchemaError):
            deserialize('{"id":"p","source":"s","text":"a","token_count":1,"extra":1}', Passage)
        with self.assertRaises(SchemaError):
            deserialize('{"id":"p","source":"s","text":"a","token_count":true}', Passage)
        with self.assertRaises(SchemaError):
            deserialize('{"mention":"a","entity_type":"b","kind":"label"}', EntityAnnotation)
