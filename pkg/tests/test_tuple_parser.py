import json
import os
import unittest

import numpy as np

from nerforge.annotation.tuple_parser import (
    MalformedOutput,
    MalformedReason,
    parse_tuple_list,
    parse_tuples,
)
from nerforge.evaluation.prediction_parser import parse_prediction_output
from nerforge.model import AnnotationKind, nfc

script_location = os.path.dirname(os.path.realpath(__file__))

grammar_cases_path = os.path.join(script_location, "fixtures", "parser_grammar_cases.jsonl")


def load_grammar_cases() -> list[dict]:
    with open(grammar_cases_path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


mention_alphabet = list("abcdefXYZ -.,()[]é0123")
prose_alphabet = list("abc XYZ:.!\n")
fuzz_alphabet = list("[](),'\"\\ abc\n:")


def _random_string(rng: np.random.Generator, alphabet: list[str], max_length: int) -> str:
    length = int(rng.integers(0, max_length + 1))
    return "".join(alphabet[int(i)] for i in rng.integers(0, len(alphabet), length))


def _random_field(rng: np.random.Generator) -> str:
    while True:
        value = _random_string(rng, mention_alphabet, 12)
        if value.strip():
            return value


def _render_field(rng: np.random.Generator, value: str) -> str:
    quote = "'" if rng.random() < 0.5 else '"'
    return quote + value + quote


class TestTupleParser(unittest.TestCase):

    def test_grammar_fixture_has_enough_cases(self) -> None:
        self.assertGreaterEqual(len(load_grammar_cases()), 50)

    def test_grammar_cases(self) -> None:
        for case in load_grammar_cases():
            with self.subTest(case["name"]):
                if case["reason"] is None:
                    expected = [tuple(pair) for pair in case["tuples"]]
                    self.assertEqual(parse_tuples(case["input"]), expected)
                else:
                    with self.assertRaises(MalformedOutput) as context:
                        parse_tuples(case["input"])
                    self.assertEqual(context.exception.reason.value, case["reason"])

    def test_prediction_parser_on_grammar_cases(self) -> None:
        for case in load_grammar_cases():
            with self.subTest(case["name"]):
                mentions, parse_ok = parse_prediction_output(case["input"])
                if case["mentions"] is None:
                    self.assertFalse(parse_ok)
                    self.assertEqual(mentions, [])
                else:
                    self.assertTrue(parse_ok)
                    self.assertEqual(mentions, case["mentions"])

    def test_entity_annotations(self) -> None:
        actual = parse_tuple_list('[("Los Angeles", "city"), ("Obama", "person")]')
        self.assertEqual([entity.mention for entity in actual], ["Los Angeles", "Obama"])
        self.assertEqual([entity.entity_type for entity in actual], ["city", "person"])
        self.assertTrue(all(entity.kind == AnnotationKind.TypeName for entity in actual))

    def test_definition_kind(self) -> None:
        actual = parse_tuple_list(
            '[("Paris", "the capital city of France")]', AnnotationKind.Definition
        )
        self.assertEqual(actual[0].kind, AnnotationKind.Definition)

    def test_annotations_are_nfc_normalized(self) -> None:
        decomposed = "Cafe\u0301"
        actual = parse_tuple_list(f'[("{decomposed}", "restaurant")]')
        self.assertEqual(actual[0].mention, "Café")

    def test_empty_field_reason(self) -> None:
        with self.assertRaises(MalformedOutput) as context:
            parse_tuple_list('[("", "city")]')
        self.assertEqual(context.exception.reason, MalformedReason.EmptyField)

    def test_generated_lists_are_recovered_exactly(self) -> None:
        rng = np.random.default_rng(17)
        for _ in range(2000):
            expected = [
                (_random_field(rng), _random_field(rng))
                for _ in range(int(rng.integers(0, 6)))
            ]
            separator = ", " if rng.random() < 0.5 else ",\n  "
            body = separator.join(
                "(" + _render_field(rng, mention) + ", " + _render_field(rng, entity_type) + ")"
                for mention, entity_type in expected
            )
            trailing = "," if expected and rng.random() < 0.3 else ""
            prose = _random_string(rng, prose_alphabet, 20)
            response = prose + "[" + body + trailing + "]" + _random_string(rng, prose_alphabet, 20)
            self.assertEqual(parse_tuples(response), expected, response)

    def test_fuzz_never_raises_anything_but_malformed_output(self) -> None:
        rng = np.random.default_rng(2024)
        reasons = set()
        for _ in range(10000):
            response = _random_string(rng, fuzz_alphabet, 30)
            try:
                parse_tuples(response)
            except MalformedOutput as e:
                reasons.add(e.reason)
            mentions, parse_ok = parse_prediction_output(response)
            if not parse_ok:
                self.assertEqual(mentions, [])
            self.assertTrue(all(mention == nfc(mention) for mention in mentions))
        self.assertNotIn(MalformedReason.Transport, reasons)
        self.assertIn(MalformedReason.NoList, reasons)
