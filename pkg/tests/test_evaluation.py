import unittest
from fractions import Fraction
from functools import cache

import numpy as np

from nerforge.evaluation.matching import MatchCounts, match_partial, match_strict
from nerforge.evaluation.prediction_parser import parse_prediction, parse_prediction_output
from nerforge.evaluation.report import (
    DuplicatePrediction,
    DuplicateRecordId,
    UnknownRecordId,
    evaluate,
    format_count,
    format_metric,
)
from nerforge.model import BenchmarkRecord, RawPrediction, nfc, whitespace_tokens


def _pair_weight(gold: tuple[str, str], pred: tuple[str, str]) -> Fraction:
    if gold == pred:
        return Fraction(1)
    if gold[0] == pred[0] and set(whitespace_tokens(nfc(gold[1]))) & set(
        whitespace_tokens(nfc(pred[1]))
    ):
        return Fraction(1, 2)
    return Fraction(0)


def brute_force_tp(
    gold: list[tuple[str, str]], preds: list[tuple[str, str]], partial: bool
) -> Fraction:
    """Maximum weight pairing, every gold item tries every unused prediction."""

    @cache
    def best(index: int, used: int) -> Fraction:
        if index == len(gold):
            return Fraction(0)
        result = best(index + 1, used)
        for j, pred in enumerate(preds):
            if used & (1 << j):
                continue
            weight = _pair_weight(gold[index], pred)
            if not partial and weight < 1:
                continue
            if weight > 0:
                result = max(result, weight + best(index + 1, used | (1 << j)))
        return result

    return best(0, 0)


def _as_predictions(items: list[tuple[str, str]]) -> dict[str, list[str]]:
    result: dict[str, list[str]] = {}
    for entity_type, mention in items:
        result.setdefault(entity_type, []).append(mention)
    return result


def _record(
    record_id: str, dataset: str, gold: list[tuple[str, str]], domain: str = "news"
) -> BenchmarkRecord:
    text = " ".join(mention for _, mention in gold) or "Nothing here."
    allowed = frozenset(entity_type for entity_type, _ in gold) | {"person", "location"}
    return BenchmarkRecord(record_id, dataset, domain, text, tuple(gold), allowed)


class TestMatching(unittest.TestCase):

    def test_identical_predictions(self) -> None:
        gold = [("person", "Obama"), ("location", "Paris"), ("person", "Obama")]
        counts = match_strict(gold, _as_predictions(gold))
        self.assertEqual(counts, MatchCounts(3, 0, 0))
        self.assertEqual((counts.precision(), counts.recall(), counts.f1()), (1, 1, 1))
        self.assertEqual(match_partial(gold, _as_predictions(gold)), counts)

    def test_asian_cuisine(self) -> None:
        gold = [("cuisine", "asian")]
        preds = {"cuisine": ["asian cuisine"]}
        strict = match_strict(gold, preds)
        self.assertEqual(strict, MatchCounts(0, 1, 1))
        self.assertEqual(strict.f1(), 0)
        partial = match_partial(gold, preds)
        self.assertEqual(partial.tp, Fraction(1, 2))
        self.assertEqual(partial.precision(), Fraction(1, 2))
        self.assertEqual(partial.recall(), Fraction(1, 2))
        self.assertEqual(partial.f1(), Fraction(1, 2))

    def test_no_overlap(self) -> None:
        counts = match_partial([("loc", "Paris")], {"loc": ["London"]})
        self.assertEqual(counts, MatchCounts(0, 1, 1))

    def test_partial_credit_needs_the_same_type(self) -> None:
        self.assertEqual(
            match_partial([("loc", "New York")], {"city": ["New York City"]}), MatchCounts(0, 1, 1)
        )

    def test_empty_records_stay_empty(self) -> None:
        total = MatchCounts()
        for _ in range(100):
            total += match_strict([], {"person": [], "location": []})
        self.assertEqual(total, MatchCounts(0, 0, 0))
        self.assertEqual(total.f1(), 0)
        self.assertEqual(format_metric(total.f1()), "0.0000")

    def test_predictions_outside_the_allowed_types(self) -> None:
        preds = {"person": ["Obama"], "company": ["Google"]}
        counts = match_strict([("person", "Obama")], preds, {"person"})
        self.assertEqual(counts, MatchCounts(1, 1, 0))

    def test_strict_is_order_independent(self) -> None:
        gold = [("person", "a"), ("person", "b"), ("location", "c")]
        preds = {"person": ["b", "a", "a"], "location": ["d"]}
        reversed_preds = {
            entity_type: list(reversed(mentions))
            for entity_type, mentions in reversed(preds.items())
        }
        self.assertEqual(
            match_strict(gold, preds), match_strict(list(reversed(gold)), reversed_preds)
        )

    def test_random_records_against_brute_force(self) -> None:
        rng = np.random.default_rng(8)
        words = ["new", "york", "paris", "city", "bank", "of", "america", "x", "y", "z"]
        types = ["location", "organization"]

        def random_item() -> tuple[str, str]:
            indices = rng.integers(0, len(words), int(rng.integers(1, 3)))
            mention = " ".join(words[int(i)] for i in indices)
            return types[int(rng.integers(0, len(types)))], mention

        optimal = 0
        for _ in range(1000):
            gold = [random_item() for _ in range(int(rng.integers(0, 6)))]
            preds = [random_item() for _ in range(int(rng.integers(0, 6)))]
            strict = match_strict(gold, _as_predictions(preds))
            partial = match_partial(gold, _as_predictions(preds))
            self.assertEqual(strict.tp, brute_force_tp(gold, preds, partial=False))
            best = brute_force_tp(gold, preds, partial=True)
            self.assertLessEqual(partial.tp, best)
            optimal += partial.tp == best
            self.assertGreaterEqual(partial.tp, strict.tp)
            self.assertGreaterEqual(partial.f1(), strict.f1())
            self.assertEqual(partial.tp + partial.fp, len(preds))
            self.assertEqual(partial.tp + partial.fn, len(gold))
        self.assertGreaterEqual(optimal, 990)

    def test_greedy_is_optimal_when_overlap_is_all_or_nothing(self) -> None:
        rng = np.random.default_rng(12)
        for trial in range(1000):
            shared = trial % 2 == 0

            def mention(i: int) -> str:
                return f"core w{i}" if shared else f"w{i}"

            gold_indices = rng.integers(0, 8, int(rng.integers(0, 6)))
            pred_indices = rng.integers(0, 8, int(rng.integers(0, 6)))
            gold = [("location", mention(int(i))) for i in gold_indices]
            preds = [("location", mention(int(i))) for i in pred_indices]
            partial = match_partial(gold, _as_predictions(preds))
            self.assertEqual(partial.tp, brute_force_tp(gold, preds, partial=True))


class TestPredictionParser(unittest.TestCase):

    def test_examples(self) -> None:
        self.assertEqual(parse_prediction_output('["Los Angeles"]'), (["Los Angeles"], True))
        self.assertEqual(parse_prediction_output("[]"), ([], True))
        self.assertEqual(parse_prediction_output("I found none."), ([], False))
        self.assertEqual(parse_prediction_output('["a", "a"]'), (["a", "a"], True))

    def test_nested_lists_are_not_lists_of_strings(self) -> None:
        self.assertEqual(parse_prediction_output('[["Paris"]]'), ([], False))
        self.assertEqual(parse_prediction_output('[["Paris"]] or ["Rome"]'), (["Rome"], True))
        self.assertEqual(parse_prediction_output('[1, 2] then ["a"]'), (["a"], True))

    def test_parse_prediction(self) -> None:
        record = parse_prediction(RawPrediction("r", "person", 'Answer: ["Obama"]'))
        self.assertEqual(record.mentions, ("Obama",))
        self.assertTrue(record.parse_ok)


class TestReport(unittest.TestCase):

    def test_format_metric(self) -> None:
        self.assertEqual(format_metric(Fraction(1)), "1.0000")
        self.assertEqual(format_metric(Fraction(2, 3)), "0.6667")
        self.assertEqual(format_metric(Fraction(1, 20000)), "0.0000")
        self.assertEqual(format_metric(Fraction(3, 20000)), "0.0002")
        self.assertEqual(format_count(Fraction(3)), 3)
        self.assertEqual(format_count(Fraction(5, 2)), 2.5)

    def test_perfect_predictions(self) -> None:
        record = _record("a-s0", "a", [("person", "Obama")])
        predictions = [
            RawPrediction("a-s0", "person", '["Obama"]'),
            RawPrediction("a-s0", "location", "[]"),
        ]
        report = evaluate([record], predictions).to_dict()
        for regime in ["strict", "partial"]:
            scores = report["datasets"]["a"][regime]
            self.assertEqual((scores["precision"], scores["recall"], scores["f1"]), ("1.0000",) * 3)
        self.assertEqual(report["domains"]["news"]["strict_f1"], "1.0000")
        self.assertEqual(report["overall"], {"strict_f1": "1.0000", "partial_f1": "1.0000"})

    def test_domain_mean(self) -> None:
        records = [
            _record("a-s0", "a", [("person", "Obama")]),
            _record("b-s0", "b", [("person", "Merkel")]),
        ]
        predictions = [
            RawPrediction("a-s0", "person", '["Obama"]'),
            RawPrediction("b-s0", "person", '["Putin"]'),
        ]
        report = evaluate(records, predictions)
        self.assertEqual(report.domain_f1("news", "strict"), Fraction(1, 2))
        self.assertEqual(report.to_dict()["domains"]["news"]["datasets"], ["a", "b"])

    def test_missing_predictions_are_empty(self) -> None:
        report = evaluate([_record("a-s0", "a", [("person", "Obama")])], [])
        self.assertEqual(report.per_dataset["a"].counts["strict"], MatchCounts(0, 0, 1))

    def test_parse_failures_are_counted(self) -> None:
        report = evaluate(
            [_record("a-s0", "a", [("person", "Obama")])],
            [RawPrediction("a-s0", "person", "I can't tell.")],
        )
        self.assertEqual(report.per_dataset["a"].parse_failures, 1)
        self.assertEqual(report.per_dataset["a"].counts["strict"], MatchCounts(0, 0, 1))

    def test_placeholder_regression(self) -> None:
        records = [_record(f"e-s{i}", "empty", []) for i in range(100)]
        predictions = [RawPrediction(f"e-s{i}", "person", "[]") for i in range(100)]
        report = evaluate(records, predictions).to_dict()
        self.assertEqual(report["datasets"]["empty"]["strict"]["f1"], "0.0000")
        self.assertEqual(report["datasets"]["empty"]["partial"]["f1"], "0.0000")

    def test_input_errors(self) -> None:
        record = _record("a-s0", "a", [("person", "Obama")])
        with self.assertRaises(DuplicatePrediction):
            evaluate(
                [record],
                [RawPrediction("a-s0", "person", "[]"), RawPrediction("a-s0", "person", "[]")],
            )
        with self.assertRaises(UnknownRecordId):
            evaluate([record], [RawPrediction("zzz", "person", "[]")])
        with self.assertRaises(DuplicateRecordId):
            evaluate([record, record], [])
