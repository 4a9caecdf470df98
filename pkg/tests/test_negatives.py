import unittest
from collections import Counter

import numpy as np
from scipy.stats import chisquare

from nerforge.config import BuildConfig
from nerforge.conversation.negatives import (
    NegativeSamplingStrategy,
    NegativeStrategyKind,
    example_seed,
    sample_negatives,
    weighted_sample_without_replacement,
)
from nerforge.errors import ConfigError
from nerforge.typeset_stats import TypeFrequencyTable


class TestNegatives(unittest.TestCase):

    def test_none_strategy_draws_nothing(self) -> None:
        vocabulary = TypeFrequencyTable({"a": 1, "b": 2})
        neg = NegativeSamplingStrategy(NegativeStrategyKind.Off, 5, vocabulary, 1)
        self.assertEqual(neg.k, 0)
        self.assertEqual(sample_negatives(["a"], neg, "x"), [])
        self.assertEqual(sample_negatives([], NegativeSamplingStrategy.none(), "x"), [])

    def test_negative_k_is_rejected(self) -> None:
        with self.assertRaises(ConfigError):
            NegativeSamplingStrategy.uniform(-1, None, 1)

    def test_from_config(self) -> None:
        cfg = BuildConfig(negatives="uniform", negatives_per_example=3)
        neg = NegativeSamplingStrategy.from_config(cfg, None, 7)
        self.assertEqual(neg.kind, NegativeStrategyKind.Uniform)
        self.assertEqual(neg.k, 3)
        self.assertEqual(repr(neg), "uniform(k=3, seed=7)")

    def test_example_seed_is_stable(self) -> None:
        self.assertEqual(example_seed(1, "a"), example_seed(1, "a"))
        self.assertNotEqual(example_seed(1, "a"), example_seed(2, "a"))
        self.assertNotEqual(example_seed(1, "a"), example_seed(1, "b"))
        self.assertLess(example_seed(1, "a"), 2**64)

    def test_negatives_are_disjoint_from_positives_and_distinct(self) -> None:
        vocabulary = TypeFrequencyTable({f"t{i}": i + 1 for i in range(20)})
        for kind in [NegativeStrategyKind.Uniform, NegativeStrategyKind.Frequency]:
            neg = NegativeSamplingStrategy(kind, 5, vocabulary, 3)
            for i in range(200):
                positives = {f"t{j}" for j in range(i % 7)}
                negatives = sample_negatives(positives, neg, f"ex{i}")
                self.assertEqual(len(negatives), 5)
                self.assertEqual(len(set(negatives)), 5)
                self.assertTrue(positives.isdisjoint(negatives))
                self.assertTrue(set(negatives) <= set(vocabulary.entries))

    def test_small_vocabulary_is_clamped(self) -> None:
        vocabulary = TypeFrequencyTable({"a": 1, "b": 1, "c": 1})
        neg = NegativeSamplingStrategy.frequency(5, vocabulary, 1)
        self.assertEqual(sorted(sample_negatives(["a"], neg, "x")), ["b", "c"])
        self.assertEqual(sample_negatives(["a", "b", "c"], neg, "x"), [])

    def test_deterministic_per_example(self) -> None:
        vocabulary = TypeFrequencyTable({f"t{i}": 1 for i in range(50)})
        neg = NegativeSamplingStrategy.uniform(3, vocabulary, 11)
        first = [sample_negatives([], neg, f"ex{i}") for i in range(20)]
        second = [sample_negatives([], neg, f"ex{i}") for i in reversed(range(20))]
        self.assertEqual(first, list(reversed(second)))

    def test_frequency_first_draw_follows_counts(self) -> None:
        vocabulary = TypeFrequencyTable({"B": 9, "C": 1})
        neg = NegativeSamplingStrategy.frequency(2, vocabulary, 5)
        trials = 100000
        first_draws = Counter(sample_negatives(["A"], neg, f"ex{i}")[0] for i in range(trials))
        self.assertAlmostEqual(first_draws["B"] / trials, 0.9, delta=0.01)

    def test_frequency_excludes_positives_before_weighting(self) -> None:
        vocabulary = TypeFrequencyTable({"A": 90, "B": 9, "C": 1})
        neg = NegativeSamplingStrategy.frequency(1, vocabulary, 8)
        trials = 20000
        draws = Counter(sample_negatives(["A"], neg, f"ex{i}")[0] for i in range(trials))
        self.assertNotIn("A", draws)
        self.assertAlmostEqual(draws["B"] / trials, 0.9, delta=0.01)

    def test_uniform_is_uniform(self) -> None:
        vocabulary = TypeFrequencyTable({"a": 100, "b": 10, "c": 1, "d": 1, "e": 50})
        neg = NegativeSamplingStrategy.uniform(1, vocabulary, 13)
        trials = 20000
        draws = Counter(sample_negatives([], neg, f"ex{i}")[0] for i in range(trials))
        observed = [draws[entity_type] for entity_type in ["a", "b", "c", "d", "e"]]
        self.assertGreater(chisquare(observed).pvalue, 0.001)

    def test_frequency_with_equal_counts_matches_uniform(self) -> None:
        vocabulary = TypeFrequencyTable({f"t{i}": 7 for i in range(12)})
        uniform = NegativeSamplingStrategy.uniform(4, vocabulary, 21)
        frequency = NegativeSamplingStrategy.frequency(4, vocabulary, 21)
        for i in range(500):
            self.assertEqual(
                sample_negatives(["t0"], uniform, f"ex{i}"),
                sample_negatives(["t0"], frequency, f"ex{i}"),
            )

    def test_unknown_pool_types_get_weight_one(self) -> None:
        vocabulary = TypeFrequencyTable({"person": 1000})
        neg = NegativeSamplingStrategy.frequency(1, vocabulary, 2)
        trials = 5000
        draws = Counter(
            sample_negatives([], neg, f"ex{i}", pool=["person", "location"])[0]
            for i in range(trials)
        )
        self.assertLess(draws["location"] / trials, 0.01)

    def test_weighted_sample_takes_everything_in_some_order(self) -> None:
        rng = np.random.default_rng(4)
        actual = weighted_sample_without_replacement(["a", "b", "c"], [5, 1, 3], 10, rng)
        self.assertEqual(sorted(actual), ["a", "b", "c"])
