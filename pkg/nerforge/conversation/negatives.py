import hashlib
from collections.abc import Collection, Sequence
from enum import Enum

import numpy as np

from nerforge import constants
from nerforge.config import BuildConfig
from nerforge.errors import ConfigError
from nerforge.typeset_stats import TypeFrequencyTable


class NegativeStrategyKind(Enum):
    Off = "none"
    Uniform = "uniform"
    Frequency = "frequency"


class NegativeSamplingStrategy:
    """
    How many entity types which don't occur in a passage are queried anyway
    (expected answer "[]") and how they are drawn from the vocabulary.
    """

    def __init__(
        self,
        kind: NegativeStrategyKind = NegativeStrategyKind.Off,
        k: int = 0,
        vocabulary: TypeFrequencyTable | None = None,
        seed: int = constants.default_seed,
    ) -> None:
        if k < 0:
            raise ConfigError("The number of negatives per example must not be negative")
        self.kind = kind
        self.k = k if kind != NegativeStrategyKind.Off else 0
        self.vocabulary = vocabulary if vocabulary is not None else TypeFrequencyTable()
        self.seed = seed

    @staticmethod
    def none() -> "NegativeSamplingStrategy":
        return NegativeSamplingStrategy()

    @staticmethod
    def uniform(
        k: int, vocabulary: TypeFrequencyTable | None, seed: int
    ) -> "NegativeSamplingStrategy":
        return NegativeSamplingStrategy(NegativeStrategyKind.Uniform, k, vocabulary, seed)

    @staticmethod
    def frequency(
        k: int, vocabulary: TypeFrequencyTable | None, seed: int
    ) -> "NegativeSamplingStrategy":
        return NegativeSamplingStrategy(NegativeStrategyKind.Frequency, k, vocabulary, seed)

    @staticmethod
    def from_config(
        cfg: BuildConfig, vocabulary: TypeFrequencyTable | None, seed: int
    ) -> "NegativeSamplingStrategy":
        return NegativeSamplingStrategy(
            NegativeStrategyKind(cfg.negatives), cfg.negatives_per_example, vocabulary, seed
        )

    def __repr__(self) -> str:
        return f"{self.kind.value}(k={self.k}, seed={self.seed})"


def example_seed(seed: int, example_id: str) -> int:
    """
    Every example draws from its own generator, so the negatives of one example
    don't depend on which other examples were built before it.
    """
    digest = hashlib.sha256(f"{seed}:{example_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def weighted_sample_without_replacement(
    candidates: Sequence[str], weights: Sequence[int], count: int, rng: np.random.Generator
) -> list[str]:
    """
    Sequential draws with probability proportional to the integer weights,
    the drawn candidate is removed and the rest renormalized before the next draw.
    Weights are divided by their gcd, equal weights draw exactly like uniform sampling.
    """
    remaining = list(candidates)
    remaining_weights = list(weights)
    result = []
    for _ in range(min(count, len(remaining))):
        reduced = np.asarray(remaining_weights, dtype=np.int64)
        cumulative = np.cumsum(reduced // np.gcd.reduce(reduced))
        draw = int(rng.integers(0, int(cumulative[-1])))
        index = int(np.searchsorted(cumulative, draw, side="right"))
        result.append(remaining.pop(index))
        remaining_weights.pop(index)
    return result


def negative_pool(
    positives: Collection[str], neg: NegativeSamplingStrategy, pool: Collection[str] | None
) -> list[str]:
    candidates = neg.vocabulary.entries.keys() if pool is None else pool
    return sorted(set(candidates) - set(positives))


def sample_negatives(
    positives: Collection[str],
    neg: NegativeSamplingStrategy,
    example_id: str = "",
    pool: Collection[str] | None = None,
) -> list[str]:
    """
    Returns min(k, |pool without positives|) negative types in draw order. The
    pool defaults to the vocabulary, supervised builds pass the allowed types
    of the record instead. Types missing from the vocabulary get weight 1.
    """
    if neg.kind == NegativeStrategyKind.Off or neg.k == 0:
        return []
    candidates = negative_pool(positives, neg, pool)
    if neg.kind == NegativeStrategyKind.Frequency:
        weights = [neg.vocabulary.entries.get(entity_type, 1) for entity_type in candidates]
    else:
        weights = [1] * len(candidates)
    rng = np.random.default_rng(example_seed(neg.seed, example_id))
    return weighted_sample_without_replacement(candidates, weights, neg.k, rng)
