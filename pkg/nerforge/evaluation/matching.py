from collections import Counter
from collections.abc import Collection, Mapping, Sequence
from fractions import Fraction

from nerforge.model import nfc, whitespace_tokens

Gold = Sequence[tuple[str, str]]
Predictions = Mapping[str, Sequence[str]]

half = Fraction(1, 2)


def _ratio(numerator: Fraction, denominator: Fraction) -> Fraction:
    if denominator == 0:
        return Fraction(0)
    return numerator / denominator


class MatchCounts:
    """
    Exact counts, tp moves in steps of 0.5 under partial matching. Counts of
    records and datasets are merged with +.
    """

    def __init__(
        self, tp: Fraction | int = 0, fp: Fraction | int = 0, fn: Fraction | int = 0
    ) -> None:
        self.tp = Fraction(tp)
        self.fp = Fraction(fp)
        self.fn = Fraction(fn)

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatchCounts):
            return False
        return (self.tp, self.fp, self.fn) == (other.tp, other.fp, other.fn)

    def __repr__(self) -> str:
        return f"MatchCounts(tp={self.tp}, fp={self.fp}, fn={self.fn})"

    def precision(self) -> Fraction:
        return _ratio(self.tp, self.tp + self.fp)

    def recall(self) -> Fraction:
        return _ratio(self.tp, self.tp + self.fn)

    def f1(self) -> Fraction:
        precision = self.precision()
        recall = self.recall()
        return _ratio(2 * precision * recall, precision + recall)


def _prediction_items(
    preds: Predictions, allowed_types: Collection[str] | None
) -> tuple[list[tuple[str, str]], int]:
    """Flattens the predictions in query order and counts the ones of types never asked."""
    items = []
    outside = 0
    for entity_type, mentions in preds.items():
        if allowed_types is not None and entity_type not in allowed_types:
            outside += len(mentions)
            continue
        items.extend((entity_type, mention) for mention in mentions)
    return items, outside


def _remove_exact_matches(
    gold_items: list[tuple[str, str]], pred_items: list[tuple[str, str]]
) -> tuple[int, list[tuple[str, str]], list[tuple[str, str]]]:
    matched = Counter(gold_items) & Counter(pred_items)
    tp = sum(matched.values())

    def remaining(items: list[tuple[str, str]]) -> list[tuple[str, str]]:
        to_consume = Counter(matched)
        result = []
        for item in items:
            if to_consume[item] > 0:
                to_consume[item] -= 1
                continue
            result.append(item)
        return result

    return tp, remaining(gold_items), remaining(pred_items)


def match_strict(
    gold: Gold, preds: Predictions, allowed_types: Collection[str] | None = None
) -> MatchCounts:
    """
    Multiset matching on (type, mention): per key, tp is the smaller of the
    gold and the predicted count. Predictions of types outside allowed_types
    are false positives. Empty gold stays empty, nothing is inserted for it.
    """
    pred_items, outside = _prediction_items(preds, allowed_types)
    tp, remaining_gold, remaining_preds = _remove_exact_matches(list(gold), pred_items)
    return MatchCounts(tp, len(remaining_preds) + outside, len(remaining_gold))


def _shares_token(first: str, second: str) -> bool:
    return not set(whitespace_tokens(nfc(first))).isdisjoint(whitespace_tokens(nfc(second)))


def match_partial(
    gold: Gold, preds: Predictions, allowed_types: Collection[str] | None = None
) -> MatchCounts:
    """
    Exact matches first, then leftover predictions are paired greedily with
    leftover gold of the same type sharing at least one whitespace token,
    walking the gold in order and for each gold item the predictions in
    order. Such a pair is half correct, it counts 0.5 as true positive and
    0.5 each as false positive and false negative.
    """
    pred_items, outside = _prediction_items(preds, allowed_types)
    tp, remaining_gold, remaining_preds = _remove_exact_matches(list(gold), pred_items)
    partial_tp = Fraction(tp)
    pairs = 0
    unmatched_gold = 0
    for gold_type, gold_mention in remaining_gold:
        partner = next(
            (
                i
                for i, (pred_type, pred_mention) in enumerate(remaining_preds)
                if pred_type == gold_type and _shares_token(gold_mention, pred_mention)
            ),
            None,
        )
        if partner is None:
            unmatched_gold += 1
            continue
        remaining_preds.pop(partner)
        partial_tp += half
        pairs += 1
    return MatchCounts(
        partial_tp,
        len(remaining_preds) + outside + half * pairs,
        unmatched_gold + half * pairs,
    )
