from collections import Counter
from collections.abc import Iterable
from fractions import Fraction
from typing import Any

from nerforge import constants
from nerforge.errors import ForgeError
from nerforge.evaluation.matching import MatchCounts, match_partial, match_strict
from nerforge.evaluation.prediction_parser import parse_prediction
from nerforge.model import BenchmarkRecord, RawPrediction
from nerforge.simple_logging import eprint

regimes = ("strict", "partial")


class DuplicatePrediction(ForgeError):
    code = "DuplicatePrediction"


class UnknownRecordId(ForgeError):
    code = "UnknownRecordId"


class DuplicateRecordId(ForgeError):
    code = "DuplicateRecordId"


def format_metric(value: Fraction, decimals: int = constants.metric_decimals) -> str:
    """Exact decimal rendering, ties are rounded to even."""
    scale = 10**decimals
    scaled = round(value * scale)
    return f"{scaled // scale}.{scaled % scale:0{decimals}d}"


def format_count(value: Fraction) -> int | float:
    if value.denominator == 1:
        return value.numerator
    return float(value)


def mean(values: list[Fraction]) -> Fraction:
    if not values:
        return Fraction(0)
    return sum(values, Fraction(0)) / len(values)


class DatasetScore:
    def __init__(self, dataset: str, domain: str) -> None:
        self.dataset = dataset
        self.domain = domain
        self.records = 0
        self.parse_failures = 0
        self.counts = {regime: MatchCounts() for regime in regimes}

    def f1(self, regime: str) -> Fraction:
        return self.counts[regime].f1()

    def to_dict(self) -> dict[str, Any]:
        result: dict[str, Any] = {
            "domain": self.domain,
            "records": self.records,
            "parse_failures": self.parse_failures,
        }
        for regime in regimes:
            counts = self.counts[regime]
            result[regime] = {
                "precision": format_metric(counts.precision()),
                "recall": format_metric(counts.recall()),
                "f1": format_metric(counts.f1()),
                "tp": format_count(counts.tp),
                "fp": format_count(counts.fp),
                "fn": format_count(counts.fn),
            }
        return result


class EvalReport:
    """
    Micro averaged within a dataset, unweighted means across the datasets of
    a domain and across all datasets.
    """

    def __init__(self, per_dataset: dict[str, DatasetScore]) -> None:
        self.per_dataset = dict(sorted(per_dataset.items()))

    def domains(self) -> dict[str, list[DatasetScore]]:
        result: dict[str, list[DatasetScore]] = {}
        for score in self.per_dataset.values():
            result.setdefault(score.domain, []).append(score)
        return dict(sorted(result.items()))

    def domain_f1(self, domain: str, regime: str) -> Fraction:
        return mean([score.f1(regime) for score in self.domains()[domain]])

    def overall_f1(self, regime: str) -> Fraction:
        return mean([score.f1(regime) for score in self.per_dataset.values()])

    def to_dict(self) -> dict[str, Any]:
        return {
            "datasets": {name: score.to_dict() for name, score in self.per_dataset.items()},
            "domains": {
                domain: {
                    "datasets": [score.dataset for score in scores],
                    **{
                        regime + "_f1": format_metric(self.domain_f1(domain, regime))
                        for regime in regimes
                    },
                }
                for domain, scores in self.domains().items()
            },
            "overall": {
                regime + "_f1": format_metric(self.overall_f1(regime)) for regime in regimes
            },
        }

    def summary_lines(self, regime: str) -> list[str]:
        lines = []
        for name, score in self.per_dataset.items():
            counts = score.counts[regime]
            lines.append(
                f"{name}: P={format_metric(counts.precision())} "
                + f"R={format_metric(counts.recall())} F1={format_metric(counts.f1())}"
            )
        for domain in self.domains():
            lines.append(f"domain {domain}: F1={format_metric(self.domain_f1(domain, regime))}")
        lines.append(f"average ({regime}): F1={format_metric(self.overall_f1(regime))}")
        return lines


def _index_records(benchmark: Iterable[BenchmarkRecord]) -> dict[str, BenchmarkRecord]:
    records: dict[str, BenchmarkRecord] = {}
    for record in benchmark:
        if record.id in records:
            raise DuplicateRecordId("Benchmark record " + record.id + " appears more than once")
        records[record.id] = record
    return records


def evaluate(
    benchmark: Iterable[BenchmarkRecord], predictions: Iterable[RawPrediction]
) -> EvalReport:
    """
    Scores every record of the benchmark. A (record, type) query without a
    prediction is an empty extraction, so is an unparsable model output.
    """
    records = _index_records(benchmark)
    by_record: dict[str, dict[str, list[str]]] = {}
    failures: Counter[str] = Counter()
    seen: set[tuple[str, str]] = set()
    for raw in predictions:
        prediction = parse_prediction(raw)
        key = (prediction.record_id, prediction.entity_type)
        if key in seen:
            raise DuplicatePrediction(
                f"More than one prediction for record {key[0]} and type {key[1]!r}"
            )
        seen.add(key)
        if prediction.record_id not in records:
            raise UnknownRecordId(
                f"Prediction for record {prediction.record_id} which isn't in the benchmark"
            )
        if not prediction.parse_ok:
            failures[records[prediction.record_id].dataset] += 1
        mentions = by_record.setdefault(prediction.record_id, {})
        mentions[prediction.entity_type] = list(prediction.mentions)

    per_dataset: dict[str, DatasetScore] = {}
    for record in records.values():
        score = per_dataset.get(record.dataset)
        if score is None:
            score = DatasetScore(record.dataset, record.domain)
            per_dataset[record.dataset] = score
        preds = by_record.get(record.id, {})
        score.records += 1
        score.counts["strict"] += match_strict(record.gold, preds, record.allowed_types)
        score.counts["partial"] += match_partial(record.gold, preds, record.allowed_types)
    for dataset, count in failures.items():
        per_dataset[dataset].parse_failures = count
    return EvalReport(per_dataset)


def log_report(report: EvalReport, partial: bool) -> None:
    eprint()
    for line in report.summary_lines("partial" if partial else "strict"):
        eprint(line)
