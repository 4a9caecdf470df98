from collections import Counter
from collections.abc import Iterable
from fractions import Fraction
from typing import Any

from nerforge.artifacts import read_json
from nerforge.errors import ForgeError, MalformedInput
from nerforge.model import AnnotatedPassage, AnnotationStatus
from nerforge.simple_logging import eprint

types_listed_per_bucket = 10

# (name, upper boundary as fraction of the ranked types)
bucket_boundaries = [
    ("top 1%", Fraction(1, 100)),
    ("1-10%", Fraction(1, 10)),
    ("10-100%", Fraction(1)),
]


class EmptyTable(ForgeError):
    code = "EmptyTable"


class TypeFrequencyTable:
    def __init__(self, entries: dict[str, int] | None = None) -> None:
        self.entries: dict[str, int] = {}
        for entity_type, count in (entries or {}).items():
            if count <= 0:
                raise ValueError(f"Count of '{entity_type}' must be positive, got {count}")
            self.entries[entity_type] = count

    @property
    def total(self) -> int:
        return sum(self.entries.values())

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TypeFrequencyTable) and self.entries == other.entries

    def add(self, entity_type: str, count: int = 1) -> None:
        self.entries[entity_type] = self.entries.get(entity_type, 0) + count

    def merge(self, other: "TypeFrequencyTable") -> "TypeFrequencyTable":
        merged = TypeFrequencyTable(self.entries)
        for entity_type, count in other.entries.items():
            merged.add(entity_type, count)
        return merged

    def ranked(self) -> list[tuple[str, int]]:
        """Descending count, ties broken lexicographically."""
        return sorted(self.entries.items(), key=lambda entry: (-entry[1], entry[0]))

    def to_dict(self) -> dict[str, int]:
        return dict(self.ranked())


class FrequencyBucket:
    def __init__(self, name: str, ranked: list[tuple[str, int]], total: int) -> None:
        self.name = name
        self.type_count = len(ranked)
        self.frequency = sum(count for _, count in ranked)
        self.share = Fraction(self.frequency, total)
        self.types = [entity_type for entity_type, _ in ranked[:types_listed_per_bucket]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "share": float(self.share),
            "type_count": self.type_count,
            "frequency": self.frequency,
            "types": self.types,
        }


def count_types(annotations: Iterable[AnnotatedPassage]) -> TypeFrequencyTable:
    """Counts mention occurrences per raw type string, malformed records add nothing."""
    counts: Counter[str] = Counter()
    for record in annotations:
        if record.status != AnnotationStatus.Ok:
            continue
        counts.update(entity.entity_type for entity in record.entities)
    return TypeFrequencyTable(dict(counts))


def _ceil_rank(type_count: int, boundary: Fraction) -> int:
    return -(-type_count * boundary.numerator // boundary.denominator)


def bucket_report(table: TypeFrequencyTable) -> list[FrequencyBucket]:
    if len(table) == 0:
        raise EmptyTable("The entity type table is empty, there is nothing to report")
    ranked = table.ranked()
    total = table.total
    buckets = []
    start = 0
    for name, boundary in bucket_boundaries:
        end = max(start, _ceil_rank(len(ranked), boundary))
        buckets.append(FrequencyBucket(name, ranked[start:end], total))
        start = end
    return buckets


def dataset_statistics(
    records: list[AnnotatedPassage], table: TypeFrequencyTable
) -> dict[str, Any]:
    malformed = Counter(
        record.malformed_reason for record in records if record.malformed_reason is not None
    )
    return {
        "records": len(records),
        "pairs": sum(1 for record in records if record.status == AnnotationStatus.Ok),
        "malformed": dict(sorted(malformed.items())),
        "entities": table.total,
        "distinct_types": len(table),
    }


def stats_document(records: list[AnnotatedPassage]) -> dict[str, Any]:
    table = count_types(records)
    document: dict[str, Any] = {"statistics": dataset_statistics(records, table)}
    document["buckets"] = (
        [bucket.to_dict() for bucket in bucket_report(table)] if len(table) > 0 else []
    )
    document["types"] = table.to_dict()
    return document


def log_bucket_report(buckets: list[FrequencyBucket]) -> None:
    for bucket in buckets:
        eprint(f"{bucket.name:>8} ({float(bucket.share):.4f}): {', '.join(bucket.types)}")


def load_frequency_table(path: str) -> TypeFrequencyTable:
    document = read_json(path)
    if not isinstance(document, dict) or not isinstance(document.get("types"), dict):
        raise MalformedInput(path + " is not a stats file, the 'types' table is missing")
    types = document["types"]
    if not all(isinstance(count, int) and count > 0 for count in types.values()):
        raise MalformedInput(path + ": type counts must be positive integers")
    return TypeFrequencyTable(types)
