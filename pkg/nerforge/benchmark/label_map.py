import json
import os
from collections.abc import Iterable, Iterator
from typing import Any

from nerforge.errors import ForgeError
from nerforge.model import BenchmarkRecord
from nerforge.simple_logging import eprint

label_map_version = 1


class LabelMapError(ForgeError):
    code = "LabelMapError"


class UnknownLabel(LabelMapError):
    code = "UnknownLabel"


class UnknownDataset(LabelMapError):
    code = "UnknownDataset"


def is_natural_name(name: str) -> bool:
    """Lowercase words separated by single spaces, e.g. 'person' or 'music genre'."""
    return bool(name) and name == name.lower() and " ".join(name.split()) == name


class LabelMap:
    """
    Per dataset mapping of raw labels to natural language type names. A None
    target drops the label: its gold entities are removed and it is never
    queried.
    """

    def __init__(self, datasets: dict[str, dict[str, str | None]]) -> None:
        for dataset, mapping in datasets.items():
            for raw_label, natural in mapping.items():
                if natural is not None and not is_natural_name(natural):
                    raise LabelMapError(
                        f"Natural name {natural!r} for {dataset}/{raw_label} must be lowercase "
                        + "words separated by single spaces"
                    )
        self.datasets = datasets

    def mapping(self, dataset: str) -> dict[str, str | None]:
        if dataset not in self.datasets:
            known = ", ".join(sorted(self.datasets)) or "none"
            raise UnknownDataset(f"No label map for dataset {dataset!r}, known datasets: {known}")
        return self.datasets[dataset]

    def allowed_types(self, dataset: str) -> frozenset[str]:
        return frozenset(
            natural for natural in self.mapping(dataset).values() if natural is not None
        )

    def to_dict(self) -> dict[str, Any]:
        return {"version": label_map_version, "datasets": self.datasets}


def _reject_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    result: dict[str, Any] = {}
    for key, value in pairs:
        if key in result:
            raise LabelMapError(f"Label {key!r} appears more than once")
        result[key] = value
    return result


def load_label_map(path: str) -> LabelMap:
    if not os.path.isfile(path):
        raise LabelMapError("Label map " + path + " does not exist")
    with open(path, encoding="utf-8") as f:
        try:
            data = json.load(f, object_pairs_hook=_reject_duplicates)
        except json.JSONDecodeError as e:
            raise LabelMapError(f"Label map {path} is not valid JSON: {e.msg}") from None
    if not isinstance(data, dict) or data.get("version") != label_map_version:
        raise LabelMapError(f"Label map {path} must be a version {label_map_version} file")
    datasets = data.get("datasets")
    if not isinstance(datasets, dict) or not all(
        isinstance(mapping, dict)
        and all(natural is None or isinstance(natural, str) for natural in mapping.values())
        for mapping in datasets.values()
    ):
        raise LabelMapError(f"Label map {path}: datasets must map raw labels to a name or null")
    return LabelMap(datasets)


def normalize_labels(
    records: Iterable[BenchmarkRecord], label_map: LabelMap
) -> Iterator[BenchmarkRecord]:
    """
    Renames gold labels and drops the ones mapped to null. Every record may be
    asked about every kept label of its dataset, so allowed_types is the same
    for all of them. Records whose gold becomes empty are kept.
    """
    dropped = 0
    count = 0
    for record in records:
        mapping = label_map.mapping(record.dataset)
        raw_labels = {label for label, _ in record.gold} | set(record.allowed_types)
        unknown = sorted(raw_labels - mapping.keys())
        if unknown:
            raise UnknownLabel(
                f"Record {record.id} uses labels missing from the {record.dataset} label map: "
                + ", ".join(unknown)
            )
        gold = []
        for label, mention in record.gold:
            natural = mapping[label]
            if natural is None:
                dropped += 1
                continue
            gold.append((natural, mention))
        count += 1
        yield BenchmarkRecord(
            record.id,
            record.dataset,
            record.domain,
            record.text,
            tuple(gold),
            label_map.allowed_types(record.dataset),
        )
    eprint(f"Normalized labels of {count} records, dropped {dropped} entities with removed labels")
