from collections.abc import Sequence

import numpy as np

from nerforge import constants
from nerforge.model import BenchmarkRecord
from nerforge.simple_logging import eprint


def query_count(record: BenchmarkRecord) -> int:
    """Every allowed type of a record is asked once."""
    return len(record.allowed_types)


def _take_until_cap(
    records: Sequence[BenchmarkRecord], order: np.ndarray, cap: int
) -> list[int]:
    taken = []
    total = 0
    for index in order:
        pairs = query_count(records[int(index)])
        if total + pairs > cap:
            break
        total += pairs
        taken.append(int(index))
    return taken


def cap_queries(
    records: Sequence[BenchmarkRecord],
    cap: int = constants.max_queries_per_dataset,
    seed: int = constants.default_seed,
) -> list[BenchmarkRecord]:
    """
    Whole records are sampled uniformly without replacement until the next one
    would push the number of passage-query pairs over the cap. We want the
    same evaluation set for each run if the input hasn't changed, so the
    shuffle is seeded and the selection keeps the input order.
    """
    total = sum(query_count(record) for record in records)
    if total <= cap:
        return list(records)
    rng = np.random.default_rng(seed)
    taken = _take_until_cap(records, rng.permutation(len(records)), cap)
    selected = [records[index] for index in sorted(taken)]
    eprint(
        f"Capped {len(records)} records with {total} queries to {len(selected)} records "
        + f"with {sum(query_count(record) for record in selected)} queries"
    )
    return selected
