from nerforge.benchmark.cap_queries import cap_queries
from nerforge.benchmark.documents import read_raw_documents
from nerforge.benchmark.label_map import load_label_map, normalize_labels
from nerforge.benchmark.sentence_splitting import SplitSummary, split_documents
from nerforge.config import BenchmarkConfig
from nerforge.errors import ConfigError
from nerforge.model import BenchmarkRecord


def process_benchmark(path: str, cfg: BenchmarkConfig, seed: int) -> list[BenchmarkRecord]:
    """Raw dataset file -> sentence records with natural labels, capped."""
    if not cfg.dataset:
        raise ConfigError("benchmark.dataset is required to process a benchmark")
    label_map = load_label_map(cfg.labelmap)
    label_map.mapping(cfg.dataset)
    summary = SplitSummary()
    documents = read_raw_documents(path, cfg.input_format, cfg.dataset)
    sentences = split_documents(documents, cfg.dataset, cfg.domain, summary)
    records = list(normalize_labels(sentences, label_map))
    summary.log()
    return cap_queries(records, cfg.cap, seed)
