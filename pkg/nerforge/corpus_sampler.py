import glob
import json
import os
from collections.abc import Iterable, Iterator
from typing import TypeVar

import numpy as np

from nerforge.config import ChunkConfig
from nerforge.errors import MalformedInput
from nerforge.model import Passage, nfc, whitespace_tokens
from nerforge.simple_logging import debug_print, eprint

T = TypeVar("T")


class Article:
    def __init__(self, source: str, text: str) -> None:
        self.source = source
        self.text = text


def passage_id(source: str, article_index: int, chunk_index: int) -> str:
    return f"{source}-{article_index:06d}-{chunk_index:04d}"


def chunk_article(
    article_text: str,
    cfg: ChunkConfig,
    source: str = "article",
    article_index: int = 0,
) -> list[Passage]:
    """
    Splits the article into consecutive passages of at most cfg.max_tokens
    whitespace tokens. Boundaries only fall between tokens, never inside a word,
    and only the last passage may be shorter than the limit.
    """
    tokens = whitespace_tokens(nfc(article_text))
    passages = []
    for chunk_index, start in enumerate(range(0, len(tokens), cfg.max_tokens)):
        chunk = tokens[start : start + cfg.max_tokens]
        passages.append(
            Passage.from_text(
                passage_id(source, article_index, chunk_index), source, " ".join(chunk)
            )
        )
    return passages


def reservoir_sample(items: Iterable[T], sample_size: int, rng: np.random.Generator) -> list[T]:
    """
    Single pass sampling without replacement (Algorithm R), so corpora which
    don't fit into memory can stream through. The n-th item (1-based) replaces
    a random reservoir slot with probability sample_size / n.
    """
    reservoir: list[T] = []
    if sample_size <= 0:
        return reservoir
    for count, item in enumerate(items, start=1):
        if count <= sample_size:
            reservoir.append(item)
            continue
        replace_index = int(rng.integers(0, count))
        if replace_index < sample_size:
            reservoir[replace_index] = item
    return reservoir


def sample_passages(chunks: Iterable[Passage], cfg: ChunkConfig) -> list[Passage]:
    rng = np.random.default_rng(cfg.seed)
    sample = reservoir_sample(chunks, cfg.sample_size, rng)
    return sorted(sample, key=lambda passage: passage.id)


def read_articles(path: str) -> Iterator[Article]:
    """
    Reads a directory of plain text files (one article per file, the file name
    is the source) or a JSONL file with {"source": ..., "text": ...} lines.
    """
    if os.path.isdir(path):
        files = sorted(glob.glob(os.path.join(path, "**", "*.txt"), recursive=True))
        for file in files:
            with open(file, encoding="utf-8") as f:
                yield Article(os.path.splitext(os.path.basename(file))[0], f.read())
        return
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError:
                raise MalformedInput(f"{path}:{line_number}: not valid JSON") from None
            if (
                not isinstance(data, dict)
                or not isinstance(data.get("source"), str)
                or not isinstance(data.get("text"), str)
            ):
                raise MalformedInput(f"{path}:{line_number}: expected {{source, text}} strings")
            yield Article(data["source"], data["text"])


def chunk_corpus(articles: Iterable[Article], cfg: ChunkConfig) -> Iterator[Passage]:
    for article_index, article in enumerate(articles):
        chunks = chunk_article(article.text, cfg, article.source, article_index)
        debug_print("Article", article_index, "from", article.source, "->", len(chunks), "passages")
        yield from chunks


def chunk_and_sample(path: str, cfg: ChunkConfig) -> list[Passage]:
    population = 0

    def counted(passages: Iterable[Passage]) -> Iterator[Passage]:
        nonlocal population
        for passage in passages:
            population += 1
            yield passage

    sample = sample_passages(counted(chunk_corpus(read_articles(path), cfg)), cfg)
    eprint(f"Sampled {len(sample)} of {population} passages (max {cfg.max_tokens} tokens each)")
    return sample
