from collections import Counter
from collections.abc import Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor

from tenacity import (
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
    wait_none,
    wait_random_exponential,
)
from tenacity.wait import wait_base

from nerforge.annotation.backends import BackendError, ChatBackend, create_backend
from nerforge.annotation.prompts import PromptVariant, is_known_prompt, render_construction_prompt
from nerforge.annotation.tuple_parser import MalformedOutput, MalformedReason, parse_tuple_list
from nerforge.config import GatewayConfig
from nerforge.errors import ForgeError
from nerforge.model import AnnotatedPassage, AnnotationKind, AnnotationStatus, Passage
from nerforge.simple_logging import debug_print, eprint, warn_print


class DuplicatePassageId(ForgeError):
    code = "DuplicatePassageId"


def annotation_from_response(
    passage: Passage, response_text: str, kind: AnnotationKind
) -> AnnotatedPassage:
    try:
        entities = parse_tuple_list(response_text, kind)
    except MalformedOutput as e:
        debug_print("Malformed output for", passage.id, "-", e)
        return AnnotatedPassage(
            passage, (), response_text, AnnotationStatus.Malformed, e.reason.value
        )
    return AnnotatedPassage(passage, tuple(entities), response_text, AnnotationStatus.Ok)


def _wait_strategy(cfg: GatewayConfig) -> wait_base:
    if cfg.retry_max_wait <= 0:
        return wait_none()
    return wait_random_exponential(multiplier=1, max=cfg.retry_max_wait)


def _check_unique_ids(passages: list[Passage]) -> None:
    counts = Counter(passage.id for passage in passages)
    duplicates = sorted(passage_id for passage_id, count in counts.items() if count > 1)
    if duplicates:
        raise DuplicatePassageId("Duplicated passage ids: " + ", ".join(duplicates[:10]))


def annotate(
    passages: Iterable[Passage],
    variant: PromptVariant,
    cfg: GatewayConfig,
    backend: ChatBackend | None = None,
) -> Iterator[AnnotatedPassage]:
    """
    Yields exactly one record per passage, in input order. Requests run on a
    pool of cfg.max_concurrency threads. A request which still fails after
    cfg.retry_limit retries becomes a Malformed record with reason Transport,
    it never aborts the batch.
    """
    passage_list = list(passages)
    _check_unique_ids(passage_list)
    if backend is None:
        backend = create_backend(cfg)
    kind = variant.annotation_kind()

    def request(passage: Passage) -> AnnotatedPassage:
        system, user = render_construction_prompt(passage, variant)
        if not is_known_prompt(system, user, passage):
            raise ValueError("Refusing to send an unknown prompt for " + passage.id)
        retrying = Retrying(
            stop=stop_after_attempt(cfg.retry_limit + 1),
            wait=_wait_strategy(cfg),
            retry=retry_if_exception_type(BackendError),
            reraise=True,
        )
        try:
            response = retrying(backend.complete, passage.id, system, user)
        except BackendError as e:
            warn_print("Giving up on", passage.id, "after", cfg.retry_limit + 1, "attempts:", e)
            return AnnotatedPassage(
                passage, (), "", AnnotationStatus.Malformed, MalformedReason.Transport.value
            )
        return annotation_from_response(passage, response, kind)

    with ThreadPoolExecutor(max_workers=cfg.max_concurrency) as executor:
        yield from executor.map(request, passage_list)


def annotation_summary(records: Iterable[AnnotatedPassage]) -> dict[str, int]:
    summary: Counter[str] = Counter()
    for record in records:
        summary[record.status.value] += 1
        if record.malformed_reason is not None:
            summary["malformed:" + record.malformed_reason] += 1
    return dict(sorted(summary.items()))


def log_annotation_summary(records: list[AnnotatedPassage]) -> None:
    summary = annotation_summary(records)
    eprint(
        f"Annotated {len(records)} passages:",
        ", ".join(f"{key}={value}" for key, value in summary.items()),
    )
