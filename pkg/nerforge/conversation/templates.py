import json
from enum import Enum

from nerforge import constants
from nerforge.model import AnnotationKind, Message, Role


class TemplateVariant(Enum):
    PerType = "per-type"
    AllInOne = "all-in-one"
    Definition = "definition"

    def annotation_kind(self) -> AnnotationKind:
        if self == TemplateVariant.Definition:
            return AnnotationKind.Definition
        return AnnotationKind.TypeName


def text_turn(passage_text: str, dataset: str | None) -> str:
    if dataset is None:
        return constants.text_prefix + passage_text
    return constants.dataset_prefix + dataset + constants.dataset_separator + (
        constants.text_prefix + passage_text
    )


def type_query(entity_type: str) -> str:
    return constants.type_query_prefix + entity_type + constants.type_query_suffix


def all_in_one_query(entity_types: list[str]) -> str:
    return constants.all_in_one_query_prefix + json.dumps(entity_types, ensure_ascii=False)


def mention_list_answer(mentions: list[str]) -> str:
    return json.dumps(mentions, ensure_ascii=False)


def render_messages(
    passage_text: str,
    dataset: str | None,
    positives: dict[str, list[str]],
    negatives: list[str],
    variant: TemplateVariant,
) -> tuple[Message, ...]:
    """
    System preamble, the text turn and its acknowledgement, then the queries:
    positive types in the given order followed by the negatives, whose answer
    is always an empty list. Only the answers to queries are trained on.
    """
    messages = [
        Message(Role.System, constants.conversation_system_message),
        Message(Role.User, text_turn(passage_text, dataset)),
        Message(Role.Assistant, constants.read_acknowledgement),
    ]
    answers = {**positives, **{entity_type: [] for entity_type in negatives}}
    if variant == TemplateVariant.AllInOne:
        if answers:
            messages.append(Message(Role.User, all_in_one_query(list(answers))))
            messages.append(
                Message(Role.Assistant, json.dumps(answers, ensure_ascii=False), in_loss=True)
            )
        return tuple(messages)
    for entity_type, mentions in answers.items():
        messages.append(Message(Role.User, type_query(entity_type)))
        messages.append(Message(Role.Assistant, mention_list_answer(mentions), in_loss=True))
    return tuple(messages)
