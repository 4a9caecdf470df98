from enum import Enum

from nerforge import constants
from nerforge.model import AnnotationKind, Passage


class PromptVariant(Enum):
    TypeName = "type"
    Definition = "definition"

    def annotation_kind(self) -> AnnotationKind:
        if self == PromptVariant.Definition:
            return AnnotationKind.Definition
        return AnnotationKind.TypeName


def construction_prompt(variant: PromptVariant) -> str:
    if variant == PromptVariant.Definition:
        return constants.construction_prompt_template.replace(
            constants.type_name_clause, constants.definition_clause
        )
    return constants.construction_prompt_template


def render_construction_prompt(passage: Passage, variant: PromptVariant) -> tuple[str, str]:
    """
    Returns the system and the user message. The passage is substituted once
    and never templated again, so braces in the passage stay literal.
    """
    user = construction_prompt(variant).replace(constants.passage_placeholder, passage.text, 1)
    return constants.construction_system_message, user


def is_known_prompt(system: str, user: str, passage: Passage) -> bool:
    if system != constants.construction_system_message:
        return False
    return any(
        user == construction_prompt(variant).replace(constants.passage_placeholder, passage.text, 1)
        for variant in PromptVariant
    )
