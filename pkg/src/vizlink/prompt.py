"""Assembly of the four-section structured prompt for the chart generator.

Sections, in fixed order: task context (fixed template), dataset
description, the four chain-of-thought steps, conversation context, and
the structured user intents (the message with trigger phrases annotated
by descriptor reference ids). Only the schema summary of the dataset is
included; raw cell values stay local.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import prompt_templates as T
from .dataset import Dataset, describe_dataset
from .interaction import ManipulationDescriptor
from .linking import LinkResult

# Most recent turns carried into the conversation context; older ones drop.
HISTORY_WINDOW = 6


@dataclass(frozen=True)
class HistoryTurn:
    """One prior exchange: the user's message and the agent's explanation.

    code is carried only for the immediately previous turn so the model can
    modify the chart it just produced; older turns ship text only.
    """

    nl: str
    explanation: str
    code: str | None = None

    def to_doc(self) -> dict:
        return {"nl": self.nl, "explanation": self.explanation, "code": self.code}

    @staticmethod
    def from_doc(doc: dict) -> "HistoryTurn":
        return HistoryTurn(doc["nl"], doc["explanation"], doc.get("code"))


@dataclass(frozen=True)
class PromptDocument:
    task_context: str
    dataset_description: str
    cot_steps: tuple[str, str, str, str]
    conversation_context: tuple[HistoryTurn, ...]
    structured_intents: str

    def __post_init__(self):
        if len(self.cot_steps) != 4:
            raise ValueError("exactly four chain-of-thought steps are required")

    def to_text(self) -> str:
        lines = [T.SECTION_TASK_CONTEXT, self.task_context, ""]
        lines += [T.SECTION_DATASET, self.dataset_description, ""]
        lines.append(T.SECTION_COT)
        lines += [f"{i}. {step}" for i, step in enumerate(self.cot_steps, start=1)]
        lines.append("")
        lines.append(T.SECTION_HISTORY)
        if not self.conversation_context:
            lines.append("(none)")
        else:
            for index, turn in enumerate(self.conversation_context, start=1):
                lines.append(f"[turn {index}] user: {turn.nl}")
                lines.append(f"[turn {index}] assistant: {turn.explanation}")
                if turn.code is not None:
                    lines.append(f"[turn {index}] current chart code:")
                    lines.append(f"{T.CODE_TAG_OPEN}{turn.code}{T.CODE_TAG_CLOSE}")
        lines.append("")
        lines += [T.SECTION_INTENTS, self.structured_intents]
        return "\n".join(lines)

    def to_doc(self) -> dict:
        return {
            "taskContext": self.task_context,
            "datasetDescription": self.dataset_description,
            "cotSteps": list(self.cot_steps),
            "conversationContext": [t.to_doc() for t in self.conversation_context],
            "structuredIntents": self.structured_intents,
        }

    @staticmethod
    def from_doc(doc: dict) -> "PromptDocument":
        return PromptDocument(
            task_context=doc["taskContext"],
            dataset_description=doc["datasetDescription"],
            cot_steps=tuple(doc["cotSteps"]),
            conversation_context=tuple(
                HistoryTurn.from_doc(t) for t in doc["conversationContext"]
            ),
            structured_intents=doc["structuredIntents"],
        )


def build_task_context() -> str:
    return T.TASK_CONTEXT


def build_cot_steps() -> list[str]:
    return list(T.COT_STEPS)


def reference_label(descriptors: Sequence[ManipulationDescriptor], descriptor_id: int) -> str:
    """D<k> label for a descriptor, numbered by manipulation order."""
    for position, descriptor in enumerate(descriptors, start=1):
        if descriptor.manipulation_id == descriptor_id:
            return f"D{position}"
    raise KeyError(f"descriptor id {descriptor_id} not in descriptor list")


def render_intents(
    nl: str,
    result: LinkResult,
    descriptors: Sequence[ManipulationDescriptor],
) -> str:
    """The structured-intents text: the message with each trigger annotated
    "[refs: D1, D2]", the linked descriptors as a numbered list, and any
    unmatched descriptors under an explicit unreferenced heading."""
    annotated = nl
    for link in sorted(result.links, key=lambda l: l.trigger.span, reverse=True):
        _, end = link.trigger.span
        labels = ", ".join(
            reference_label(descriptors, i) for i in link.descriptor_ids
        )
        if labels:
            annotated = f"{annotated[:end]} [refs: {labels}]{annotated[end:]}"
    lines = [annotated]
    linked_ids = set(result.all_linked_ids())
    linked = [d for d in descriptors if d.manipulation_id in linked_ids]
    if linked:
        lines.append("Manipulations:")
        for descriptor in linked:
            label = reference_label(descriptors, descriptor.manipulation_id)
            lines.append(f"{label}. {descriptor.text}")
    unmatched = [
        d for d in descriptors if d.manipulation_id in result.unmatched_descriptor_ids
    ]
    if unmatched:
        lines.append("Additional unreferenced manipulations:")
        for descriptor in unmatched:
            label = reference_label(descriptors, descriptor.manipulation_id)
            lines.append(f"{label}. {descriptor.text}")
    return "\n".join(lines)


def build_prompt(
    dataset: Dataset,
    nl: str,
    link_result: LinkResult,
    descriptors: Sequence[ManipulationDescriptor],
    history: Sequence[HistoryTurn] = (),
) -> PromptDocument:
    """Assemble the full prompt document. Pure function of its arguments.

    History is truncated to the most recent HISTORY_WINDOW turns and only
    the last turn keeps its code.
    """
    window = list(history)[-HISTORY_WINDOW:]
    trimmed = tuple(
        turn if index == len(window) - 1 else HistoryTurn(turn.nl, turn.explanation)
        for index, turn in enumerate(window)
    )
    return PromptDocument(
        task_context=build_task_context(),
        dataset_description=describe_dataset(dataset),
        cot_steps=tuple(T.COT_STEPS),
        conversation_context=trimmed,
        structured_intents=render_intents(nl, link_result, descriptors),
    )
