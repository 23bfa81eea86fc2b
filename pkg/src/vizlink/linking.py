"""Trigger-phrase extraction and contextual linking of phrases to manipulations.

A trigger phrase is a contiguous span of the user's message that refers to
direct manipulations ("this trend", "the selected data"). Linking maps
triggers to manipulation descriptors by three rules in descending priority:

1. Order: when the trigger cardinalities sum to the descriptor count, the
   descriptors are dealt out sequentially. Never calls an agent.
2. Content: otherwise the linker agent proposes the assignment, which is
   strictly validated (cardinalities, id uniqueness, known ids); any
   violation degrades one rule level instead of trusting the agent.
3. Flexible: greedy keyword matching between trigger words and descriptor
   kinds; descriptors left over are reported unmatched so the generation
   prompt can still carry them.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .agents import AgentBackend, AgentLogEntry, AgentRequest, AgentRole, complete
from .errors import AgentUnavailable, AgentTimeout, RateLimited
from .interaction import ManipulationDescriptor, ManipulationKind

logger = logging.getLogger(__name__)


class LinkRule(str, Enum):
    ORDER = "Order"
    CONTENT = "Content"
    FLEXIBLE = "Flexible"


@dataclass(frozen=True)
class TriggerPhrase:
    """A deictic span of the message and how many manipulations it references."""

    text: str
    span: tuple[int, int]
    cardinality: int
    proposed_ids: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.cardinality < 1:
            raise ValueError("trigger cardinality must be >= 1")

    def validate_against(self, nl: str) -> bool:
        start, end = self.span
        return 0 <= start <= end <= len(nl) and nl[start:end] == self.text

    def to_doc(self) -> dict:
        return {
            "text": self.text,
            "span": list(self.span),
            "cardinality": self.cardinality,
        }

    @staticmethod
    def from_doc(doc: dict) -> "TriggerPhrase":
        return TriggerPhrase(
            text=doc["text"],
            span=tuple(doc["span"]),
            cardinality=doc["cardinality"],
        )


@dataclass(frozen=True)
class IntentLink:
    trigger: TriggerPhrase
    descriptor_ids: tuple[int, ...]
    rule: LinkRule
    partial: bool = False

    def to_doc(self) -> dict:
        return {
            "trigger": self.trigger.to_doc(),
            "descriptorIds": list(self.descriptor_ids),
            "rule": self.rule.value,
            "partial": self.partial,
        }

    @staticmethod
    def from_doc(doc: dict) -> "IntentLink":
        return IntentLink(
            trigger=TriggerPhrase.from_doc(doc["trigger"]),
            descriptor_ids=tuple(doc["descriptorIds"]),
            rule=LinkRule(doc["rule"]),
            partial=doc.get("partial", False),
        )


@dataclass(frozen=True)
class LinkResult:
    links: tuple[IntentLink, ...]
    unmatched_descriptor_ids: tuple[int, ...]

    def all_linked_ids(self) -> tuple[int, ...]:
        return tuple(i for link in self.links for i in link.descriptor_ids)

    def to_doc(self) -> dict:
        return {
            "links": [link.to_doc() for link in self.links],
            "unmatchedDescriptorIds": list(self.unmatched_descriptor_ids),
        }

    @staticmethod
    def from_doc(doc: dict) -> "LinkResult":
        return LinkResult(
            links=tuple(IntentLink.from_doc(d) for d in doc["links"]),
            unmatched_descriptor_ids=tuple(doc["unmatchedDescriptorIds"]),
        )


# Heuristic extractor: deictic determiners recognized when the agent is down.
_SINGLE_DETERMINERS = {"this", "that", "these", "those"}
_THE_COMPOUNDS = {"selected", "highlighted", "first", "second", "zoomed-in"}

# Words that end the noun phrase following a determiner.
_PHRASE_STOPWORDS = {
    "and", "or", "but", "with", "within", "without", "in", "on", "of", "for",
    "to", "from", "at", "by", "as", "into", "onto", "over", "under", "between",
    "against", "using", "after", "before", "while", "when", "where", "then",
    "is", "are", "was", "were", "be", "show", "compare", "highlight", "please",
    "the", "a", "an", "this", "that", "these", "those",
}

_NUMERAL_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}

# Rule-3 keyword table: trigger words that reveal the manipulation kind.
KIND_KEYWORDS: dict[str, tuple[ManipulationKind, ...]] = {
    "trend": (ManipulationKind.FREE_DRAW,),
    "arrow": (ManipulationKind.FREE_DRAW,),
    "drawn": (ManipulationKind.FREE_DRAW,),
    "range": (ManipulationKind.BOX_SELECT,),
    "period": (ManipulationKind.BOX_SELECT,),
    "axis": (ManipulationKind.BOX_SELECT,),
    "point": (ManipulationKind.CLICK_SELECT, ManipulationKind.LASSO_SELECT),
    "bar": (ManipulationKind.CLICK_SELECT, ManipulationKind.LASSO_SELECT),
    "item": (ManipulationKind.CLICK_SELECT, ManipulationKind.LASSO_SELECT),
    "selected": (ManipulationKind.CLICK_SELECT, ManipulationKind.LASSO_SELECT),
}

_TOKEN_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9'-]*")


def _normalize_token(token: str) -> str:
    token = token.lower().strip("'-")
    if token == "axes":
        return "axis"
    return token


def _keyword_kinds(text: str) -> tuple[ManipulationKind, ...]:
    """Kinds suggested by the trigger words, singular/plural tolerant."""
    kinds: list[ManipulationKind] = []
    for raw in _TOKEN_RE.findall(text):
        token = _normalize_token(raw)
        candidates = [token]
        if token.endswith("s") and len(token) > 3:
            candidates.append(token[:-1])
        for candidate in candidates:
            for kind in KIND_KEYWORDS.get(candidate, ()):
                if kind not in kinds:
                    kinds.append(kind)
    return tuple(kinds)


def _phrase_cardinality(
    phrase_tokens: Sequence[str], remaining: int | None
) -> int:
    for token in phrase_tokens:
        normalized = _normalize_token(token)
        if normalized.isdigit():
            return max(1, int(normalized))
        if normalized in _NUMERAL_WORDS:
            return _NUMERAL_WORDS[normalized]
    plural = any(
        t.lower().endswith("s") and not t.lower().endswith("ss") and len(t) > 3
        for t in phrase_tokens
        if t.lower() not in _SINGLE_DETERMINERS
    )
    if plural:
        if remaining is None:
            return 2
        return max(1, min(2, remaining))
    return 1


def heuristic_extract(
    nl: str, descriptor_count: int | None = None
) -> list[TriggerPhrase]:
    """Offline trigger extractor: deictic determiner + up-to-3-token noun phrase."""
    tokens = [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(nl)]
    triggers: list[TriggerPhrase] = []
    used = 0
    i = 0
    while i < len(tokens):
        word = tokens[i][0].lower()
        start_index = i
        matched = False
        if word in _SINGLE_DETERMINERS:
            matched = True
            i += 1
        elif word == "the" and i + 1 < len(tokens) and tokens[i + 1][0].lower() in _THE_COMPOUNDS:
            matched = True
            i += 2
        if not matched:
            i += 1
            continue
        phrase_token_count = 0
        while (
            i < len(tokens)
            and phrase_token_count < 3
            and tokens[i][0].lower() not in _PHRASE_STOPWORDS
        ):
            phrase_token_count += 1
            i += 1
        start = tokens[start_index][1]
        end = tokens[i - 1][2]
        text = nl[start:end]
        remaining = None if descriptor_count is None else descriptor_count - used
        cardinality = _phrase_cardinality(
            [t[0] for t in tokens[start_index:i]], remaining
        )
        triggers.append(TriggerPhrase(text, (start, end), cardinality))
        used += cardinality
    return triggers


LINKER_PROMPT_TEMPLATE = """You connect a user's chart request to the interactions they performed.
Find every trigger phrase in the message: a contiguous word sequence that refers
to a direct manipulation (e.g. "this trend", "the selected data", "these two
time ranges"). For each, report how many manipulations it references and which
descriptor ids it should link to, judging by descriptor content.

Request:
{request_json}

Respond with JSON only:
{{"triggers": [{{"text": "...", "cardinality": 1, "descriptorIds": [1]}}]}}
Use an empty list when the message references no manipulation."""


def build_linker_prompt(
    nl: str, descriptors: Sequence[ManipulationDescriptor]
) -> str:
    request_json = json.dumps(
        {
            "nl": nl,
            "descriptors": [
                {"id": d.manipulation_id, "text": d.text} for d in descriptors
            ],
        },
        ensure_ascii=False,
    )
    return LINKER_PROMPT_TEMPLATE.format(request_json=request_json)


_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*?)\n?```\s*$", re.DOTALL)


def _parse_linker_response(raw: str) -> list[dict] | None:
    text = raw.strip()
    fence = _FENCE_RE.match(text)
    if fence:
        text = fence.group(1).strip()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return None
    if not isinstance(doc, dict) or not isinstance(doc.get("triggers"), list):
        return None
    return doc["triggers"]


def _triggers_from_agent(
    nl: str, entries: list[dict]
) -> list[TriggerPhrase]:
    """Validate agent triggers: recompute spans by substring search, drop
    phrases that are not actually in the message, keep left-to-right order."""
    found: list[TriggerPhrase] = []
    cursor = 0
    for entry in entries:
        if not isinstance(entry, dict):
            continue
        text = entry.get("text")
        if not isinstance(text, str) or not text:
            continue
        cardinality = entry.get("cardinality")
        if not isinstance(cardinality, int) or cardinality < 1:
            cardinality = 1
        start = nl.find(text, cursor)
        if start < 0:
            start = nl.find(text)
        if start < 0:
            logger.warning("dropping hallucinated trigger phrase %r", text)
            continue
        proposed = entry.get("descriptorIds")
        proposed_ids = (
            tuple(i for i in proposed if isinstance(i, int))
            if isinstance(proposed, list)
            else None
        )
        found.append(
            TriggerPhrase(text, (start, start + len(text)), cardinality, proposed_ids)
        )
        cursor = max(cursor, start + len(text))
    found.sort(key=lambda t: t.span)
    non_overlapping: list[TriggerPhrase] = []
    last_end = -1
    for trigger in found:
        if trigger.span[0] >= last_end:
            non_overlapping.append(trigger)
            last_end = trigger.span[1]
    return non_overlapping


def extract_triggers(
    nl: str,
    backend: AgentBackend | None,
    model_id: str = "default",
    descriptors: Sequence[ManipulationDescriptor] = (),
    log: list[AgentLogEntry] | None = None,
) -> list[TriggerPhrase]:
    """Trigger phrases of the message, in span order, spans re-verified.

    Uses the linker agent when available; degrades to the heuristic
    extractor when the agent is unreachable or answers malformed JSON.
    """
    if not nl:
        raise ValueError("nl input must be non-empty")
    if backend is None:
        return heuristic_extract(nl, len(descriptors) or None)
    request = AgentRequest(
        role=AgentRole.LINKER,
        prompt=build_linker_prompt(nl, descriptors),
        model_id=model_id,
    )
    try:
        raw = complete(backend, request, log=log)
    except (AgentUnavailable, AgentTimeout, RateLimited) as exc:
        logger.warning("linker agent unavailable (%s); using heuristic extractor", exc)
        return heuristic_extract(nl, len(descriptors) or None)
    entries = _parse_linker_response(raw)
    if entries is None:
        logger.warning("linker agent returned malformed JSON; using heuristic extractor")
        return heuristic_extract(nl, len(descriptors) or None)
    return _triggers_from_agent(nl, entries)


def _order_assignment(
    triggers: Sequence[TriggerPhrase], descriptor_ids: Sequence[int]
) -> list[IntentLink]:
    links = []
    position = 0
    for trigger in triggers:
        taken = descriptor_ids[position : position + trigger.cardinality]
        links.append(IntentLink(trigger, tuple(taken), LinkRule.ORDER))
        position += trigger.cardinality
    return links


def _validated_content_assignment(
    triggers: Sequence[TriggerPhrase],
    proposals: Sequence[tuple[int, ...] | None],
    descriptor_ids: Sequence[int],
) -> list[IntentLink] | None:
    known = set(descriptor_ids)
    seen: set[int] = set()
    links = []
    for trigger, ids in zip(triggers, proposals):
        if ids is None:
            return None
        if len(ids) != trigger.cardinality:
            return None
        for i in ids:
            if i not in known or i in seen:
                return None
            seen.add(i)
        links.append(IntentLink(trigger, tuple(ids), LinkRule.CONTENT))
    return links


def _content_assignment(
    triggers: Sequence[TriggerPhrase],
    descriptors: Sequence[ManipulationDescriptor],
    backend: AgentBackend | None,
    model_id: str,
    nl: str,
    log: list[AgentLogEntry] | None,
) -> list[IntentLink] | None:
    """Rule 2: agent-proposed assignment, or None when it cannot be validated."""
    proposals: list[tuple[int, ...] | None] = [t.proposed_ids for t in triggers]
    if any(p is None for p in proposals):
        if backend is None:
            return None
        request = AgentRequest(
            role=AgentRole.LINKER,
            prompt=build_linker_prompt(nl, descriptors),
            model_id=model_id,
        )
        try:
            raw = complete(backend, request, log=log)
        except (AgentUnavailable, AgentTimeout, RateLimited):
            return None
        entries = _parse_linker_response(raw)
        if entries is None:
            return None
        by_text: dict[str, list[tuple[int, ...] | None]] = {}
        for entry in entries:
            if isinstance(entry, dict) and isinstance(entry.get("text"), str):
                proposed = entry.get("descriptorIds")
                ids = (
                    tuple(i for i in proposed if isinstance(i, int))
                    if isinstance(proposed, list)
                    else None
                )
                by_text.setdefault(entry["text"], []).append(ids)
        proposals = [
            by_text[t.text].pop(0) if by_text.get(t.text) else None for t in triggers
        ]
    ids = [d.manipulation_id for d in descriptors]
    return _validated_content_assignment(triggers, proposals, ids)


def _flexible_assignment(
    triggers: Sequence[TriggerPhrase],
    descriptors: Sequence[ManipulationDescriptor],
) -> list[IntentLink]:
    """Rule 3: per trigger in span order, claim the earliest unclaimed
    descriptors whose kind matches the trigger's keywords, up to cardinality.
    Triggers whose words reveal no kind get no link."""
    taken: set[int] = set()
    links = []
    for trigger in triggers:
        kinds = _keyword_kinds(trigger.text)
        if not kinds:
            continue
        claimed = []
        for descriptor in descriptors:
            if len(claimed) == trigger.cardinality:
                break
            if descriptor.manipulation_id in taken:
                continue
            if descriptor.kind in kinds:
                claimed.append(descriptor.manipulation_id)
                taken.add(descriptor.manipulation_id)
        if claimed:
            links.append(
                IntentLink(
                    trigger,
                    tuple(claimed),
                    LinkRule.FLEXIBLE,
                    partial=len(claimed) < trigger.cardinality,
                )
            )
    return links


def link(
    triggers: Sequence[TriggerPhrase],
    descriptors: Sequence[ManipulationDescriptor],
    backend: AgentBackend | None = None,
    model_id: str = "default",
    nl: str = "",
    log: list[AgentLogEntry] | None = None,
) -> LinkResult:
    """Map triggers to descriptors by the highest-priority applicable rule.

    Always returns a LinkResult: every descriptor id ends up either in
    exactly one link or in unmatched_descriptor_ids.
    """
    descriptor_ids = [d.manipulation_id for d in descriptors]
    cardinality_sum = sum(t.cardinality for t in triggers)
    if cardinality_sum == len(descriptors):
        links = _order_assignment(triggers, descriptor_ids)
    else:
        links = _content_assignment(
            triggers, descriptors, backend, model_id, nl, log
        )
        if links is None:
            links = _flexible_assignment(triggers, descriptors)
    linked = {i for lk in links for i in lk.descriptor_ids}
    unmatched = tuple(i for i in descriptor_ids if i not in linked)
    return LinkResult(tuple(links), unmatched)


def resolve_links(
    nl: str,
    descriptors: Sequence[ManipulationDescriptor],
    backend: AgentBackend | None,
    model_id: str = "default",
    log: list[AgentLogEntry] | None = None,
) -> LinkResult:
    """Extract triggers and link them in one step (one agent call at most)."""
    triggers = extract_triggers(
        nl, backend, model_id=model_id, descriptors=descriptors, log=log
    )
    return link(
        triggers, descriptors, backend=backend, model_id=model_id, nl=nl, log=log
    )
