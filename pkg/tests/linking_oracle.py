"""Brute-force linking oracle and corpus builders.

The oracle restates the linking semantics independently of the engine:
priority-1 feasibility is decided by exhaustive enumeration of sequential
assignments, and flexible matching is re-derived from the keyword table
with different mechanics (min-scan over a remaining set).
"""

from __future__ import annotations

import itertools

from vizlink import LinkResult, ManipulationDescriptor, ManipulationKind, TriggerPhrase
from vizlink.errors import AgentUnavailable

# ---------------------------------------------------------------------------
# corpus helpers

AFFINITY_TEXT = {
    "F": "this trend",
    "B": "this range",
    "C": "these items",
    "N": "this thing",
}

KIND_OF = {
    "C": ManipulationKind.CLICK_SELECT,
    "L": ManipulationKind.LASSO_SELECT,
    "B": ManipulationKind.BOX_SELECT,
    "F": ManipulationKind.FREE_DRAW,
}


def make_descriptors(kind_codes):
    return [
        ManipulationDescriptor(
            manipulation_id=i + 1,
            kind=KIND_OF[code],
            text=f"descriptor {i + 1} ({KIND_OF[code].value})",
        )
        for i, code in enumerate(kind_codes)
    ]


def make_triggers(specs):
    """specs: list of (affinity, cardinality) — builds spans over a joined nl."""
    triggers = []
    offset = 0
    parts = []
    for affinity, cardinality in specs:
        text = AFFINITY_TEXT[affinity]
        triggers.append(TriggerPhrase(text, (offset, offset + len(text)), cardinality))
        parts.append(text)
        offset += len(text) + 2
    return triggers, ", ".join(parts)


class CountingBackend:
    kind = "scripted"

    def __init__(self):
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        raise AgentUnavailable("always down")


# ---------------------------------------------------------------------------
# brute-force oracle (independent of the engine's rule pipeline)

# keyword table duplicated literally from the design: word → kinds it names
ORACLE_KEYWORDS = {
    "trend": ("FreeDraw",),
    "arrow": ("FreeDraw",),
    "drawn": ("FreeDraw",),
    "range": ("BoxSelect",),
    "period": ("BoxSelect",),
    "axis": ("BoxSelect",),
    "point": ("ClickSelect", "LassoSelect"),
    "bar": ("ClickSelect", "LassoSelect"),
    "item": ("ClickSelect", "LassoSelect"),
    "selected": ("ClickSelect", "LassoSelect"),
}


def oracle_keyword_kinds(text):
    kinds = []
    for word in text.lower().split():
        word = word.strip(",.;")
        for candidate in (word, word[:-1] if word.endswith("s") else word):
            for kind in ORACLE_KEYWORDS.get(candidate, ()):
                if kind not in kinds:
                    kinds.append(kind)
    return kinds


def oracle_order_assignments(triggers, descriptors):
    """All full assignments that respect order-monotonicity and exact
    cardinalities, found by exhaustive enumeration of index combinations."""
    ids = [d.manipulation_id for d in descriptors]
    results = []

    def recurse(remaining_triggers, available, acc):
        if not remaining_triggers:
            if not available:
                results.append(list(acc))
            return
        trigger = remaining_triggers[0]
        for combo in itertools.combinations(range(len(available)), trigger.cardinality):
            chosen = [available[i] for i in combo]
            rest = [available[i] for i in range(len(available)) if i not in combo]
            # order-monotone: everything assigned later must come after
            if rest and chosen and any(r < max(chosen) for r in rest):
                continue
            recurse(remaining_triggers[1:], rest, acc + [chosen])

    recurse(list(triggers), ids, [])
    return results


def oracle_flexible(triggers, descriptors):
    """Independent re-derivation of flexible matching: per trigger in span
    order, repeatedly take the lowest-id unclaimed descriptor of a matching
    kind until the cardinality is filled or none remain."""
    remaining = {d.manipulation_id: d.kind.value for d in descriptors}
    links = []
    for trigger in sorted(triggers, key=lambda t: t.span):
        kinds = oracle_keyword_kinds(trigger.text)
        if not kinds:
            continue
        claimed = []
        while len(claimed) < trigger.cardinality:
            candidates = [i for i, k in remaining.items() if k in kinds]
            if not candidates:
                break
            best = min(candidates)
            claimed.append(best)
            del remaining[best]
        if claimed:
            links.append((trigger.text, tuple(claimed), "Flexible",
                          len(claimed) < trigger.cardinality))
    unmatched = tuple(sorted(remaining))
    return links, unmatched


def oracle_link(triggers, descriptors):
    """Highest-priority feasible mapping. Priority 1 applies when exhaustive
    enumeration finds exactly one full sequential assignment; priority 2
    (agent content-matching) is infeasible without an agent; priority 3 is
    flexible keyword matching."""
    full = oracle_order_assignments(triggers, descriptors)
    if len(full) == 1:
        links = [
            (t.text, tuple(ids), "Order", False)
            for t, ids in zip(triggers, full[0])
        ]
        return links, ()
    return oracle_flexible(triggers, descriptors)


def engine_result_view(result: LinkResult):
    links = [
        (l.trigger.text, l.descriptor_ids, l.rule.value, l.partial)
        for l in result.links
    ]
    return links, result.unmatched_descriptor_ids


