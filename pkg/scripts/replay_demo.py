#!/usr/bin/env python3
"""Offline walkthrough of the full pipeline against a scripted backend.

Ingests a tiny energy CSV, runs three turns (plain request, box selection,
free drawing), then saves, reloads, and replays the session to show that
artifacts reproduce byte-identically.
"""

from __future__ import annotations

import json

from vizlink import (
    AgentRole,
    BoxGeometry,
    DirectManipulation,
    Drawing,
    ManipulationKind,
    ModelRegistry,
    Pipeline,
    ScriptedBackend,
    ingest_csv,
    load_session,
    save_session,
)
from vizlink.prompt_templates import SECTION_INTENTS

CSV = b"""day,usage
2024-01-01,41.5
2024-01-02,46.2
2024-01-03,39.8
2024-01-04,61.0
2024-01-05,58.3
2024-01-06,44.9
2024-01-07,40.1
"""

BAR_CODE = """const xScale = d3.scaleBand().domain(data.map(d => d.day)).range([0, vw]).padding(0.2);
const yScale = d3.scaleLinear().domain([0, d3.max(data, d => d.usage)]).range([vh, 0]);
svg.selectAll("rect").data(data).enter().append("rect")
  .attr("x", d => xScale(d.day))
  .attr("y", d => yScale(d.usage))
  .attr("width", xScale.bandwidth())
  .attr("height", d => vh - yScale(d.usage));
return [xScale, yScale];
"""

TURNS = [
    ("Show me daily usage as a bar chart", []),
    (
        "Zoom into this range",
        [
            DirectManipulation(
                id=1,
                kind=ManipulationKind.BOX_SELECT,
                box=BoxGeometry("2024-01-03", "2024-01-06", 0.0, 70.0, 0.42, 0.03),
            )
        ],
    ),
    (
        "Filter out everything below this threshold",
        [
            DirectManipulation(
                id=2,
                kind=ManipulationKind.FREE_DRAW,
                drawing=Drawing((((0.0, 50.0), (300.0, 50.0)),), b"demo-png"),
            )
        ],
    ),
]


def responder(request) -> str | None:
    if request.role == AgentRole.VIS_GENERATOR:
        intents = request.prompt.split(SECTION_INTENTS)[-1]
        for nl, _ in TURNS:
            if nl.split(" this ")[0] in intents:
                return f"Bars encode usage per day.\n<D3>{BAR_CODE}</D3>"
        return None
    if request.role == AgentRole.LINKER:
        if "Zoom into this range" in request.prompt:
            return json.dumps(
                {"triggers": [{"text": "this range", "cardinality": 1, "descriptorIds": [1]}]}
            )
        if "this threshold" in request.prompt:
            return json.dumps(
                {"triggers": [{"text": "this threshold", "cardinality": 1, "descriptorIds": [2]}]}
            )
        return json.dumps({"triggers": []})
    if request.role == AgentRole.DESCRIPTOR_VISION:
        return "a horizontal threshold line at 50 kWh"
    return None


def main():
    dataset = ingest_csv(CSV, "demo energy")
    pipeline = Pipeline(
        ScriptedBackend(responder=responder), ModelRegistry(("scripted-default",))
    )
    session = pipeline.create_session(dataset)
    for nl, manipulations in TURNS:
        entry = pipeline.append_entry(session, dataset, nl, manipulations)
        status = entry.artifact.failure.kind.value if entry.artifact.failure else "ok"
        print(f"turn {entry.index}: {nl!r}")
        for descriptor in entry.descriptors:
            print(f"  descriptor: {descriptor.text}")
        for link in entry.link_result.links:
            print(
                f"  link[{link.rule.value}]: {link.trigger.text!r} -> {list(link.descriptor_ids)}"
            )
        print(f"  artifact: {status}, processed {len(entry.artifact.processed_code)} chars")

    loaded = load_session(save_session(session))
    replayed = pipeline.replay(loaded, dataset)
    identical = all(
        a.to_doc() == e.artifact.to_doc() for a, e in zip(replayed, session.entries)
    )
    print(f"save -> load -> replay identical artifacts: {identical}")


if __name__ == "__main__":
    main()
