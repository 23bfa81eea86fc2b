"""Scripted end-to-end flows: stock-analysis and energy-analysis sessions.

Each flow is a list of TurnSpecs plus a deterministic responder that
answers the three agent roles from canned material, keyed purely off the
request content (so replays reproduce byte-identical artifacts).
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from pathlib import Path

from vizlink import (
    AgentRole,
    BoxGeometry,
    DirectManipulation,
    Drawing,
    ElementRef,
    ManipulationKind,
    ScriptedBackend,
    ingest_csv,
)
from vizlink.prompt_templates import SECTION_INTENTS

from datagen import build_netflix_csv, build_steel_csv

CHARTS = Path(__file__).parent / "fixtures" / "charts"
PNG = b"\x89PNG\r\n\x1a\n" + b"flowsketch"

STRING_SENTINEL = "XSECRETX"
# mid-range decimals for each seeded numeric column; never a range endpoint
NUMBER_SENTINELS = ("7654321.5", "63.191827")


def chart(name: str) -> str:
    return (CHARTS / name).read_text()


@dataclass(frozen=True)
class TurnSpec:
    nl: str
    manipulations: tuple[DirectManipulation, ...]
    code: str
    explanation: str
    linker_triggers: tuple[dict, ...] = ()
    vision_text: str | None = None


def _freedraw(mid: int) -> DirectManipulation:
    return DirectManipulation(
        id=mid,
        kind=ManipulationKind.FREE_DRAW,
        drawing=Drawing((((10.0, 80.0), (120.0, 20.0)),), PNG),
    )


NETFLIX_FLOW = (
    TurnSpec(
        nl="Show me the stock price over the last five years",
        manipulations=(),
        code=chart("line_basic.js"),
        explanation="A line chart with time on the x-axis and closing price on the y-axis.",
    ),
    TurnSpec(
        nl="Highlight all the upward trends similar to this trend",
        manipulations=(_freedraw(1),),
        code=chart("area_threshold.js"),
        explanation="Segments matching the sketched rise are emphasized in red.",
        linker_triggers=(
            {"text": "this trend", "cardinality": 1, "descriptorIds": [1]},
        ),
        vision_text="an arrow indicating a steady upward trend",
    ),
    TurnSpec(
        nl="Add Bollinger Bands with a 20-day moving average to the chart",
        manipulations=(),
        code=chart("area_basic.js"),
        explanation="The shaded band spans two standard deviations around the moving average.",
    ),
    TurnSpec(
        nl="Zoom into this range and also visualize the trading volume in the same chart",
        manipulations=(
            DirectManipulation(
                id=2,
                kind=ManipulationKind.BOX_SELECT,
                box=BoxGeometry("2021-10-01", "2022-07-01", 160.0, 700.0, 0.40, 0.02),
            ),
        ),
        code=chart("line_multi.js"),
        explanation="The selected window is expanded with volume on a second axis.",
        linker_triggers=(
            {"text": "this range", "cardinality": 1, "descriptorIds": [2]},
        ),
    ),
)


def _heat_cell(month: str, metric: str, value: float) -> dict:
    return {"month": month, "metric": metric, "value": value}


STEEL_FLOW = (
    TurnSpec(
        nl="Use a heatmap to visualize the value for all attributes aggregated by month",
        manipulations=(),
        code=chart("heatmap_months.js"),
        explanation="Darker cells mean higher monthly aggregates.",
    ),
    TurnSpec(
        nl="Examine the correlation between CO2 and energy usage for these months",
        manipulations=(
            DirectManipulation(
                id=1,
                kind=ManipulationKind.CLICK_SELECT,
                elements=(ElementRef("rect", _heat_cell("Jan", "Usage_kWh", 81.2)),),
            ),
            DirectManipulation(
                id=2,
                kind=ManipulationKind.CLICK_SELECT,
                elements=(ElementRef("rect", _heat_cell("Feb", "Usage_kWh", 77.9)),),
            ),
            DirectManipulation(
                id=3,
                kind=ManipulationKind.CLICK_SELECT,
                elements=(ElementRef("rect", _heat_cell("Mar", "Usage_kWh", 64.3)),),
            ),
        ),
        code=chart("scatter_basic.js"),
        explanation="Each point is a day; usage on x, emissions on y.",
        linker_triggers=(
            {"text": "these months", "cardinality": 3, "descriptorIds": [1, 2, 3]},
        ),
    ),
    TurnSpec(
        nl="Visualize energy usage per weekday for the selected points",
        manipulations=(
            DirectManipulation(
                id=4,
                kind=ManipulationKind.LASSO_SELECT,
                elements=tuple(
                    ElementRef("circle", {"x": 40.0 + k, "y": 0.016 + k / 1000})
                    for k in range(5)
                ),
            ),
        ),
        code=chart("bar_basic.js"),
        explanation="Bars aggregate usage by weekday over the lassoed days.",
        linker_triggers=(
            {"text": "the selected points", "cardinality": 1, "descriptorIds": [4]},
        ),
    ),
    TurnSpec(
        nl="Add a subplot displaying the load status levels for the selected period",
        manipulations=(_freedraw(5),),
        code=chart("bar_aggregated.js"),
        explanation="A compact strip below the main chart shows the load level.",
        linker_triggers=(
            {"text": "the selected period", "cardinality": 1, "descriptorIds": [5]},
        ),
        vision_text=(
            "a rectangle at the bottom of the chart, right above the x-axis "
            "with a height of 10 kWh"
        ),
    ),
)


def flow_backend(*flows: tuple[TurnSpec, ...]) -> ScriptedBackend:
    """Scripted backend answering all three roles for the given flows."""
    specs = [spec for flow in flows for spec in flow]

    def responder(request) -> str | None:
        if request.role == AgentRole.VIS_GENERATOR:
            intents = request.prompt.split(SECTION_INTENTS)[-1]
            # trigger annotations are spliced into the message; strip them
            # so the original turn text is matchable again
            intents = re.sub(r" \[refs: [^\]]*\]", "", intents)
            for spec in specs:
                if spec.nl in intents:
                    return f"{spec.explanation}\n<D3>{spec.code}</D3>"
            return None
        if request.role == AgentRole.LINKER:
            for spec in specs:
                if json.dumps(spec.nl) in request.prompt:
                    return json.dumps({"triggers": list(spec.linker_triggers)})
            return None
        if request.role == AgentRole.DESCRIPTOR_VISION:
            for spec in specs:
                if spec.vision_text is not None and spec.nl in request.prompt:
                    return spec.vision_text
            return None
        return None

    return ScriptedBackend(responder=responder)


def _seed_note_column(
    csv_bytes: bytes, sentinel_row: int, numeric_column: int, number_sentinel: str
) -> bytes:
    """Append a high-cardinality nominal column carrying the string sentinel
    (which sorts after the 20 values shown in descriptions) and plant the
    numeric sentinel mid-range in the named numeric column."""
    text = csv_bytes.decode("utf-8").strip().splitlines()
    header = text[0] + ",Note"
    rng = random.Random(4242)
    rows = []
    for index, line in enumerate(text[1:]):
        if index == sentinel_row:
            note = STRING_SENTINEL
        else:
            # "NOTE_xx" sorts before the sentinel, keeping it past the
            # 20-value cap of the description's nominal list
            note = f"NOTE_{rng.randrange(0, 40):02d}"
        rows.append(line + "," + note)
    # numeric sentinel in an untouched row; mid-range, so never an endpoint
    target = sentinel_row + 7
    fields = rows[target].split(",")
    fields[numeric_column] = number_sentinel
    rows[target] = ",".join(fields)
    return ("\n".join([header] + rows) + "\n").encode("utf-8")


def seeded_netflix_dataset():
    return ingest_csv(
        _seed_note_column(
            build_netflix_csv(), sentinel_row=137, numeric_column=6,
            number_sentinel=NUMBER_SENTINELS[0],
        ),
        "Netflix Stock (seeded)",  # Volume carries the numeric sentinel
        dataset_id="netflix-seeded",
    )


def seeded_steel_dataset():
    return ingest_csv(
        _seed_note_column(
            build_steel_csv(2000), sentinel_row=400, numeric_column=1,
            number_sentinel=NUMBER_SENTINELS[1],
        ),
        "Steel Manufacturing (seeded)",  # Usage_kWh carries the numeric sentinel
        dataset_id="steel-seeded",
    )
