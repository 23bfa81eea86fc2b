"""Direct-manipulation events and their textual descriptors.

Click/lasso selections and box selections are described deterministically
from their payload; free-drawing sketches are interpreted by the vision
agent. Box selections apply a 5% threshold per axis, measured as a
fraction of the visible axis pixel extent, below which an axis does not
constrain the selection.
"""

from __future__ import annotations

import base64
import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

import jsonschema

from .agents import AgentBackend, AgentLogEntry, AgentRequest, AgentRole, complete
from .dataset import format_value
from .errors import (
    AgentMalformedResponse,
    AgentUnavailable,
    NoActiveScales,
    NoElements,
    SchemaViolation,
)

logger = logging.getLogger(__name__)

# Fraction of the visible axis pixel extent below which an axis of a box
# selection is not recorded.
BOX_AXIS_THRESHOLD = 0.05

# Datum fields shown in descriptor text before truncating with "…".
DATUM_FIELD_CAP = 8


class ManipulationKind(str, Enum):
    CLICK_SELECT = "ClickSelect"
    LASSO_SELECT = "LassoSelect"
    BOX_SELECT = "BoxSelect"
    FREE_DRAW = "FreeDraw"


SELECTION_KINDS = (ManipulationKind.CLICK_SELECT, ManipulationKind.LASSO_SELECT)


@dataclass(frozen=True)
class ElementRef:
    tag: str
    datum: dict


@dataclass(frozen=True)
class BoxGeometry:
    """Box selection in data coordinates plus per-axis pixel-extent fractions."""

    x1: Any
    x2: Any
    y1: Any
    y2: Any
    fx: float
    fy: float


@dataclass(frozen=True)
class Drawing:
    strokes: tuple[tuple[tuple[float, float], ...], ...]
    screenshot_png: bytes


@dataclass(frozen=True)
class DirectManipulation:
    """One interaction event; exactly the payload of its kind is populated."""

    id: int
    kind: ManipulationKind
    elements: tuple[ElementRef, ...] | None = None
    box: BoxGeometry | None = None
    drawing: Drawing | None = None

    def __post_init__(self):
        expected = {
            ManipulationKind.CLICK_SELECT: "elements",
            ManipulationKind.LASSO_SELECT: "elements",
            ManipulationKind.BOX_SELECT: "box",
            ManipulationKind.FREE_DRAW: "drawing",
        }[self.kind]
        for name in ("elements", "box", "drawing"):
            value = getattr(self, name)
            if (value is not None) != (name == expected):
                raise SchemaViolation(
                    f"{self.kind.value} manipulation must populate exactly {expected!r}"
                )
        if self.box is not None:
            for low, high, axis in (
                (self.box.x1, self.box.x2, "x"),
                (self.box.y1, self.box.y2, "y"),
            ):
                if type(low) is type(high):
                    try:
                        ordered = low <= high
                    except TypeError:
                        ordered = True
                    if not ordered:
                        raise SchemaViolation(f"box {axis}-range is reversed")
            for fraction, axis in ((self.box.fx, "x"), (self.box.fy, "y")):
                if not 0.0 <= fraction <= 1.0:
                    raise SchemaViolation(
                        f"box pixel-extent fraction f{axis} must be in [0, 1]"
                    )


@dataclass(frozen=True)
class ManipulationDescriptor:
    """Concise text for one manipulation plus the data it touched."""

    manipulation_id: int
    kind: ManipulationKind
    text: str
    referenced_data: tuple[dict, ...] = ()
    inferred_intent: str | None = None

    def to_doc(self) -> dict:
        return {
            "manipulationId": self.manipulation_id,
            "kind": self.kind.value,
            "text": self.text,
            "referencedData": [dict(d) for d in self.referenced_data],
            "inferredIntent": self.inferred_intent,
        }

    @staticmethod
    def from_doc(doc: dict) -> "ManipulationDescriptor":
        return ManipulationDescriptor(
            manipulation_id=doc["manipulationId"],
            kind=ManipulationKind(doc["kind"]),
            text=doc["text"],
            referenced_data=tuple(doc.get("referencedData", [])),
            inferred_intent=doc.get("inferredIntent"),
        )


# Wire schema shared bit-exactly with the web client.
MANIPULATION_WIRE_SCHEMA = {
    "type": "object",
    "required": ["id", "kind"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "integer", "minimum": 0},
        "kind": {"enum": [k.value for k in ManipulationKind]},
        "elements": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["tag", "datum"],
                "additionalProperties": False,
                "properties": {
                    "tag": {"type": "string"},
                    "datum": {"type": "object"},
                },
            },
        },
        "box": {
            "type": "object",
            "required": ["x1", "x2", "y1", "y2", "fx", "fy"],
            "additionalProperties": False,
            "properties": {
                "x1": {"type": ["number", "string"]},
                "x2": {"type": ["number", "string"]},
                "y1": {"type": ["number", "string"]},
                "y2": {"type": ["number", "string"]},
                "fx": {"type": "number", "minimum": 0, "maximum": 1},
                "fy": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "drawing": {
            "type": "object",
            "required": ["strokes", "screenshotPngBase64"],
            "additionalProperties": False,
            "properties": {
                "strokes": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {
                            "type": "array",
                            "items": {"type": "number"},
                            "minItems": 2,
                            "maxItems": 2,
                        },
                    },
                },
                "screenshotPngBase64": {"type": "string"},
            },
        },
    },
}


def manipulation_to_wire(m: DirectManipulation) -> dict:
    doc: dict = {"id": m.id, "kind": m.kind.value}
    if m.elements is not None:
        doc["elements"] = [{"tag": e.tag, "datum": dict(e.datum)} for e in m.elements]
    if m.box is not None:
        doc["box"] = {
            "x1": m.box.x1,
            "x2": m.box.x2,
            "y1": m.box.y1,
            "y2": m.box.y2,
            "fx": m.box.fx,
            "fy": m.box.fy,
        }
    if m.drawing is not None:
        doc["drawing"] = {
            "strokes": [[[x, y] for x, y in stroke] for stroke in m.drawing.strokes],
            "screenshotPngBase64": base64.b64encode(m.drawing.screenshot_png).decode(
                "ascii"
            ),
        }
    return doc


def manipulation_from_wire(doc: dict) -> DirectManipulation:
    try:
        jsonschema.validate(doc, MANIPULATION_WIRE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaViolation(f"manipulation payload invalid: {exc.message}") from exc
    kind = ManipulationKind(doc["kind"])
    elements = box = drawing = None
    if "elements" in doc:
        elements = tuple(ElementRef(e["tag"], e["datum"]) for e in doc["elements"])
    if "box" in doc:
        b = doc["box"]
        box = BoxGeometry(b["x1"], b["x2"], b["y1"], b["y2"], b["fx"], b["fy"])
    if "drawing" in doc:
        d = doc["drawing"]
        strokes = tuple(tuple((p[0], p[1]) for p in stroke) for stroke in d["strokes"])
        drawing = Drawing(strokes, base64.b64decode(d["screenshotPngBase64"]))
    return DirectManipulation(
        id=doc["id"], kind=kind, elements=elements, box=box, drawing=drawing
    )


def serialize_datum(datum: dict) -> str:
    """Render a bound datum as {key: value, …} in attribute order, capped."""
    items = list(datum.items())
    parts = [f"{key}: {format_value(value)}" for key, value in items[:DATUM_FIELD_CAP]]
    if len(items) > DATUM_FIELD_CAP:
        parts.append("…")
    return "{" + ", ".join(parts) + "}"


def describe_selection(m: DirectManipulation) -> ManipulationDescriptor:
    """Descriptor for click/lasso selections: the elements and their data."""
    if m.kind not in SELECTION_KINDS:
        raise ValueError(f"describe_selection takes ClickSelect/LassoSelect, got {m.kind}")
    if not m.elements:
        raise NoElements(f"manipulation {m.id} selected no elements")
    tags = sorted({e.tag for e in m.elements})
    tag = "/".join(tags)
    data = tuple(e.datum for e in m.elements)
    if len(m.elements) == 1:
        text = f"user selected a {tag} element, with data item: {serialize_datum(data[0])}"
    else:
        serialized = ", ".join(serialize_datum(d) for d in data)
        text = (
            f"user selected {len(m.elements)} {tag} elements, "
            f"with data items: {serialized}"
        )
    return ManipulationDescriptor(m.id, m.kind, text, referenced_data=data)


def describe_box(
    m: DirectManipulation, scales_available: bool = True
) -> ManipulationDescriptor | None:
    """Descriptor for a box selection, or None when both axes fall below the
    5% extent threshold (the manipulation is then discarded with a warning)."""
    if m.kind != ManipulationKind.BOX_SELECT:
        raise ValueError(f"describe_box takes BoxSelect, got {m.kind}")
    if not scales_available:
        raise NoActiveScales(
            "active visualization did not expose global X/Y scales"
        )
    box = m.box
    keep_x = box.fx >= BOX_AXIS_THRESHOLD
    keep_y = box.fy >= BOX_AXIS_THRESHOLD
    if not keep_x and not keep_y:
        logger.warning(
            "box selection %d below %.0f%% extent on both axes; discarded",
            m.id,
            BOX_AXIS_THRESHOLD * 100,
        )
        return None
    spans = []
    if keep_x:
        spans.append(f"x-axis: [{format_value(box.x1)}, {format_value(box.x2)}]")
    if keep_y:
        spans.append(f"y-axis: [{format_value(box.y1)}, {format_value(box.y2)}]")
    text = "selected data range on the " + " and ".join(spans)
    return ManipulationDescriptor(m.id, m.kind, text)


VISION_PROMPT_TEMPLATE = (
    "The attached image is a screenshot of the current chart with the user's "
    "sketch drawn on top of it. Together with the user's words, interpret what "
    "the sketch manipulates or marks.\n"
    'User said: "{nl}"\n'
    "Reply with a single concise description of the drawn manipulation, e.g. "
    '"an arrow indicating a steady upward trend". Reply either with the bare '
    'description or as JSON {{"description": "...", "intent": "..."}}.'
)


def describe_freedraw(
    m: DirectManipulation,
    nl_context: str,
    backend: AgentBackend,
    model_id: str,
    log: list[AgentLogEntry] | None = None,
) -> ManipulationDescriptor:
    """Descriptor for a free-drawing sketch via the vision agent.

    The agent may answer with bare text or a {"description", "intent"} JSON
    object; bare text doubles as the inferred intent. Strokes stay on the
    manipulation itself for replay.
    """
    if m.kind != ManipulationKind.FREE_DRAW:
        raise ValueError(f"describe_freedraw takes FreeDraw, got {m.kind}")
    if not m.drawing or not m.drawing.screenshot_png:
        raise AgentMalformedResponse(
            f"free drawing {m.id} has no screenshot to interpret"
        )
    request = AgentRequest(
        role=AgentRole.DESCRIPTOR_VISION,
        prompt=VISION_PROMPT_TEMPLATE.format(nl=nl_context),
        model_id=model_id,
        image=m.drawing.screenshot_png,
    )
    raw = complete(backend, request, log=log)
    description, intent = _parse_vision_response(raw)
    return ManipulationDescriptor(m.id, m.kind, description, inferred_intent=intent)


def _parse_vision_response(raw: str) -> tuple[str, str]:
    text = raw.strip()
    if not text:
        raise AgentMalformedResponse("vision agent returned no interpretable text")
    if text.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError:
            doc = None
        if isinstance(doc, dict) and doc.get("description"):
            description = str(doc["description"]).strip()
            intent = str(doc.get("intent") or description).strip()
            if description:
                return description, intent
            raise AgentMalformedResponse("vision agent returned an empty description")
    return text, text


def describe_manipulations(
    manipulations: Sequence[DirectManipulation],
    nl_context: str,
    backend: AgentBackend | None,
    model_id: str,
    scales_available: bool = True,
    log: list[AgentLogEntry] | None = None,
) -> tuple[list[ManipulationDescriptor], list[str]]:
    """Descriptors for a whole message, preserving manipulation id order.

    Returns (descriptors, warnings); box selections under threshold are
    dropped with a warning rather than failing the message.
    """
    ordered = sorted(manipulations, key=lambda m: m.id)
    ids = [m.id for m in ordered]
    if len(set(ids)) != len(ids):
        raise SchemaViolation("manipulation ids within a message must be unique")
    descriptors: list[ManipulationDescriptor] = []
    warnings: list[str] = []
    for m in ordered:
        if m.kind in SELECTION_KINDS:
            descriptors.append(describe_selection(m))
        elif m.kind == ManipulationKind.BOX_SELECT:
            descriptor = describe_box(m, scales_available=scales_available)
            if descriptor is None:
                warnings.append(
                    f"box selection {m.id} spanned less than 5% of both axes "
                    "and was discarded"
                )
            else:
                descriptors.append(descriptor)
        else:
            if backend is None:
                raise AgentUnavailable(
                    f"free drawing {m.id} requires the vision agent"
                )
            descriptors.append(
                describe_freedraw(m, nl_context, backend, model_id, log=log)
            )
    return descriptors, warnings
