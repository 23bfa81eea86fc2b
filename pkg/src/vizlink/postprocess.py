"""Turn raw generator responses into validated, interaction-ready artifacts.

The pipeline is extract → validate → rewrite. Code analysis runs on a
lightweight tokenizer plus call-chain pattern matching, not a full
grammar: the transforms we need are local patterns, and model output is
too quirky for a brittle parser. Undefined-variable detection is
best-effort (declared set vs. used set); false negatives are acceptable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import CodeParseFailure, MissingCodeTag
from .prompt_templates import (
    CODE_TAG_CLOSE,
    CODE_TAG_OPEN,
    DATA_GLOBAL,
    ROOT_GLOBAL,
    VIEWPORT_HEIGHT_GLOBAL,
    VIEWPORT_WIDTH_GLOBAL,
    X_SCALE_NAME,
    Y_SCALE_NAME,
)


class FailureKind(str, Enum):
    MISSING_CODE_TAG = "MissingCodeTag"
    UNDEFINED_VARIABLE = "UndefinedVariable"
    UNKNOWN_FUNCTION = "UnknownFunction"
    MISSING_GLOBAL_SCALES = "MissingGlobalScales"
    LAYOUT_SUSPECT = "LayoutSuspect"


@dataclass(frozen=True)
class FailureClass:
    kind: FailureKind
    detail: str

    def to_doc(self) -> dict:
        return {"kind": self.kind.value, "detail": self.detail}

    @staticmethod
    def from_doc(doc: dict) -> "FailureClass":
        return FailureClass(FailureKind(doc["kind"]), doc["detail"])


@dataclass(frozen=True)
class ValidationFlags:
    has_root_global: bool
    has_viewport_globals: bool
    returns_global_scales: bool

    def all_ok(self) -> bool:
        return (
            self.has_root_global
            and self.has_viewport_globals
            and self.returns_global_scales
        )

    def to_doc(self) -> dict:
        return {
            "hasRootGlobal": self.has_root_global,
            "hasViewportGlobals": self.has_viewport_globals,
            "returnsGlobalScales": self.returns_global_scales,
        }

    @staticmethod
    def from_doc(doc: dict) -> "ValidationFlags":
        return ValidationFlags(
            doc["hasRootGlobal"], doc["hasViewportGlobals"], doc["returnsGlobalScales"]
        )


@dataclass(frozen=True)
class VisualizationArtifact:
    raw_response: str
    explanation: str
    extracted_code: str
    processed_code: str
    validation: ValidationFlags
    failure: FailureClass | None = None
    warnings: tuple[str, ...] = ()

    def to_doc(self) -> dict:
        return {
            "rawResponse": self.raw_response,
            "explanation": self.explanation,
            "extractedCode": self.extracted_code,
            "processedCode": self.processed_code,
            "validation": self.validation.to_doc(),
            "failure": self.failure.to_doc() if self.failure else None,
            "warnings": list(self.warnings),
        }

    @staticmethod
    def from_doc(doc: dict) -> "VisualizationArtifact":
        return VisualizationArtifact(
            raw_response=doc["rawResponse"],
            explanation=doc["explanation"],
            extracted_code=doc["extractedCode"],
            processed_code=doc["processedCode"],
            validation=ValidationFlags.from_doc(doc["validation"]),
            failure=FailureClass.from_doc(doc["failure"]) if doc.get("failure") else None,
            warnings=tuple(doc.get("warnings", ())),
        )


# ---------------------------------------------------------------------------
# tokenizer

@dataclass(frozen=True)
class Token:
    type: str  # ident | num | str | tmpl | punct
    text: str
    start: int
    end: int


_IDENT_START = re.compile(r"[A-Za-z_$]")
_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_NUM_RE = re.compile(r"0[xXbBoO][0-9a-fA-F]+|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


def tokenize(code: str) -> list[Token]:
    """Tokenize JS-ish chart code; raises CodeParseFailure on unterminated
    strings, templates, or block comments."""
    tokens: list[Token] = []
    i = 0
    n = len(code)
    while i < n:
        ch = code[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch == "/" and i + 1 < n and code[i + 1] == "/":
            end = code.find("\n", i)
            i = n if end < 0 else end + 1
            continue
        if ch == "/" and i + 1 < n and code[i + 1] == "*":
            end = code.find("*/", i + 2)
            if end < 0:
                raise CodeParseFailure(f"unterminated block comment at offset {i}")
            i = end + 2
            continue
        if ch in "'\"":
            j = i + 1
            while j < n:
                if code[j] == "\\":
                    j += 2
                    continue
                if code[j] == ch:
                    break
                if code[j] == "\n":
                    raise CodeParseFailure(f"unterminated string at offset {i}")
                j += 1
            if j >= n:
                raise CodeParseFailure(f"unterminated string at offset {i}")
            tokens.append(Token("str", code[i : j + 1], i, j + 1))
            i = j + 1
            continue
        if ch == "`":
            j = i + 1
            while j < n:
                if code[j] == "\\":
                    j += 2
                    continue
                if code[j] == "`":
                    break
                j += 1
            if j >= n:
                raise CodeParseFailure(f"unterminated template literal at offset {i}")
            tokens.append(Token("tmpl", code[i : j + 1], i, j + 1))
            i = j + 1
            continue
        num = _NUM_RE.match(code, i)
        if num and (ch.isdigit() or (ch == "." and i + 1 < n and code[i + 1].isdigit())):
            tokens.append(Token("num", num.group(0), i, num.end()))
            i = num.end()
            continue
        if _IDENT_START.match(ch):
            ident = _IDENT_RE.match(code, i)
            tokens.append(Token("ident", ident.group(0), i, ident.end()))
            i = ident.end()
            continue
        if code.startswith("...", i):
            tokens.append(Token("punct", "...", i, i + 3))
            i += 3
            continue
        if code.startswith("=>", i):
            tokens.append(Token("punct", "=>", i, i + 2))
            i += 2
            continue
        tokens.append(Token("punct", ch, i, i + 1))
        i += 1
    return tokens


_JS_KEYWORDS = {
    "var", "let", "const", "function", "return", "if", "else", "for", "while",
    "do", "break", "continue", "new", "delete", "typeof", "instanceof", "in",
    "of", "class", "extends", "super", "this", "null", "undefined", "true",
    "false", "switch", "case", "default", "try", "catch", "finally", "throw",
    "void", "yield", "async", "await", "static", "get", "set",
}

_JS_BUILTINS = {
    "Math", "JSON", "Date", "Object", "Array", "String", "Number", "Boolean",
    "parseFloat", "parseInt", "isNaN", "isFinite", "NaN", "Infinity",
    "console", "Map", "Set", "Promise", "Symbol", "RegExp", "Error",
    "TypeError", "RangeError", "Intl", "arguments",
}

INJECTED_GLOBALS = {
    ROOT_GLOBAL,
    VIEWPORT_WIDTH_GLOBAL,
    VIEWPORT_HEIGHT_GLOBAL,
    DATA_GLOBAL,
}

# Permitted d3 entry points (SVG-targeting selection/scale/shape/axis idiom).
ALLOWED_API_VERSION = "1"
ALLOWED_D3_CALLS = frozenset({
    # selections
    "select", "selectAll", "create", "pointer",
    # statistics and array helpers
    "min", "max", "extent", "sum", "mean", "median", "deviation", "variance",
    "quantile", "range", "ticks", "tickStep", "ascending", "descending",
    "group", "groups", "rollup", "rollups", "sort", "bisector", "bisect",
    "bisectLeft", "bisectRight", "cross", "zip", "pairs", "count", "cumsum",
    # scales
    "scaleLinear", "scaleTime", "scaleUtc", "scaleBand", "scalePoint",
    "scaleOrdinal", "scaleSequential", "scaleSqrt", "scalePow", "scaleLog",
    "scaleSymlog", "scaleIdentity", "scaleRadial", "scaleQuantize",
    "scaleQuantile", "scaleThreshold", "scaleDiverging",
    # axes
    "axisTop", "axisRight", "axisBottom", "axisLeft",
    # shapes
    "line", "area", "arc", "pie", "stack", "histogram", "bin", "symbol",
    "curveBasis", "curveCardinal", "curveCatmullRom", "curveLinear",
    "curveMonotoneX", "curveMonotoneY", "curveNatural", "curveStep",
    "curveStepAfter", "curveStepBefore",
    # formatting and time
    "format", "formatPrefix", "precisionFixed", "precisionRound",
    "timeFormat", "timeParse", "utcFormat", "utcParse", "isoParse",
    "timeDay", "timeDays", "timeWeek", "timeMonth", "timeMonths", "timeYear",
    "timeYears", "timeHour", "timeMinute", "timeSecond", "timeTicks",
    # color
    "color", "rgb", "hsl", "lab", "interpolate", "interpolateNumber",
    "interpolateRound", "interpolateRgb", "interpolateBlues",
    "interpolateReds", "interpolateGreens", "interpolateOranges",
    "interpolatePurples", "interpolateViridis", "interpolateTurbo",
    "interpolateRdYlBu", "interpolateRdBu", "interpolateSpectral",
    "interpolateYlGnBu", "interpolateYlOrRd", "interpolateCool",
    "interpolateWarm", "interpolatePlasma", "interpolateInferno",
    "interpolateCividis", "interpolateMagma", "quantize",
    # hierarchies occasionally used for treemap-style charts
    "hierarchy", "treemap", "pack", "cluster", "tree",
})


def _matching_paren(tokens: list[Token], open_index: int) -> int | None:
    depth = 0
    for j in range(open_index, len(tokens)):
        text = tokens[j].text
        if tokens[j].type == "punct":
            if text == "(":
                depth += 1
            elif text == ")":
                depth -= 1
                if depth == 0:
                    return j
    return None


def _collect_declarations(tokens: list[Token]) -> set[str]:
    declared: set[str] = set()
    n = len(tokens)

    def collect_group(start: int, end: int):
        for j in range(start, end):
            if tokens[j].type != "ident" or tokens[j].text in _JS_KEYWORDS:
                continue
            if j > start and tokens[j - 1].type == "punct" and tokens[j - 1].text == ".":
                continue
            declared.add(tokens[j].text)

    for i, tok in enumerate(tokens):
        if tok.type == "punct" and tok.text == "=>":
            if i > 0 and tokens[i - 1].type == "ident":
                declared.add(tokens[i - 1].text)
            elif i > 0 and tokens[i - 1].text == ")":
                depth = 0
                j = i - 1
                while j >= 0:
                    if tokens[j].text == ")":
                        depth += 1
                    elif tokens[j].text == "(":
                        depth -= 1
                        if depth == 0:
                            break
                    j -= 1
                if j >= 0:
                    collect_group(j + 1, i - 1)
            continue
        if tok.type != "ident":
            continue
        if tok.text in ("var", "let", "const"):
            j = i + 1
            depth = 0
            while j < n:
                tj = tokens[j]
                if tj.type == "punct":
                    if tj.text in "([{":
                        depth += 1
                    elif tj.text in ")]}":
                        if depth == 0:
                            break
                        depth -= 1
                    elif tj.text == "=" and depth == 0:
                        # skip the initializer expression
                        j += 1
                        inner = 0
                        while j < n:
                            tk = tokens[j]
                            if tk.type == "punct":
                                if tk.text in "([{":
                                    inner += 1
                                elif tk.text in ")]}":
                                    if inner == 0:
                                        break
                                    inner -= 1
                                elif tk.text in (",", ";") and inner == 0:
                                    break
                            j += 1
                        continue
                    elif tj.text == ";" and depth == 0:
                        break
                elif tj.type == "ident":
                    if tj.text in ("of", "in") and depth == 0:
                        break
                    if not (tokens[j - 1].type == "punct" and tokens[j - 1].text == "."):
                        if tj.text not in _JS_KEYWORDS:
                            declared.add(tj.text)
                j += 1
        elif tok.text == "function":
            j = i + 1
            if j < n and tokens[j].type == "ident":
                declared.add(tokens[j].text)
                j += 1
            if j < n and tokens[j].text == "(":
                close = _matching_paren(tokens, j)
                if close is not None:
                    collect_group(j + 1, close)
        elif tok.text == "catch":
            if i + 1 < n and tokens[i + 1].text == "(":
                close = _matching_paren(tokens, i + 1)
                if close is not None:
                    collect_group(i + 2, close)
        elif tok.text == "class":
            if i + 1 < n and tokens[i + 1].type == "ident":
                declared.add(tokens[i + 1].text)
    return declared


def _collect_uses(tokens: list[Token]) -> list[tuple[str, int]]:
    uses = []
    for i, tok in enumerate(tokens):
        if tok.type != "ident" or tok.text in _JS_KEYWORDS:
            continue
        prev = tokens[i - 1] if i > 0 else None
        nxt = tokens[i + 1] if i + 1 < len(tokens) else None
        if prev and prev.type == "punct" and prev.text == ".":
            continue  # property access
        if (
            prev
            and prev.type == "punct"
            and prev.text in ("{", ",")
            and nxt
            and nxt.type == "punct"
            and nxt.text in (":", "(")
        ):
            continue  # object literal key or method shorthand
        uses.append((tok.text, i))
    return uses


def undefined_identifiers(tokens: list[Token]) -> list[str]:
    """Identifiers used but never declared and not injected/builtin, in
    first-use order. Best-effort: over-collecting declarations is fine."""
    declared = _collect_declarations(tokens)
    known = declared | _JS_BUILTINS | INJECTED_GLOBALS | {"d3"}
    seen: list[str] = []
    for name, _ in _collect_uses(tokens):
        if name not in known and name not in seen:
            seen.append(name)
    return seen


def unknown_d3_calls(tokens: list[Token]) -> list[str]:
    """Direct d3.<name>(...) calls whose entry point is not in the manifest."""
    bad: list[str] = []
    for i in range(len(tokens) - 3):
        if (
            tokens[i].type == "ident"
            and tokens[i].text == "d3"
            and tokens[i + 1].text == "."
            and tokens[i + 2].type == "ident"
            and tokens[i + 3].text == "("
        ):
            name = tokens[i + 2].text
            if name not in ALLOWED_D3_CALLS and name not in bad:
                bad.append(name)
    return bad


def layout_suspects(tokens: list[Token]) -> list[str]:
    """Root-container sizing that ignores the injected viewport: literal
    numbers in svg.attr("width"/"height", …) with no vw/vh reference."""
    findings: list[str] = []
    for i in range(len(tokens) - 5):
        if not (
            tokens[i].type == "ident"
            and tokens[i].text == ROOT_GLOBAL
            and tokens[i + 1].text == "."
            and tokens[i + 2].text == "attr"
            and tokens[i + 3].text == "("
            and tokens[i + 4].type == "str"
            and tokens[i + 4].text[1:-1] in ("width", "height")
        ):
            continue
        close = _matching_paren(tokens, i + 3)
        if close is None:
            continue
        args = tokens[i + 5 : close]
        has_number = any(t.type == "num" for t in args)
        has_viewport = any(
            t.type == "ident"
            and t.text in (VIEWPORT_WIDTH_GLOBAL, VIEWPORT_HEIGHT_GLOBAL)
            for t in args
        )
        if has_number and not has_viewport:
            findings.append(
                f"svg {tokens[i + 4].text[1:-1]} set to a literal instead of the viewport"
            )
    return findings


# ---------------------------------------------------------------------------
# operations

_FENCED_RE = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.DOTALL)


def extract_code(raw: str) -> tuple[str, str, list[str]]:
    """Split a raw response into (explanation, code, warnings).

    Code is everything between the first opening and last closing tag,
    byte-exact. Without tags, the longest fenced code block is used and a
    warning is recorded; with neither, MissingCodeTag is raised.
    """
    open_index = raw.find(CODE_TAG_OPEN)
    close_index = raw.rfind(CODE_TAG_CLOSE)
    if open_index >= 0 and close_index > open_index:
        code = raw[open_index + len(CODE_TAG_OPEN) : close_index]
        before = raw[:open_index].strip()
        after = raw[close_index + len(CODE_TAG_CLOSE) :].strip()
        explanation = "\n".join(part for part in (before, after) if part)
        return explanation, code, []
    blocks = list(_FENCED_RE.finditer(raw))
    if blocks:
        best = max(blocks, key=lambda m: len(m.group(1)))
        explanation = (raw[: best.start()] + raw[best.end() :]).strip()
        warning = "code tags missing; extracted the longest fenced code block"
        return explanation, best.group(1), [warning]
    raise MissingCodeTag("response contains no code tags and no fenced code block")


def validate_contract(code: str) -> ValidationFlags:
    """Check the display-control and scale-exposure contract by identifier
    presence: root container used, both viewport globals used, and a return
    statement exposing the xScale/yScale pair."""
    tokens = tokenize(code)
    idents = {t.text for t in tokens if t.type == "ident"}
    returns_scales = False
    for index, tok in enumerate(tokens):
        if tok.type == "ident" and tok.text == "return":
            window: set[str] = set()
            for later in tokens[index + 1 :]:
                if later.type == "punct" and later.text == ";":
                    break
                if later.type == "ident":
                    window.add(later.text)
            if X_SCALE_NAME in window and Y_SCALE_NAME in window:
                returns_scales = True
    return ValidationFlags(
        has_root_global=ROOT_GLOBAL in idents,
        has_viewport_globals=VIEWPORT_WIDTH_GLOBAL in idents
        and VIEWPORT_HEIGHT_GLOBAL in idents,
        returns_global_scales=returns_scales,
    )


# Inserted after each data-join append; serializes the bound datum with a
# stable key order so selections can report full records.
INSERTED_ATTR_CALL = (
    '.attr("data", d => JSON.stringify(d, '
    'd && typeof d === "object" ? Object.keys(d).sort() : undefined))'
)


def _chain_has_data_attr(tokens: list[Token], after: int) -> bool:
    j = after + 1
    n = len(tokens)
    while (
        j + 2 < n
        and tokens[j].type == "punct"
        and tokens[j].text == "."
        and tokens[j + 1].type == "ident"
        and tokens[j + 2].text == "("
    ):
        if tokens[j + 1].text == "attr":
            first_arg = tokens[j + 3] if j + 3 < n else None
            if first_arg and first_arg.type == "str" and first_arg.text[1:-1] == "data":
                return True
        close = _matching_paren(tokens, j + 2)
        if close is None:
            return False
        j = close + 1
    return False


def rewrite_data_binding(code: str) -> str:
    """Insert a datum-storing attribute call after every append() that
    terminates a .data().enter().append() chain. Idempotent; every byte
    outside the inserted calls is preserved."""
    tokens = tokenize(code)
    insertions: list[int] = []
    state = 0  # 0 idle, 1 saw .data(), 2 saw .enter()
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if (
            tok.type == "punct"
            and tok.text == "."
            and i + 2 < n
            and tokens[i + 1].type == "ident"
            and tokens[i + 2].text == "("
        ):
            name = tokens[i + 1].text
            close = _matching_paren(tokens, i + 2)
            if close is None:
                break
            if name == "data":
                state = 1
            elif name == "enter" and state == 1:
                state = 2
            elif name == "append" and state == 2:
                if not _chain_has_data_attr(tokens, close):
                    insertions.append(tokens[close].end)
                state = 0
            i = close + 1
            if i < n and not (tokens[i].type == "punct" and tokens[i].text == "."):
                state = 0
            continue
        if state and not (tok.type == "punct" and tok.text == "."):
            state = 0
        i += 1
    result = code
    for offset in sorted(insertions, reverse=True):
        result = result[:offset] + INSERTED_ATTR_CALL + result[offset:]
    return result


def _derive_failure(
    flags: ValidationFlags,
    undefined: list[str],
    unknown: list[str],
    layout: list[str],
) -> FailureClass | None:
    if undefined:
        return FailureClass(
            FailureKind.UNDEFINED_VARIABLE,
            "undefined identifier(s): " + ", ".join(undefined),
        )
    if unknown:
        return FailureClass(
            FailureKind.UNKNOWN_FUNCTION,
            "unknown d3 entry point(s): " + ", ".join(unknown),
        )
    if not flags.all_ok():
        parts = []
        if not flags.has_root_global:
            parts.append(f"{ROOT_GLOBAL} unused")
        if not flags.has_viewport_globals:
            parts.append(
                f"{VIEWPORT_WIDTH_GLOBAL}/{VIEWPORT_HEIGHT_GLOBAL} unused"
            )
        if not flags.returns_global_scales:
            parts.append(f"{X_SCALE_NAME}/{Y_SCALE_NAME} not returned")
        return FailureClass(FailureKind.MISSING_GLOBAL_SCALES, "; ".join(parts))
    if layout:
        return FailureClass(FailureKind.LAYOUT_SUSPECT, "; ".join(layout))
    return None


def process(raw: str) -> VisualizationArtifact:
    """Full response processing; failures are classified, never raised."""
    no_flags = ValidationFlags(False, False, False)
    try:
        explanation, extracted, warnings = extract_code(raw)
    except MissingCodeTag as exc:
        return VisualizationArtifact(
            raw_response=raw,
            explanation=raw.strip(),
            extracted_code="",
            processed_code="",
            validation=no_flags,
            failure=FailureClass(FailureKind.MISSING_CODE_TAG, str(exc)),
        )
    try:
        tokens = tokenize(extracted)
    except CodeParseFailure as exc:
        # Unlexable code cannot execute; classify with the undefined-access bucket.
        return VisualizationArtifact(
            raw_response=raw,
            explanation=explanation,
            extracted_code=extracted,
            processed_code=extracted,
            validation=no_flags,
            failure=FailureClass(
                FailureKind.UNDEFINED_VARIABLE, f"code does not tokenize: {exc}"
            ),
            warnings=tuple(warnings),
        )
    flags = validate_contract(extracted)
    failure = _derive_failure(
        flags,
        undefined_identifiers(tokens),
        unknown_d3_calls(tokens),
        layout_suspects(tokens),
    )
    processed = rewrite_data_binding(extracted)
    return VisualizationArtifact(
        raw_response=raw,
        explanation=explanation,
        extracted_code=extracted,
        processed_code=processed,
        validation=flags,
        failure=failure,
        warnings=tuple(warnings),
    )


def revalidate_code(artifact: VisualizationArtifact, code: str) -> VisualizationArtifact:
    """Re-run validate + rewrite on user-edited code (no regeneration)."""
    try:
        tokens = tokenize(code)
    except CodeParseFailure as exc:
        return VisualizationArtifact(
            raw_response=artifact.raw_response,
            explanation=artifact.explanation,
            extracted_code=code,
            processed_code=code,
            validation=ValidationFlags(False, False, False),
            failure=FailureClass(
                FailureKind.UNDEFINED_VARIABLE, f"code does not tokenize: {exc}"
            ),
            warnings=artifact.warnings,
        )
    flags = validate_contract(code)
    failure = _derive_failure(
        flags,
        undefined_identifiers(tokens),
        unknown_d3_calls(tokens),
        layout_suspects(tokens),
    )
    return VisualizationArtifact(
        raw_response=artifact.raw_response,
        explanation=artifact.explanation,
        extracted_code=code,
        processed_code=rewrite_data_binding(code),
        validation=flags,
        failure=failure,
        warnings=artifact.warnings,
    )
