"""Versioned text assets for the generation prompt.

These strings are the byte-exact source of truth for the prompt sections;
tests pin them, so edit deliberately and bump TEMPLATE_VERSION.
"""

TEMPLATE_VERSION = "1"

# Literal tag pair wrapping generated code in agent responses.
CODE_TAG_OPEN = "<D3>"
CODE_TAG_CLOSE = "</D3>"

# Globals injected into the rendering sandbox.
ROOT_GLOBAL = "svg"
VIEWPORT_WIDTH_GLOBAL = "vw"
VIEWPORT_HEIGHT_GLOBAL = "vh"
DATA_GLOBAL = "data"

# Names the generated code must expose its shared scale pair under.
X_SCALE_NAME = "xScale"
Y_SCALE_NAME = "yScale"

TASK_CONTEXT = """You are a data visualization assistant that writes D3.js (v7) code rendering into an SVG context.

Rules for the generated code:
- Use only these injected global variables, which are already defined for you:
  - `svg`: a D3 selection of the empty root <svg> element to draw into
  - `vw`: the viewport width in pixels
  - `vh`: the viewport height in pixels
  - `data`: the full dataset as an array of row objects
- Never redefine svg, vw, vh, or data; size and position everything from vw and vh.
- Use only the D3 standard library. Do not load external resources, stylesheets, or
  third-party libraries, and do not use fetch, XMLHttpRequest, import, require,
  document, or window.
- Read rows only from the injected `data` array; never inline literal data values.
- Apply any preprocessing the chart needs (date parsing, missing values) inside the code.
- Define exactly one pair of shared linear scales named `xScale` and `yScale` mapping
  data values to pixels for the whole chart; subplots must reuse them. The last
  statement of the code must be: return [xScale, yScale];

Response structure:
- Wrap the complete runnable code in a single <D3></D3> tag pair.
- Outside the tag, explain only the visual encodings you chose and their rationale;
  keep code logic notes in code comments instead."""

COT_STEPS = (
    "Chart and Field Selection: determine the appropriate visualization type for "
    "the user's analytical intent and select the relevant data fields from the "
    "dataset description.",
    "Code Generation: generate D3.js code for the chosen design under the "
    "constraints given in the task context.",
    "Layout Refinement: optimize the layout, axis range, and color encodings for "
    "better visuals.",
    "Code Verification: verify the correctness of the generated code and fix "
    "potential bugs before responding.",
)

# Exact section header strings of the serialized prompt document.
SECTION_TASK_CONTEXT = "## Task Context"
SECTION_DATASET = "## Dataset Description"
SECTION_COT = "## Chain-of-Thought Steps"
SECTION_HISTORY = "## Conversation Context"
SECTION_INTENTS = "## Structured User Intents"
