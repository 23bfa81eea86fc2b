"""vizlink: a multimodal visual-analytics engine.

Fuses direct-manipulation traces (clicks, boxes, lassos, sketches) with
natural-language input, links the two, builds structured generation
prompts, and post-processes generated chart code into interactive,
data-bound visualizations.
"""

from .agents import (
    AgentRequest,
    AgentRole,
    HttpBackend,
    ModelRegistry,
    ScriptedBackend,
    complete,
    request_fingerprint,
    switch_model,
)
from .dataset import (
    Attribute,
    AttributeKind,
    Dataset,
    MappingSpec,
    apply_mappings,
    describe_dataset,
    infer_schema,
    ingest_csv,
)
from .interaction import (
    BoxGeometry,
    DirectManipulation,
    Drawing,
    ElementRef,
    ManipulationDescriptor,
    ManipulationKind,
    describe_box,
    describe_freedraw,
    describe_selection,
    manipulation_from_wire,
    manipulation_to_wire,
)
from .linking import (
    IntentLink,
    LinkResult,
    LinkRule,
    TriggerPhrase,
    extract_triggers,
    link,
    resolve_links,
)
from .postprocess import (
    FailureClass,
    FailureKind,
    VisualizationArtifact,
    extract_code,
    process,
    rewrite_data_binding,
    validate_contract,
)
from .prompt import HistoryTurn, PromptDocument, build_prompt, render_intents
from .session import Pipeline, Session, load_session, save_session
from .server import ServerConfig, create_app

__version__ = "0.1.0"
