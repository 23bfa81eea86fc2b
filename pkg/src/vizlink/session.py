"""Conversation sessions: turn execution, history editing, and persistence.

A session is plain data (fully JSON-serializable, including its agent
log and archived branches); the Pipeline object holds the services a
turn needs. Edits never destroy executed turns — the tail of the history
is archived under a branch tag and only the active line feeds the
conversation context of later prompts.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Sequence

from .agents import (
    AgentBackend,
    AgentLogEntry,
    AgentRequest,
    AgentRole,
    ModelRegistry,
    complete,
)
from .dataset import Dataset
from .errors import (
    AgentMalformedResponse,
    AgentTimeout,
    AgentUnavailable,
    CorruptArchive,
    NotFound,
    RateLimited,
    SchemaVersionMismatch,
)
from .interaction import (
    DirectManipulation,
    ManipulationDescriptor,
    describe_manipulations,
    manipulation_from_wire,
    manipulation_to_wire,
)
from .linking import LinkResult, resolve_links
from .postprocess import (
    FailureClass,
    FailureKind,
    ValidationFlags,
    VisualizationArtifact,
    process,
)
from .prompt import HistoryTurn, PromptDocument, build_prompt

SESSION_SCHEMA_VERSION = 1


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class SessionEntry:
    index: int
    nl_input: str
    manipulations: list[DirectManipulation]
    descriptors: list[ManipulationDescriptor]
    link_result: LinkResult
    prompt_document: PromptDocument
    artifact: VisualizationArtifact
    model_id: str
    created_at: str
    warnings: list[str] = field(default_factory=list)
    thumbnail_png_b64: str | None = None

    def to_doc(self) -> dict:
        return {
            "index": self.index,
            "nlInput": self.nl_input,
            "manipulations": [manipulation_to_wire(m) for m in self.manipulations],
            "descriptors": [d.to_doc() for d in self.descriptors],
            "linkResult": self.link_result.to_doc(),
            "promptDocument": self.prompt_document.to_doc(),
            "artifact": self.artifact.to_doc(),
            "modelId": self.model_id,
            "createdAt": self.created_at,
            "warnings": list(self.warnings),
            "thumbnailPngBase64": self.thumbnail_png_b64,
        }

    @staticmethod
    def from_doc(doc: dict) -> "SessionEntry":
        return SessionEntry(
            index=doc["index"],
            nl_input=doc["nlInput"],
            manipulations=[manipulation_from_wire(m) for m in doc["manipulations"]],
            descriptors=[
                ManipulationDescriptor.from_doc(d) for d in doc["descriptors"]
            ],
            link_result=LinkResult.from_doc(doc["linkResult"]),
            prompt_document=PromptDocument.from_doc(doc["promptDocument"]),
            artifact=VisualizationArtifact.from_doc(doc["artifact"]),
            model_id=doc["modelId"],
            created_at=doc["createdAt"],
            warnings=list(doc.get("warnings", [])),
            thumbnail_png_b64=doc.get("thumbnailPngBase64"),
        )


@dataclass
class Branch:
    tag: str
    entries: list[SessionEntry]

    def to_doc(self) -> dict:
        return {"tag": self.tag, "entries": [e.to_doc() for e in self.entries]}

    @staticmethod
    def from_doc(doc: dict) -> "Branch":
        return Branch(doc["tag"], [SessionEntry.from_doc(e) for e in doc["entries"]])


@dataclass
class Session:
    id: str
    dataset_id: str
    model_id: str
    entries: list[SessionEntry] = field(default_factory=list)
    archived_branches: list[Branch] = field(default_factory=list)
    agent_log: list[AgentLogEntry] = field(default_factory=list)
    active_entry_index: int | None = None  # None means "latest"

    @staticmethod
    def create(dataset_id: str, model_id: str, session_id: str | None = None) -> "Session":
        return Session(
            id=session_id or uuid.uuid4().hex,
            dataset_id=dataset_id,
            model_id=model_id,
        )

    def to_doc(self) -> dict:
        return {
            "schemaVersion": SESSION_SCHEMA_VERSION,
            "id": self.id,
            "datasetId": self.dataset_id,
            "modelId": self.model_id,
            "activeEntryIndex": self.active_entry_index,
            "entries": [e.to_doc() for e in self.entries],
            "archivedBranches": [b.to_doc() for b in self.archived_branches],
            "agentLog": [e.to_doc() for e in self.agent_log],
        }

    @staticmethod
    def from_doc(doc: dict) -> "Session":
        return Session(
            id=doc["id"],
            dataset_id=doc["datasetId"],
            model_id=doc["modelId"],
            active_entry_index=doc.get("activeEntryIndex"),
            entries=[SessionEntry.from_doc(e) for e in doc["entries"]],
            archived_branches=[
                Branch.from_doc(b) for b in doc.get("archivedBranches", [])
            ],
            agent_log=[AgentLogEntry.from_doc(e) for e in doc.get("agentLog", [])],
        )


def save_session(session: Session) -> bytes:
    """Lossless archive (entries, branches, agent log, interaction traces)."""
    return json.dumps(session.to_doc(), ensure_ascii=False, indent=2).encode("utf-8")


def load_session(data: bytes) -> Session:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptArchive(f"session archive is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "schemaVersion" not in doc:
        raise CorruptArchive("session archive lacks a schema version")
    if doc["schemaVersion"] != SESSION_SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"archive schema version {doc['schemaVersion']} != {SESSION_SCHEMA_VERSION}"
        )
    try:
        return Session.from_doc(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptArchive(f"session archive is incomplete: {exc}") from exc


class Pipeline:
    """Executes turns: describe → link → build prompt → generate → process."""

    def __init__(self, backend: AgentBackend, registry: ModelRegistry):
        self.backend = backend
        self.registry = registry

    def create_session(self, dataset: Dataset, session_id: str | None = None) -> Session:
        return Session.create(dataset.id, self.registry.default, session_id)

    def _scales_available(self, session: Session) -> bool:
        for entry in reversed(session.entries):
            if entry.artifact.failure is None:
                return entry.artifact.validation.returns_global_scales
        return False

    def _history(self, session: Session) -> list[HistoryTurn]:
        turns = []
        for position, entry in enumerate(session.entries):
            code = None
            if position == len(session.entries) - 1 and entry.artifact.extracted_code:
                code = entry.artifact.extracted_code
            turns.append(
                HistoryTurn(entry.nl_input, entry.artifact.explanation, code)
            )
        return turns

    def _failed_artifact(self, reason: str) -> VisualizationArtifact:
        return VisualizationArtifact(
            raw_response="",
            explanation="",
            extracted_code="",
            processed_code="",
            validation=ValidationFlags(False, False, False),
            failure=FailureClass(
                FailureKind.MISSING_CODE_TAG, f"generation failed: {reason}"
            ),
        )

    def _execute(
        self,
        session: Session,
        dataset: Dataset,
        nl: str,
        manipulations: Sequence[DirectManipulation],
        index: int,
    ) -> SessionEntry:
        warnings: list[str] = []
        descriptors, box_warnings = describe_manipulations(
            manipulations,
            nl,
            self.backend,
            session.model_id,
            scales_available=self._scales_available(session),
            log=session.agent_log,
        )
        warnings.extend(box_warnings)
        link_result = resolve_links(
            nl,
            descriptors,
            self.backend,
            model_id=session.model_id,
            log=session.agent_log,
        )
        prompt_document = build_prompt(
            dataset, nl, link_result, descriptors, self._history(session)
        )
        request = AgentRequest(
            role=AgentRole.VIS_GENERATOR,
            prompt=prompt_document.to_text(),
            model_id=session.model_id,
        )
        try:
            raw = complete(self.backend, request, log=session.agent_log)
            artifact = process(raw)
        except (AgentUnavailable, AgentTimeout, RateLimited, AgentMalformedResponse) as exc:
            warnings.append(f"visualization generation failed: {exc}")
            artifact = self._failed_artifact(str(exc))
        return SessionEntry(
            index=index,
            nl_input=nl,
            manipulations=sorted(manipulations, key=lambda m: m.id),
            descriptors=descriptors,
            link_result=link_result,
            prompt_document=prompt_document,
            artifact=artifact,
            model_id=session.model_id,
            created_at=_now(),
            warnings=warnings,
        )

    def append_entry(
        self,
        session: Session,
        dataset: Dataset,
        nl: str,
        manipulations: Sequence[DirectManipulation] = (),
    ) -> SessionEntry:
        """Run the full pipeline for a new turn and append its entry."""
        entry = self._execute(session, dataset, nl, manipulations, len(session.entries))
        session.entries.append(entry)
        session.active_entry_index = entry.index
        return entry

    def edit_entry(
        self,
        session: Session,
        dataset: Dataset,
        index: int,
        nl: str | None = None,
        manipulations: Sequence[DirectManipulation] | None = None,
    ) -> SessionEntry:
        """Re-execute a turn with edited inputs.

        The old entry and everything after it are archived under a branch
        tag; the edited turn runs against history truncated to the entries
        before it. Unchanged inputs are reused verbatim.
        """
        if not 0 <= index < len(session.entries):
            raise NotFound(f"session has no entry {index}")
        original = session.entries[index]
        new_nl = nl if nl is not None else original.nl_input
        new_manipulations = (
            list(manipulations)
            if manipulations is not None
            else list(original.manipulations)
        )
        branch = Branch(
            tag=f"branch-{len(session.archived_branches) + 1}-from-{index}",
            entries=session.entries[index:],
        )
        session.archived_branches.append(branch)
        session.entries = session.entries[:index]
        entry = self._execute(session, dataset, new_nl, new_manipulations, index)
        session.entries.append(entry)
        session.active_entry_index = entry.index
        return entry

    def replay(self, session: Session, dataset: Dataset) -> list[VisualizationArtifact]:
        """Re-execute the active line of a (typically loaded) session into a
        fresh session and return the artifacts, for replay-fidelity checks."""
        fresh = Session.create(dataset.id, session.model_id)
        artifacts = []
        for entry in session.entries:
            new_entry = self.append_entry(
                fresh, dataset, entry.nl_input, list(entry.manipulations)
            )
            artifacts.append(new_entry.artifact)
        return artifacts


def attach_thumbnail(session: Session, index: int, png_b64: str) -> SessionEntry:
    """Store the UI-rendered thumbnail for one entry (engine keeps it opaque)."""
    if not 0 <= index < len(session.entries):
        raise NotFound(f"session has no entry {index}")
    session.entries[index].thumbnail_png_b64 = png_b64
    return session.entries[index]
