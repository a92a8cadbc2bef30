"""HTTP surface: assessment, evidence chat, and feedback endpoints over
the orchestrator and notebook, guarded by an optional bearer token.

Chat is strictly read-only against stored reports: nothing reachable from
here retrains or mutates models; the notebook is the only mutable state
and only /feedback touches it.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .llm.gateway import complete_text
from .notebook import NotebookError, NotebookStore
from .orchestrator import ModelBundle, RuntimeContext, run_task
from .store import CohortStore

API_PREFIX = "/api/v1"
SCHEMA_VERSION = 1


@dataclass
class AppState:
    store: CohortStore
    notebook: NotebookStore
    backend: object
    bundles: dict[str, ModelBundle] = field(default_factory=dict)  # task -> bundle
    agents: dict[str, object] = field(default_factory=dict)  # ehr/note/image agent instances
    reports: dict[str, dict] = field(default_factory=dict)  # report_id -> FinalReport
    notebook_dir: Path | None = None

    def context_for(self, task: str) -> RuntimeContext:
        bundle = self.bundles[task]
        return RuntimeContext(
            store=self.store,
            bundle=bundle,
            notebook=self.notebook,
            backend=self.backend,
            ehr_agent=self.agents["ehr"],
            note_agent=self.agents["note"],
            image_agent=self.agents["image"],
        )


class AssessRequest(BaseModel):
    patient_id: str
    task: str = "prediction"
    horizon: int | None = 3


class FeedbackRequest(BaseModel):
    case_ref: str = ""
    free_text: str = Field(min_length=1)
    suggested_direction: str | None = None


class ChatRequest(BaseModel):
    session: str
    message: str = Field(min_length=1)


def create_app(state: AppState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(
        title="cogniboard service",
        version="1.0",
        description="Risk assessment, evidence chat, and clinician feedback over the patient store.",
    )

    token = os.environ.get("COGNIBOARD_TOKEN", "")

    async def auth(request: Request) -> None:
        if not token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail={"code": "unauthorized"})

    @app.get(API_PREFIX + "/health")
    async def health() -> dict:
        return {"status": "ok", "schema_version": SCHEMA_VERSION, "tasks": sorted(state.bundles)}

    @app.get(API_PREFIX + "/patients", dependencies=[Depends(auth)])
    async def patients() -> dict:
        out = []
        for r in state.store.records:
            out.append(
                {
                    "patient_id": r.patient_id,
                    "age_at_cutoff": r.demographics["age_at_cutoff"],
                    "sex": r.demographics["sex"],
                    "modalities": {
                        "ehr": r.has_modality("ehr"),
                        "note": r.has_modality("note"),
                        "image": r.has_modality("image"),
                    },
                }
            )
        return {"schema_version": SCHEMA_VERSION, "patients": out}

    @app.get(API_PREFIX + "/notebook", dependencies=[Depends(auth)])
    async def notebook_view() -> dict:
        view = state.notebook.view()
        return {
            "schema_version": SCHEMA_VERSION,
            "version": view.version,
            "entries": [e.to_json_dict() for e in view.entries],
        }

    @app.post(API_PREFIX + "/assess", dependencies=[Depends(auth)])
    async def assess(req: AssessRequest) -> dict:
        if req.task not in state.bundles:
            raise HTTPException(
                status_code=409,
                detail={"code": "models_not_trained", "message": f"no trained bundle for task {req.task!r}"},
            )
        if req.patient_id not in set(state.store.patient_ids):
            raise HTTPException(status_code=404, detail={"code": "unknown_patient"})
        horizon = req.horizon or 3
        goal = f"run {req.task} assessment with {horizon}-year horizon for patient {req.patient_id}"
        report = run_task(goal, state.context_for(req.task))
        state.reports[report["report_id"]] = report
        return report

    @app.post(API_PREFIX + "/feedback", dependencies=[Depends(auth)])
    async def feedback(req: FeedbackRequest) -> dict:
        if not req.free_text.strip():
            raise HTTPException(status_code=422, detail={"code": "empty_feedback"})
        try:
            result = state.notebook.ingest_feedback(
                {
                    "case_ref": req.case_ref,
                    "free_text": req.free_text,
                    "suggested_direction": req.suggested_direction,
                },
                state.backend,
            )
        except NotebookError as e:
            raise HTTPException(status_code=422, detail={"code": "invalid_feedback", "message": str(e)})
        if state.notebook_dir is not None:
            state.notebook.save(state.notebook_dir)
        payload = {
            "schema_version": SCHEMA_VERSION,
            "status": result.status,
            "notebook_version": result.version,
        }
        if result.entry is not None:
            payload["entry"] = result.entry.to_json_dict()
        if result.conflicting:
            payload["conflicting"] = [e.to_json_dict() for e in result.conflicting]
        if result.warning:
            payload["warning"] = result.warning
        return payload

    @app.post(API_PREFIX + "/chat", dependencies=[Depends(auth)])
    async def chat(req: ChatRequest) -> dict:
        report = state.reports.get(req.session)
        if report is None:
            raise HTTPException(status_code=404, detail={"code": "unknown_session"})
        evidence_lines = []
        for mod in report.get("modalities", []):
            for e in mod.get("evidence", []):
                evidence_lines.append(f"[{e['id']}] {e['item']}")
        reply = complete_text(
            state.backend,
            "chat_reply",
            {
                "REPORT": f"consensus={report.get('consensus')}",
                "EVIDENCE": "\n".join(evidence_lines),
                "NOTEBOOK_VERSION": state.notebook.version,
                "QUESTION": req.message,
                "NOTEBOOK_TEXT": state.notebook.view().entries_text(),
            },
        )
        citations = re.findall(r"\[([a-z]+-\d+)\]", reply)
        return {
            "schema_version": SCHEMA_VERSION,
            "reply": reply,
            "citations": citations,
            "notebook_version": state.notebook.version,
        }

    if static_dir is not None and Path(static_dir).exists():
        static_path = Path(static_dir)

        @app.get("/")
        async def index() -> FileResponse:
            return FileResponse(static_path / "index.html")

        app.mount("/assets", StaticFiles(directory=static_path), name="assets")

    return app
