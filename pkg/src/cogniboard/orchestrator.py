"""Super-agent orchestration: goal analysis, bounded step planning over a
typed agent call table, memory verification, and structured finalization.

Planner prompts carry metadata only (agent catalog, schema names, counts);
raw note text and code values never enter them. Dispatch is structural:
the generated-command prompt is rendered into the transcript as a trace,
but execution happens through the in-process call table.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .agents import (
    EhrAgent,
    ImageAgent,
    ModalityAssessment,
    ModalityUnavailable,
    NoteAgent,
    run_discussion,
)
from .agents.notes import AttentionModel
from .cohort import WindowSpec
from .llm.gateway import complete_text
from .models import FittedModel, SparseMatrix
from .notebook import NotebookStore
from .store import CohortStore, NeedsClarification, QueryError, QueryPlan, translate_query

SCHEMA_VERSION = 1
DEFAULT_MAX_STEPS = 8

AGENT_CATALOG = {
    "data": "retrieves patient records and cohort metadata from the store",
    "ehr": "scores coded-event history and extracts feature evidence",
    "note": "scores clinical notes and extracts attention-weighted sentences",
    "image": "scores imaging feature vectors and maps importances to regions",
    "summary": "fuses modality assessments into a bounded consensus",
}

_STEP_LINE = re.compile(
    r"Context:\s*(?P<context>.*?),\s*Sub-Goal:\s*(?P<sub_goal>.*?),\s*Agent Name:\s*(?P<agent>[A-Za-z_]+)\s*$",
    re.S,
)
_CONCLUSION = re.compile(r"Conclusion:\s*(STOP|CONTINUE)\s*$")


class OrchestratorError(RuntimeError):
    pass


class StepBudgetExceeded(OrchestratorError):
    pass


@dataclass
class TaskSpec:
    kind: str
    goal: str
    horizon_years: int | None = None
    patient_id: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "goal": self.goal,
            "horizon_years": self.horizon_years,
            "patient_id": self.patient_id,
        }


@dataclass
class PlannedStep:
    agent: str
    sub_goal: str
    context: str


@dataclass
class StepRecord:
    agent: str
    sub_goal: str
    context: str
    result_summary: str
    command_trace: str = ""
    artifacts: dict = field(default_factory=dict)  # not rendered into prompts


@dataclass
class StepMemory:
    max_steps: int
    steps: list[StepRecord] = field(default_factory=list)

    def render(self) -> str:
        """Metadata-only rendering for planner prompts."""
        if not self.steps:
            return "(no steps taken yet)"
        lines = []
        for i, s in enumerate(self.steps, 1):
            lines.append(f"step {i}: agent={s.agent} sub_goal={s.sub_goal} result: {s.result_summary}")
        return "\n".join(lines)

    def agents_run(self) -> set[str]:
        return {s.agent for s in self.steps}


@dataclass
class ModelBundle:
    """Trained per-modality models plus the assets assessment needs."""

    task: str
    horizon_years: int | None
    ehr_model: FittedModel | None = None
    note_model: AttentionModel | None = None
    image_model: FittedModel | None = None
    ehr_background: SparseMatrix | None = None
    image_background: SparseMatrix | None = None

    def modality_available(self, modality: str) -> bool:
        return {
            "ehr": self.ehr_model is not None,
            "note": self.note_model is not None,
            "image": self.image_model is not None,
        }[modality]

    def fingerprint(self) -> str:
        from .models import model_fingerprint

        h = hashlib.sha256()
        for m in (self.ehr_model, self.image_model):
            h.update(model_fingerprint(m).encode() if m else b"none")
        if self.note_model is not None:
            h.update(self.note_model.params.tobytes())
        return h.hexdigest()[:16]


@dataclass
class RuntimeContext:
    store: CohortStore
    bundle: ModelBundle
    notebook: NotebookStore
    backend: object
    ehr_agent: EhrAgent = field(default_factory=EhrAgent)
    note_agent: NoteAgent = field(default_factory=NoteAgent)
    image_agent: ImageAgent | None = None


def analyze_goal(goal: str, backend) -> TaskSpec:
    """Goal text to structured spec; metadata-only context. Unparseable
    analyses degrade to a clarification spec, never a guess."""
    if not goal or not goal.strip():
        return TaskSpec(kind="clarification", goal=goal)
    reply = complete_text(
        backend,
        "goal_analysis",
        {
            "AVAILABLE_AGENTS": ", ".join(sorted(AGENT_CATALOG)),
            "AGENTS_METADATA": json.dumps(AGENT_CATALOG, sort_keys=True),
            "DATA": "patient store metadata only (schemas and counts; no records)",
            "TASK": goal,
        },
    )
    kind = None
    horizon = None
    patient = None
    try:
        m = re.search(r"\{.*\}", reply, re.S)
        if m:
            obj = json.loads(m.group(0))
            kind = obj.get("kind")
            horizon = obj.get("horizon")
            patient = obj.get("patient_id")
    except json.JSONDecodeError:
        pass
    if kind is None:
        lowered = reply.lower()
        for candidate in ("prediction", "diagnosis", "survival", "conversion", "exploration"):
            if candidate in lowered:
                kind = candidate
                break
    if kind not in ("prediction", "diagnosis", "survival", "conversion", "exploration"):
        return TaskSpec(kind="clarification", goal=goal)
    return TaskSpec(
        kind=kind,
        goal=goal,
        horizon_years=int(horizon) if horizon else None,
        patient_id=patient,
    )


def plan_next_step(spec: TaskSpec, memory: StepMemory, ctx: RuntimeContext, available: list[str]) -> PlannedStep:
    if len(memory.steps) >= memory.max_steps:
        raise StepBudgetExceeded(f"step budget {memory.max_steps} exhausted")
    bindings = {
        "TASK": spec.goal,
        "DATA_INFO": f"available agents for this patient: {', '.join(available)}; store metadata only",
        "TASK_ANALYSIS": json.dumps(spec.to_json_dict(), sort_keys=True),
        "AVAILABLE_AGENTS": ", ".join(available),
        "AGENTS_METADATA": json.dumps({k: AGENT_CATALOG[k] for k in available}, sort_keys=True),
        "MEMORY": memory.render(),
        "STEP_COUNT": len(memory.steps) + 1,
        "MAX_STEP_COUNT": memory.max_steps,
        "REMAINING_STEPS": memory.max_steps - len(memory.steps),
    }
    for attempt in range(2):
        reply = complete_text(ctx.backend, "next_step", bindings)
        m = _STEP_LINE.search(reply)
        if m and m.group("agent") in available:
            return PlannedStep(m.group("agent"), m.group("sub_goal").strip(), m.group("context").strip())
        if m and m.group("agent") not in available:
            raise OrchestratorError(f"planner selected unknown agent {m.group('agent')!r}")
    raise OrchestratorError("planner reply did not match the Context/Sub-Goal/Agent Name format")


def verify_memory(spec: TaskSpec, memory: StepMemory, ctx: RuntimeContext, available: list[str]) -> str:
    """Returns 'stop' or 'continue'. Malformed tails are a conservative
    continue (with a warning recorded by the caller)."""
    reply = complete_text(
        ctx.backend,
        "memory_verification",
        {
            "TASK": spec.goal,
            "DATA_INFO": "store metadata only",
            "AVAILABLE_AGENTS": ", ".join(available),
            "AGENTS_METADATA": json.dumps({k: AGENT_CATALOG[k] for k in available}, sort_keys=True),
            "TASK_ANALYSIS": json.dumps(spec.to_json_dict(), sort_keys=True),
            "MEMORY": memory.render(),
        },
    )
    m = _CONCLUSION.search(reply.strip())
    if not m:
        return "continue"
    return "stop" if m.group(1) == "STOP" else "continue"


def _command_trace(spec: TaskSpec, planned: PlannedStep, ctx: RuntimeContext) -> str:
    """Textual fidelity trace of the would-be generated command; dispatch
    itself stays structural."""
    reply = complete_text(
        ctx.backend,
        "tool_command",
        {
            "TASK": spec.goal,
            "DATA_INFO": "store metadata only",
            "CONTEXT": planned.context,
            "SUB_GOAL": planned.sub_goal,
            "AGENT_NAME": planned.agent,
            "AGENT_METADATA": AGENT_CATALOG[planned.agent],
        },
    )
    m = re.search(r"execution = agent\.execute\([^\n]*\)", reply)
    return m.group(0) if m else "execution = agent.execute()"


def _inference_window(record) -> WindowSpec:
    first = record.first_event_date()
    last = record.last_event_date()
    if first is None or last is None or first >= last:
        raise OrchestratorError("patient record too thin for an observation window")
    return WindowSpec(first, last, 180, 365)


def _available_agents(ctx: RuntimeContext, spec: TaskSpec) -> list[str]:
    if spec.kind == "exploration":
        return ["data"]
    record = ctx.store.get(spec.patient_id) if spec.patient_id else None
    out = ["data"]
    for modality, agent_name in (("ehr", "ehr"), ("note", "note"), ("image", "image")):
        if not ctx.bundle.modality_available(modality):
            continue
        if record is not None and not record.has_modality(modality):
            continue
        out.append(agent_name)
    out.append("summary")
    return out


def _execute_step(planned: PlannedStep, spec: TaskSpec, ctx: RuntimeContext, state: dict) -> StepRecord:
    agent = planned.agent
    if agent == "data":
        plan = QueryPlan(mode="inference", target_patient=spec.patient_id)
        rs = ctx.store.execute(plan)
        record = rs.records[0]
        state["record"] = record
        state["window"] = _inference_window(record)
        summary = (
            f"record retrieved: {len(record.events)} events, {len(record.notes)} notes, "
            f"{len(record.imaging)} imaging studies"
        )
        return StepRecord(agent, planned.sub_goal, planned.context, summary)
    if agent in ("ehr", "note", "image"):
        record = state.get("record")
        window = state.get("window")
        if record is None:
            raise OrchestratorError(f"{agent} agent requires the data step to run first")
        if agent == "ehr":
            result = ctx.ehr_agent.assess(
                record, window, ctx.bundle.ehr_model, ctx.backend, background=ctx.bundle.ehr_background
            )
        elif agent == "note":
            result = ctx.note_agent.assess(record, window, ctx.bundle.note_model, ctx.backend)
        else:
            result = ctx.image_agent.assess(
                record, window, ctx.bundle.image_model, ctx.backend, background=ctx.bundle.image_background
            )
        state.setdefault("assessments", {})[agent] = result
        if isinstance(result, ModalityUnavailable):
            summary = f"agent={agent} modality unavailable: {result.reason}"
        else:
            summary = f"agent={agent} risk_computed=true evidence_items={len(result.evidence)}"
        return StepRecord(agent, planned.sub_goal, planned.context, summary, artifacts={"result": result})
    if agent == "summary":
        assessments = [
            a for a in state.get("assessments", {}).values() if isinstance(a, ModalityAssessment)
        ]
        if not assessments:
            raise OrchestratorError("summary agent requires at least one modality assessment")
        consensus = run_discussion(
            assessments,
            ctx.notebook.view(),
            ctx.backend,
            horizon_years=spec.horizon_years or 3,
        )
        state["consensus"] = consensus
        summary = "agent=summary consensus_computed=true"
        return StepRecord(agent, planned.sub_goal, planned.context, summary, artifacts={"consensus": consensus})
    raise OrchestratorError(f"unregistered agent {agent!r}")


def _final_report(spec: TaskSpec, memory: StepMemory, state: dict, ctx: RuntimeContext, status: str, errors: list[str]) -> dict:
    modalities = []
    for name in ("ehr", "image", "note"):
        result = state.get("assessments", {}).get(name)
        if result is None:
            continue
        d = result.to_json_dict()
        if isinstance(result, ModalityAssessment):
            for i, e in enumerate(d["evidence"], 1):
                e["id"] = f"{name}-{i}"
        modalities.append(d)
    consensus = state.get("consensus")
    report = {
        "schema_version": SCHEMA_VERSION,
        "report_id": "",
        "status": status,
        "task": spec.to_json_dict(),
        "consensus": consensus.to_json_dict() if consensus is not None else None,
        "modalities": modalities,
        "exploration": state.get("exploration"),
        "steps": [
            {
                "agent": s.agent,
                "sub_goal": s.sub_goal,
                "result_summary": s.result_summary,
                "command_trace": s.command_trace,
            }
            for s in memory.steps
        ],
        "notebook_version": ctx.notebook.version,
        "errors": errors,
    }
    payload = json.dumps(report, sort_keys=True).encode()
    report["report_id"] = hashlib.sha256(payload).hexdigest()[:16]
    return report


def load_report_schema() -> dict:
    text = (resources.files("cogniboard") / "schemas" / "final_report.schema.json").read_text()
    return json.loads(text)


def validate_report(report: dict) -> None:
    jsonschema.validate(report, load_report_schema())


def _exploration_report(spec: TaskSpec, ctx: RuntimeContext, memory: StepMemory) -> dict:
    result = translate_query(spec.goal, ctx.backend)
    if isinstance(result, NeedsClarification):
        spec = TaskSpec(kind="clarification", goal=spec.goal)
        report = _final_report(spec, memory, {}, ctx, "clarification", [result.message])
        validate_report(report)
        return report
    rs = ctx.store.execute(result)
    payload: dict = {"mode": rs.mode}
    if rs.schema is not None:
        payload["schema"] = rs.schema
    if rs.summary is not None:
        payload["summary"] = rs.summary
    if rs.mode == "inference" and rs.records:
        rec = rs.records[0]
        payload["patient"] = {
            "patient_id": rec.patient_id,
            "n_events": len(rec.events),
            "n_notes": len(rec.notes),
            "n_imaging": len(rec.imaging),
        }
    memory.steps.append(
        StepRecord("data", "execute exploration query", "structured plan", f"exploration_result mode={rs.mode}")
    )
    state = {"exploration": payload}
    report = _final_report(spec, memory, state, ctx, "completed", [])
    validate_report(report)
    return report


def run_task(goal: str, ctx: RuntimeContext, max_steps: int = DEFAULT_MAX_STEPS) -> dict:
    """End-to-end task run returning a schema-valid FinalReport dict."""
    memory = StepMemory(max_steps=max_steps)
    spec = analyze_goal(goal, ctx.backend)
    if spec.kind == "clarification":
        report = _final_report(spec, memory, {}, ctx, "clarification", ["goal could not be interpreted"])
        validate_report(report)
        return report
    if spec.kind == "exploration":
        return _exploration_report(spec, ctx, memory)
    if spec.patient_id is None:
        report = _final_report(spec, memory, {}, ctx, "clarification", ["assessment tasks need a patient id"])
        validate_report(report)
        return report
    try:
        ctx.store.get(spec.patient_id)
    except QueryError as e:
        report = _final_report(spec, memory, {}, ctx, "clarification", [str(e)])
        validate_report(report)
        return report
    available = _available_agents(ctx, spec)
    errors: list[str] = []
    state: dict = {}
    # modalities with trained models but no data for this patient are
    # reported as explicitly unavailable rather than silently absent
    record = ctx.store.get(spec.patient_id)
    for modality in ("ehr", "note", "image"):
        if ctx.bundle.modality_available(modality) and not record.has_modality(modality):
            state.setdefault("assessments", {})[modality] = ModalityUnavailable(
                modality, f"no {modality} data in this patient's record"
            )
    status = "completed"
    while True:
        try:
            planned = plan_next_step(spec, memory, ctx, available)
        except StepBudgetExceeded as e:
            errors.append(str(e))
            status = "partial"
            break
        except OrchestratorError as e:
            errors.append(str(e))
            status = "partial"
            break
        try:
            record = _execute_step(planned, spec, ctx, state)
            record.command_trace = _command_trace(spec, planned, ctx)
            memory.steps.append(record)
        except OrchestratorError as e:
            errors.append(f"step {planned.agent} failed: {e}")
            memory.steps.append(StepRecord(planned.agent, planned.sub_goal, planned.context, f"error: {e}"))
            status = "partial"
            break
        if verify_memory(spec, memory, ctx, available) == "stop":
            break
    if "consensus" not in state and status == "completed" and spec.kind in ("prediction", "diagnosis", "conversion"):
        status = "partial"
        errors.append("run ended without a consensus")
    report = _final_report(spec, memory, state, ctx, status, errors)
    validate_report(report)
    return report
