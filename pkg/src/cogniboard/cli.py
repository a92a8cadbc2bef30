"""Command-line surface covering the full pipeline: generate, build
datasets, train, evaluate, assess, distill, serve."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .cohort import ConceptCriteria, scan_for_leakage, write_dataset
from .llm import HttpChatBackend, ScriptedBackend
from .notebook import NotebookStore
from .orchestrator import run_task
from .pipeline import build_task_dataset, load_bundle, save_bundle, train_pipeline
from .store import CohortConfig, CohortStore, generate_cohort

DEFAULT_COHORT = os.environ.get("COGNIBOARD_COHORT_DIR", "cohort")


def _parse_signal_split(raw: str) -> dict[str, float]:
    try:
        e, n, i = (float(x) for x in raw.split(":"))
    except ValueError:
        raise click.BadParameter("expected e:n:i, for example 0.4:0.3:0.3")
    return {"ehr": e, "note": n, "image": i}


def _backend(kind: str):
    if kind == "scripted":
        return ScriptedBackend()
    return HttpChatBackend.from_env()


@click.group()
def main() -> None:
    """Multimodal dementia-risk assessment over synthetic cohorts."""


@main.command()
@click.option("--n", "n_patients", type=int, required=True, help="number of patients")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--prevalence", type=float, default=0.05, show_default=True)
@click.option("--signal-split", default="0.4:0.3:0.3", show_default=True, help="e:n:i weights")
@click.option("--out", "out_dir", default=DEFAULT_COHORT, show_default=True)
def generate(n_patients: int, seed: int, prevalence: float, signal_split: str, out_dir: str) -> None:
    """Generate a synthetic cohort with a planted risk process."""
    cfg = CohortConfig(
        n_patients=n_patients, seed=seed, prevalence=prevalence, signal_split=_parse_signal_split(signal_split)
    )
    try:
        out = generate_cohort(cfg, out_dir)
    except ValueError as e:
        raise click.ClickException(str(e))
    manifest = json.loads((out / "manifest.json").read_text())
    click.echo(f"cohort written to {out} ({manifest['n_positive']} positives / {n_patients})")


@main.command("build-dataset")
@click.option("--cohort", "cohort_dir", default=DEFAULT_COHORT, show_default=True)
@click.option("--task", type=click.Choice(["prediction", "diagnosis", "survival", "conversion"]), required=True)
@click.option("--horizon", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", default=None, help="default: <cohort>/datasets/<task>[_h]")
def build_dataset(cohort_dir: str, task: str, horizon: int, seed: int, out_dir: str | None) -> None:
    """Build a leak-checked task dataset from a cohort."""
    store = CohortStore.load(cohort_dir)
    criteria = ConceptCriteria()
    samples = build_task_dataset(store, criteria, task, horizon, seed=seed)
    leaks = scan_for_leakage(store, criteria, samples)
    if leaks:
        raise click.ClickException(f"leakage scan failed: {leaks[:3]}")
    if out_dir is None:
        suffix = f"{task}_h{horizon}" if task in ("prediction", "conversion") else task
        out_dir = str(Path(cohort_dir) / "datasets" / suffix)
    write_dataset(out_dir, samples, criteria, task, horizon if task in ("prediction", "conversion") else None)
    manifest = json.loads((Path(out_dir) / "manifest.json").read_text())
    click.echo(
        f"{manifest['n_samples']} samples ({manifest['n_positive']} positive, "
        f"rate {manifest['positive_rate']}) -> {out_dir}"
    )


@main.command()
@click.option("--cohort", "cohort_dir", default=DEFAULT_COHORT, show_default=True)
@click.option("--task", type=click.Choice(["prediction", "diagnosis", "survival", "conversion"]), default="prediction", show_default=True)
@click.option("--horizon", type=int, default=3, show_default=True)
@click.option("--modality", type=click.Choice(["all", "ehr", "note", "image"]), default="all", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", default="models", show_default=True)
def train(cohort_dir: str, task: str, horizon: int, modality: str, seed: int, out_dir: str) -> None:
    """Train modality models on the cohort's training split."""
    store = CohortStore.load(cohort_dir)
    try:
        pipeline = train_pipeline(store, task=task, horizon_years=horizon, seed=seed)
    except Exception as e:
        raise click.ClickException(f"training failed: {e}")
    if modality != "all":
        keep = {modality}
        if "ehr" not in keep:
            pipeline.bundle.ehr_model = None
        if "note" not in keep:
            pipeline.bundle.note_model = None
        if "image" not in keep:
            pipeline.bundle.image_model = None
    bundle_dir = Path(out_dir) / (f"{task}_h{horizon}" if task in ("prediction", "conversion") else task)
    save_bundle(pipeline, bundle_dir)
    trained = [m for m in ("ehr", "note", "image") if pipeline.bundle.modality_available(m)]
    click.echo(f"trained {', '.join(trained)} -> {bundle_dir}")


@main.command()
@click.option("--cohort", "cohort_dir", default=DEFAULT_COHORT, show_default=True)
@click.option("--task", type=click.Choice(["prediction", "diagnosis", "survival", "conversion"]), default="prediction", show_default=True)
@click.option("--horizons", default="1,2,3", show_default=True)
@click.option("--fusion", type=click.Choice(["discussion", "equal", "min", "max", "mean"]), default="discussion", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--bootstrap", type=int, default=200, show_default=True)
@click.option("--backend", "backend_kind", type=click.Choice(["scripted", "http"]), default="scripted", show_default=True)
@click.option("--out", "out_dir", default="reports", show_default=True)
def evaluate(cohort_dir, task, horizons, fusion, seed, bootstrap, backend_kind, out_dir) -> None:
    """Run the experiment harness and emit a report bundle."""
    from .harness import ExperimentSpec, run_experiment

    store = CohortStore.load(cohort_dir)
    spec = ExperimentSpec(
        task=task,
        horizons=[int(h) for h in horizons.split(",") if h],
        fusion=fusion,
        seed=seed,
        n_bootstrap=bootstrap,
    )
    run_id = f"{task}_{fusion}_s{seed}"
    try:
        bundle = run_experiment(store, spec, _backend(backend_kind), Path(out_dir) / run_id)
    except Exception as e:
        raise click.ClickException(f"evaluation failed: {e}")
    click.echo(f"bundle {bundle['bundle_hash'][:16]} -> {Path(out_dir) / run_id}")


@main.command()
@click.option("--cohort", "cohort_dir", default=DEFAULT_COHORT, show_default=True)
@click.option("--models", "models_dir", default="models", show_default=True)
@click.option("--patient", "patient_id", required=True)
@click.option("--task", default="prediction", show_default=True)
@click.option("--horizon", type=int, default=3, show_default=True)
@click.option("--backend", "backend_kind", type=click.Choice(["scripted", "http"]), default="scripted", show_default=True)
def assess(cohort_dir, models_dir, patient_id, task, horizon, backend_kind) -> None:
    """Run one end-to-end assessment and print the report JSON."""
    store = CohortStore.load(cohort_dir)
    bundle_dir = Path(models_dir) / (f"{task}_h{horizon}" if task in ("prediction", "conversion") else task)
    if not bundle_dir.exists():
        raise click.ClickException(f"no trained models at {bundle_dir}; run `cogniboard train` first")
    bundle, ehr_agent, note_agent, image_agent, _ = load_bundle(bundle_dir)
    from .orchestrator import RuntimeContext

    ctx = RuntimeContext(
        store=store,
        bundle=bundle,
        notebook=NotebookStore(set(store.patient_ids)),
        backend=_backend(backend_kind),
        ehr_agent=ehr_agent,
        note_agent=note_agent,
        image_agent=image_agent,
    )
    goal = f"run {task} assessment with {horizon}-year horizon for patient {patient_id}"
    report = run_task(goal, ctx)
    click.echo(json.dumps(report, indent=2, sort_keys=True))
    if report["status"] == "clarification":
        sys.exit(1)


@main.command()
@click.option("--cohort", "cohort_dir", default=DEFAULT_COHORT, show_default=True)
@click.option("--task", default="prediction", show_default=True)
@click.option("--horizon", type=int, default=3, show_default=True)
@click.option("--sizes", default="0,2,4,6", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", default="reports/notebook_scaling.json", show_default=True)
def distill(cohort_dir, task, horizon, sizes, seed, out_path) -> None:
    """Distill notebook entries from mispredictions and emit the scaling curve."""
    from .harness import collect_error_pool, notebook_scaling_curve

    store = CohortStore.load(cohort_dir)
    backend = ScriptedBackend()
    pipeline = train_pipeline(store, task=task, horizon_years=horizon, seed=seed)
    size_list = [int(s) for s in sizes.split(",") if s]
    pool, idx = collect_error_pool(pipeline, backend, max_cases=max(size_list) + 4)
    curve = notebook_scaling_curve(pipeline, backend, size_list, pool, idx)
    payload = {
        "sizes": size_list,
        "points": [
            {"size": p.size, "auroc": p.auroc, "notebook_version": p.notebook_version, "n_entries": p.n_entries}
            for p in curve.points
        ],
        "eval_n": curve.eval_n,
        "eval_positives": curve.eval_positives,
    }
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    click.echo(json.dumps(payload["points"]))


@main.command()
@click.option("--cohort", "cohort_dir", default=DEFAULT_COHORT, show_default=True)
@click.option("--models", "models_dir", default="models", show_default=True)
@click.option("--task", default="prediction", show_default=True)
@click.option("--horizon", type=int, default=3, show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--backend", "backend_kind", type=click.Choice(["scripted", "http"]), default="scripted", show_default=True)
@click.option("--static-dir", default=None, help="directory of built dashboard assets")
@click.option("--bootstrap-demo", is_flag=True, help="generate a small cohort and train models before serving")
@click.option("--demo-patients", type=int, default=150, show_default=True)
def serve(cohort_dir, models_dir, task, horizon, port, host, backend_kind, static_dir, bootstrap_demo, demo_patients) -> None:
    """Serve the HTTP API (and the dashboard when static assets exist)."""
    import uvicorn

    from .service import AppState, create_app

    if bootstrap_demo:
        cohort_path = Path(cohort_dir)
        if not (cohort_path / "manifest.json").exists():
            generate_cohort(CohortConfig(n_patients=demo_patients, seed=42, prevalence=0.18), cohort_path)
            click.echo(f"demo cohort generated at {cohort_path}")
        store = CohortStore.load(cohort_dir)
        bundle_dir = Path(models_dir) / (f"{task}_h{horizon}" if task in ("prediction", "conversion") else task)
        if not bundle_dir.exists():
            pipeline = train_pipeline(store, task=task, horizon_years=horizon, seed=42, note_epochs=150)
            save_bundle(pipeline, bundle_dir)
            click.echo(f"demo models trained at {bundle_dir}")
    store = CohortStore.load(cohort_dir)
    bundle_dir = Path(models_dir) / (f"{task}_h{horizon}" if task in ("prediction", "conversion") else task)
    if not bundle_dir.exists():
        raise click.ClickException(f"no trained models at {bundle_dir}; run `cogniboard train` first")
    bundle, ehr_agent, note_agent, image_agent, _ = load_bundle(bundle_dir)
    notebook_dir = Path(cohort_dir) / "notebook"
    if (notebook_dir / "view.json").exists():
        notebook = NotebookStore.load(notebook_dir)
    else:
        notebook = NotebookStore(set(store.patient_ids))
    state = AppState(
        store=store,
        notebook=notebook,
        backend=_backend(backend_kind),
        bundles={task: bundle},
        agents={"ehr": ehr_agent, "note": note_agent, "image": image_agent},
        notebook_dir=notebook_dir,
    )
    app = create_app(state, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("export-openapi")
@click.option("--out", "out_path", default="docs/openapi.json", show_default=True)
def export_openapi(out_path: str) -> None:
    """Write the OpenAPI description of the HTTP surface."""
    from .service import AppState, create_app

    class _Dummy:
        pass

    state = AppState(store=_Dummy(), notebook=NotebookStore(), backend=ScriptedBackend())
    app = create_app(state)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(json.dumps(app.openapi(), indent=2, sort_keys=True) + "\n")
    click.echo(f"openapi description -> {out_path}")


if __name__ == "__main__":
    main()
