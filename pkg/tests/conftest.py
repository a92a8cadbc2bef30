from __future__ import annotations

import pytest

from cogniboard.pipeline import train_pipeline
from cogniboard.store import CohortConfig, CohortStore, generate_cohort


@pytest.fixture(scope="session")
def shared_store(tmp_path_factory):
    """Mid-size cohort shared by orchestrator/harness/api tests."""
    out = tmp_path_factory.mktemp("shared_cohort")
    generate_cohort(CohortConfig(n_patients=150, seed=42, prevalence=0.18), out)
    return CohortStore.load(out), out


@pytest.fixture(scope="session")
def shared_pipeline(shared_store):
    store, _ = shared_store
    return train_pipeline(store, task="prediction", horizon_years=2, seed=42, note_epochs=150)
