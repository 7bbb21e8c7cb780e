from __future__ import annotations

from pathlib import Path

import pytest

from cascadekit.records import PairedDataset, align_records, load_prediction_records

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return REPO_ROOT / "data"


@pytest.fixture(scope="session")
def costs_dir() -> Path:
    return REPO_ROOT / "costs"


@pytest.fixture(scope="session")
def bundled_paired(data_dir: Path) -> PairedDataset:
    records_a = load_prediction_records(str(data_dir / "model_a.jsonl"))
    records_b = load_prediction_records(str(data_dir / "model_b.jsonl"))
    return align_records(records_a, records_b)
