"""Shared fixtures: synthetic datasets at the scales the engine targets."""

from __future__ import annotations

import pytest

from vizlink import ingest_csv

from datagen import build_netflix_csv, build_steel_csv

@pytest.fixture(scope="session")
def netflix_csv() -> bytes:
    return build_netflix_csv()


@pytest.fixture(scope="session")
def netflix_dataset(netflix_csv):
    return ingest_csv(netflix_csv, "Netflix Stock", dataset_id="netflix")


@pytest.fixture(scope="session")
def steel_csv() -> bytes:
    return build_steel_csv()


@pytest.fixture(scope="session")
def steel_dataset(steel_csv):
    return ingest_csv(steel_csv, "Steel Manufacturing", dataset_id="steel")
