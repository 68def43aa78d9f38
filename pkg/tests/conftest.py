from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from sopa import load_model, load_variant_config

TESTS = Path(__file__).resolve().parent
FIXTURES = TESTS / "fixtures"
HIRING = TESTS.parent / "demo" / "hiring"

# default simulation epoch
T0 = datetime(2026, 7, 17, 15, 35, 28, tzinfo=timezone(timedelta(hours=2)))


@pytest.fixture(scope="session")
def hiring_model():
    return load_model(HIRING / "hiring.bpmn")


@pytest.fixture(scope="session")
def hiring_model_c():
    # behavioral override: exactly four interviews per trace
    return load_model(HIRING / "hiring.bpmn", HIRING / "scenario_c_behavior.xml")


@pytest.fixture(scope="session")
def scenario_a():
    return load_variant_config(HIRING / "scenario_a.variants.xml")


@pytest.fixture(scope="session")
def scenario_b():
    return load_variant_config(HIRING / "scenario_b.variants.xml")


@pytest.fixture(scope="session")
def scenario_c():
    return load_variant_config(HIRING / "scenario_c.variants.xml")


@pytest.fixture(scope="session")
def mixed_config():
    return load_variant_config(HIRING / "mixed.variants.xml")
