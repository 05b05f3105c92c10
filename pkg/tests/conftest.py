"""Shared scenario factories for the test suite."""

import dataclasses

import pytest

from decoysim import AdversaryKind, Protocol, RampModel, Scenario


def decoy_scenario(**overrides) -> Scenario:
    """A small, fast decoy-transmission scenario; override freely."""
    fields = dict(
        protocol=Protocol.DECOY_FORCE,
        seed=42,
        dt=1.0,
        max_ticks=120,
        secret_domain=(1, 100),
        party_secrets={"alice": 3, "bob": 5},
        ramp_model=RampModel.RANDOM_RAMP,
        hold_ticks=3,
        epsilon_stab=0.0,
        noise_sigma=0.0,
        adversary=AdversaryKind.NONE,
        defense_enabled=True,
    )
    fields.update(overrides)
    return Scenario(**fields)


def sync_scenario(**overrides) -> Scenario:
    """Synchronous idealized-control variant (zero leakage by construction)."""
    fields = dict(
        ramp_model=RampModel.SYNCHRONOUS,
        defense_enabled=False,
        secret_domain=(1, 8),
        party_secrets={"alice": 3, "bob": 5},
    )
    fields.update(overrides)
    return decoy_scenario(**fields)


def vessels_scenario(**overrides) -> Scenario:
    fields = dict(
        protocol=Protocol.VESSELS,
        secret_domain=(1, 50),
        party_secrets={"alice": 5, "bob": 3},
        hold_ticks=10,
    )
    fields.update(overrides)
    return decoy_scenario(**fields)


def with_seed(scenario: Scenario, seed: int) -> Scenario:
    return dataclasses.replace(scenario, seed=seed)


@pytest.fixture
def tmp_config(tmp_path):
    """Write config text to a temp file and return its path."""

    def _write(text: str, name: str = "scenario.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return _write
