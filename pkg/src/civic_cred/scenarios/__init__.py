"""Deterministic, seeded simulations: transit discounts and contact tracing."""

from .tracing import (Agent, BulletinBoard, EphemeralToken, ExposureReport,
                      ProximityEvent, ground_truth_exposed, infectious_window,
                      match_exposures, rotate_ephemeral_id,
                      run_contact_tracing_scenario, write_tracing_run)
from .transit import (SimulationReport, issue_attribute_keys,
                      run_transit_scenario, write_transit_run)

__all__ = [
    # transit
    "SimulationReport",
    "issue_attribute_keys",
    "run_transit_scenario",
    "write_transit_run",
    # tracing
    "EphemeralToken",
    "ProximityEvent",
    "Agent",
    "BulletinBoard",
    "ExposureReport",
    "rotate_ephemeral_id",
    "match_exposures",
    "infectious_window",
    "ground_truth_exposed",
    "run_contact_tracing_scenario",
    "write_tracing_run",
]
