import random

import pytest

from civic_cred.errors import InvalidConfig, InvalidEpoch, UnsortedInput
from civic_cred.scenarios.tracing import (EphemeralToken, ProximityEvent,
                                          match_exposures,
                                          rotate_ephemeral_id,
                                          run_contact_tracing_scenario,
                                          write_tracing_run)
from civic_cred.services.transcript import PUBLICATION, load_transcript
from civic_cred.utils.config import ScenarioConfig

SEED_A = bytes(32)
SEED_B = bytes([1]) * 32


class TestEphemeralIds:
    def test_deterministic(self):
        assert rotate_ephemeral_id(SEED_A, 5) == rotate_ephemeral_id(SEED_A, 5)

    def test_sixteen_bytes(self):
        token = rotate_ephemeral_id(SEED_A, 0)
        assert len(token.token) == 16
        assert token.epoch == 0

    def test_unique_over_epochs(self):
        tokens = {rotate_ephemeral_id(SEED_A, epoch).token for epoch in range(10_000)}
        assert len(tokens) == 10_000

    def test_negative_epoch(self):
        with pytest.raises(InvalidEpoch):
            rotate_ephemeral_id(SEED_A, -1)


class TestMatchExposures:
    def test_no_overlap(self):
        heard = [rotate_ephemeral_id(SEED_B, 3)]
        assert match_exposures(heard, [SEED_A], range(10)) == set()

    def test_one_overlap(self):
        heard = [rotate_ephemeral_id(SEED_B, 1), rotate_ephemeral_id(SEED_A, 4)]
        assert match_exposures(heard, [SEED_A], range(10)) == {4}

    def test_outside_window(self):
        heard = [rotate_ephemeral_id(SEED_A, 4)]
        assert match_exposures(heard, [SEED_A], range(5, 10)) == set()

    def test_unsorted(self):
        heard = [rotate_ephemeral_id(SEED_A, 4), rotate_ephemeral_id(SEED_A, 1)]
        with pytest.raises(UnsortedInput):
            match_exposures(heard, [SEED_A], range(10))

    def test_token_replayed_at_another_epoch_does_not_match(self):
        replayed = EphemeralToken(epoch=6, token=rotate_ephemeral_id(SEED_A, 4).token)
        assert match_exposures([replayed], [SEED_A], range(10)) == set()


def test_proximity_event_needs_two_agents():
    with pytest.raises(ValueError):
        ProximityEvent(1, "agent-000", "agent-000")


def test_three_agents():
    config = ScenarioConfig(citizens=3, epochs=10)
    events = [ProximityEvent(2, "agent-000", "agent-001")]
    report = run_contact_tracing_scenario(config, events=events, infected=["agent-000"])
    assert report.exposed == ["agent-001"]
    assert report.exposure_epochs == {"agent-001": [2]}


def test_no_infected_agents():
    config = ScenarioConfig(citizens=10, proximity_events=50, seed=4)
    report = run_contact_tracing_scenario(config, infected=[])
    assert report.exposed == []
    assert report.board.seeds == []


def test_fifty_agents_match_brute_force():
    config = ScenarioConfig(seed=11, citizens=50, epochs=28, infectious_window=14)
    rng = random.Random(99)
    names = [f"agent-{i:03d}" for i in range(50)]
    events = []
    for _ in range(300):
        a, b = rng.sample(names, 2)
        events.append(ProximityEvent(rng.randrange(28), a, b))
    infected = rng.sample(names, 4)

    expected = set()
    for event in events:
        if event.epoch < 14:
            continue
        if event.agent_a in infected:
            expected.add(event.agent_b)
        if event.agent_b in infected:
            expected.add(event.agent_a)

    report = run_contact_tracing_scenario(config, events=events, infected=infected)
    assert set(report.exposed) == expected
    assert report.ground_truth == sorted(expected)


def test_seeded_run_matches_its_ground_truth():
    config = ScenarioConfig(seed=5, citizens=50, proximity_events=200, infected=3)
    report = run_contact_tracing_scenario(config)
    assert report.exposed == report.ground_truth
    assert len(report.infected) == 3


def test_bulletin_board_holds_only_seeds():
    config = ScenarioConfig(seed=5, citizens=20, proximity_events=80, infected=2)
    report = run_contact_tracing_scenario(config)
    assert set(report.board.state()) == {"seeds"}
    assert len(report.board.state()["seeds"]) == 2
    events = report.board.transcript.events
    assert {e.kind for e in events} == {PUBLICATION}
    assert all(set(e.payload) == {"seed"} for e in events)


def test_invalid_overrides():
    config = ScenarioConfig(citizens=3, epochs=10)
    with pytest.raises(InvalidConfig):
        run_contact_tracing_scenario(config, events=[], infected=["agent-007"])
    with pytest.raises(InvalidConfig):
        run_contact_tracing_scenario(config, events=[ProximityEvent(12, "agent-000", "agent-001")], infected=[])
    with pytest.raises(InvalidConfig):
        run_contact_tracing_scenario(config.merged(infected=4))


def test_deterministic_outputs(tmp_path):
    config = ScenarioConfig(seed=8, citizens=30, proximity_events=100, infected=2)
    first = write_tracing_run(run_contact_tracing_scenario(config), tmp_path / "a")
    second = write_tracing_run(run_contact_tracing_scenario(config), tmp_path / "b")
    for name in ("exposure_report.json", "bulletin_board.jsonl"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert len(load_transcript(first / "bulletin_board.jsonl")) == 2
