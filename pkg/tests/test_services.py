import random

import pytest

from civic_cred.blindsig import BlindingFactor
from civic_cred.credentials import (IssueRequest, Presentation,
                                    create_issue_request, finalize_credential,
                                    take_for_presentation)
from civic_cred.errors import GossipDomainMismatch
from civic_cred.services.issuer import CitizenSession
from civic_cred.services.spent import SpentSet, gossip_round, gossip_spent
from civic_cred.services.transcript import (DENIAL, GOSSIP, ISSUANCE,
                                            PRESENTATION, load_transcript,
                                            save_transcript)
from civic_cred.services.wire import Denial, RejectReason

from .conftest import ISSUER, REGION_X, REGION_Y


def _serial(i):
    return i.to_bytes(32, "big")


class TestIssuer:
    def test_signs_blinded_value(self, issuer, taxpayer):
        response = issuer.handle_issue_request(taxpayer, IssueRequest(REGION_X, 9))
        assert response.granted
        assert response.blinded_signature == 4

    def test_ineligible(self, issuer):
        stranger = CitizenSession("citizen-999", frozenset())
        response = issuer.handle_issue_request(stranger, IssueRequest(REGION_X, 9))
        assert response.denial is Denial.NOT_ELIGIBLE

    def test_quota(self, issuer, taxpayer):
        for _ in range(3):
            assert issuer.handle_issue_request(taxpayer, IssueRequest(REGION_X, 9)).granted
        response = issuer.handle_issue_request(taxpayer, IssueRequest(REGION_X, 9))
        assert response.denial is Denial.QUOTA_EXCEEDED

    def test_quota_resets_next_period(self, issuer, taxpayer):
        issuer.period_ticks = 5
        outcomes = [issuer.handle_issue_request(taxpayer, IssueRequest(REGION_X, 9)).granted for _ in range(6)]
        assert outcomes == [True, True, True, False, False, False]
        assert issuer.handle_issue_request(taxpayer, IssueRequest(REGION_X, 9)).granted

    def test_unknown_attribute(self, issuer, taxpayer):
        response = issuer.handle_issue_request(taxpayer, IssueRequest("resident:city-Z", 9))
        assert response.denial is Denial.UNKNOWN_ATTRIBUTE

    @pytest.mark.parametrize("blinded", [0, 55, 100])
    def test_malformed_blinded_value(self, issuer, taxpayer, blinded):
        response = issuer.handle_issue_request(taxpayer, IssueRequest(REGION_X, blinded))
        assert response.denial is Denial.MALFORMED_REQUEST

    def test_transcript_holds_only_blinded_values(self, issuer, taxpayer):
        issuer.handle_issue_request(taxpayer, IssueRequest(REGION_X, 9))
        issuer.handle_issue_request(CitizenSession("nobody"), IssueRequest(REGION_X, 9))
        events = issuer.transcript.events
        assert [e.kind for e in events] == [ISSUANCE, DENIAL]
        assert events[0].payload == {"attribute_id": REGION_X, "blinded_value": "9"}
        assert events[1].payload == {"attribute_id": REGION_X, "reason": "not_eligible"}


class TestRelyingParty:
    @pytest.fixture
    def presentation(self, wallet, issuer, taxpayer, toy_directory, serial_m8):
        request, pending = create_issue_request(
            wallet, REGION_X, toy_directory, ISSUER,
            serial=serial_m8, blinding_factor=BlindingFactor.from_r(2, 55),
        )
        response = issuer.handle_issue_request(taxpayer, request)
        finalize_credential(wallet, pending, response.blinded_signature)
        return take_for_presentation(wallet, serial_m8)

    def test_accept_then_double_spend(self, make_rp, presentation):
        rp = make_rp()
        assert rp.handle_presentation(presentation).accepted
        assert rp.handle_presentation(presentation).reason is RejectReason.DOUBLE_SPEND

    def test_tampered_signature(self, make_rp, presentation):
        rp = make_rp()
        forged = Presentation(presentation.attribute_id, presentation.serial, 3)
        assert rp.handle_presentation(forged).reason is RejectReason.BAD_SIGNATURE
        assert presentation.serial not in rp.spent

    def test_short_serial_is_a_bad_signature(self, make_rp):
        rp = make_rp()
        result = rp.handle_presentation(Presentation(REGION_X, b"\x01" * 31, 2))
        assert result.reason is RejectReason.BAD_SIGNATURE
        assert [e.payload["outcome"] for e in rp.transcript.events] == ["bad_signature"]
        assert len(rp.spent) == 0

    def test_unknown_attribute_first(self, make_rp, presentation):
        rp = make_rp()
        rp.handle_presentation(presentation)
        replay = Presentation(REGION_Y, presentation.serial, 3)
        assert rp.handle_presentation(replay).reason is RejectReason.UNKNOWN_ATTRIBUTE

    def test_bad_signature_before_double_spend(self, make_rp, presentation):
        rp = make_rp()
        rp.handle_presentation(presentation)
        forged = Presentation(presentation.attribute_id, presentation.serial, 3)
        assert rp.handle_presentation(forged).reason is RejectReason.BAD_SIGNATURE

    def test_transcript(self, make_rp, presentation):
        rp = make_rp()
        rp.handle_presentation(presentation)
        rp.handle_presentation(presentation)
        payloads = [e.payload for e in rp.transcript.events if e.kind == PRESENTATION]
        assert [p["outcome"] for p in payloads] == ["accept", "double_spend"]
        assert set(payloads[0]) == {"attribute_id", "serial", "outcome"}

    def test_gossip_closes_the_race(self, make_rp, presentation):
        a, b = make_rp("transit-0"), make_rp("transit-1")
        assert a.handle_presentation(presentation).accepted
        gossip_spent(a, b)
        assert b.handle_presentation(presentation).reason is RejectReason.DOUBLE_SPEND

    def test_race_before_gossip(self, make_rp, presentation):
        a, b = make_rp("transit-0"), make_rp("transit-1")
        assert a.handle_presentation(presentation).accepted
        assert b.handle_presentation(presentation).accepted


class TestGossip:
    def test_pair(self, make_rp):
        a, b = make_rp("transit-0"), make_rp("transit-1")
        a.spent.add_if_absent(_serial(1))
        b.spent.add_if_absent(_serial(2))
        gossip_spent(a, b)
        assert a.spent.snapshot() == b.spent.snapshot() == {_serial(1), _serial(2)}
        gossip_spent(a, b)
        assert a.spent.snapshot() == {_serial(1), _serial(2)}

    def test_gossip_events_only_when_something_was_learned(self, make_rp):
        a, b = make_rp("transit-0"), make_rp("transit-1")
        a.spent.add_if_absent(_serial(1))
        gossip_spent(a, b)
        gossip_spent(a, b)
        events = [e for e in b.transcript.events if e.kind == GOSSIP]
        assert [e.payload for e in events] == [{"peer": "transit-0", "learned": 1}]
        assert not [e for e in a.transcript.events if e.kind == GOSSIP]

    def test_domain_mismatch(self, make_rp):
        a = make_rp("transit-0")
        b = make_rp("museum-0", attributes=frozenset({REGION_Y}))
        with pytest.raises(GossipDomainMismatch):
            gossip_spent(a, b)

    @pytest.mark.parametrize("seed", range(100))
    def test_one_round_converges(self, make_rp, seed):
        rng = random.Random(seed)
        nodes = [make_rp(f"transit-{i}") for i in range(5)]
        union = set()
        for i, node in enumerate(nodes):
            for j in range(rng.randrange(1, 6)):
                serial = _serial(1000 * i + j)
                node.spent.add_if_absent(serial)
                union.add(serial)
        gossip_round(nodes, rng)
        assert all(node.spent.snapshot() == union for node in nodes)

    def test_spent_set_is_grow_only(self):
        spent = SpentSet([_serial(1)])
        assert not spent.add_if_absent(_serial(1))
        assert spent.merge([_serial(1), _serial(2)]) == 1
        assert len(spent) == 2
        assert not hasattr(spent, "remove")


def test_transcript_file_round_trip(tmp_path, issuer, taxpayer):
    issuer.handle_issue_request(taxpayer, IssueRequest(REGION_X, 9))
    issuer.handle_issue_request(taxpayer, IssueRequest("nope", 9))
    path = save_transcript(issuer.transcript.events, tmp_path, issuer.name)
    assert path.name == "tax-office.jsonl"
    assert load_transcript(path) == issuer.transcript.events
