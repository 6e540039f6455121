import pytest

from civic_cred.credentials import IssueRequest, Presentation
from civic_cred.errors import MalformedMessage
from civic_cred.services.wire import (Denial, GossipMessage, IssueResponse,
                                      MessageKind, Outcome,
                                      PresentationResult, RejectReason,
                                      WireMessage, decode, encode, from_wire,
                                      to_wire, transmit)

SERIAL = bytes(range(32))


def test_issue_request_bytes():
    data = encode(to_wire(IssueRequest("taxpayer:region-X", 9)))
    assert data == (
        b'{"body":{"attribute_id":"taxpayer:region-X","blinded_value":"9"},'
        b'"kind":"ISSUE_REQUEST"}'
    )


def test_presentation_bytes():
    data = encode(to_wire(Presentation("taxpayer:region-X", SERIAL, 255)))
    assert b'"serial":"' + SERIAL.hex().encode() + b'"' in data
    assert b'"signature":"ff"' in data


@pytest.mark.parametrize(
    "obj",
    [
        IssueRequest("taxpayer:region-X", 9),
        IssueResponse("taxpayer:region-X", blinded_signature=4),
        IssueResponse("taxpayer:region-X", denial=Denial.QUOTA_EXCEEDED),
        Presentation("taxpayer:region-X", SERIAL, 2),
        PresentationResult(Outcome.ACCEPT),
        PresentationResult(Outcome.REJECT, RejectReason.DOUBLE_SPEND),
        GossipMessage("transit-0", frozenset({"taxpayer:region-X"}), frozenset({SERIAL, bytes(32)})),
    ],
)
def test_transmit_preserves_objects(obj):
    assert transmit(obj) == obj
    data = encode(to_wire(obj))
    assert encode(decode(data)) == data


def test_extra_field():
    body = {"attribute_id": "taxpayer:region-X", "blinded_value": "9", "citizen_name": "Ann"}
    with pytest.raises(MalformedMessage):
        encode(WireMessage(MessageKind.ISSUE_REQUEST, body))
    data = b'{"body":' + b'{"attribute_id":"taxpayer:region-X","blinded_value":"9","citizen_name":"Ann"}' + b',"kind":"ISSUE_REQUEST"}'
    with pytest.raises(MalformedMessage):
        decode(data)


def test_missing_field():
    with pytest.raises(MalformedMessage):
        decode(b'{"body":{"attribute_id":"taxpayer:region-X"},"kind":"ISSUE_REQUEST"}')


def test_truncated_bytes():
    data = encode(to_wire(IssueRequest("taxpayer:region-X", 9)))
    with pytest.raises(MalformedMessage):
        decode(data[:-3])


@pytest.mark.parametrize(
    "data",
    [
        b'{"kind":"ISSUE_REQUEST","body":{"attribute_id":"taxpayer:region-X","blinded_value":"9"}}',
        b'{"body":{"attribute_id":"taxpayer:region-X","blinded_value":"09"},"kind":"ISSUE_REQUEST"}',
        b'{"body":{"attribute_id":"taxpayer:region-X","blinded_value":"9"}, "kind":"ISSUE_REQUEST"}',
        b'{"body":{"attribute_id":"taxpayer:region-X","blinded_value":"9"},"kind":"SHOUT"}',
        b'\xff\xfe',
        b'[]',
    ],
)
def test_non_canonical_or_unknown(data):
    with pytest.raises(MalformedMessage):
        decode(data)


def test_short_serial():
    data = (
        b'{"body":{"attribute_id":"a","serial":"00ff","signature":"2"},"kind":"PRESENTATION"}'
    )
    with pytest.raises(MalformedMessage):
        decode(data)


def test_result_variants_are_exclusive():
    with pytest.raises(MalformedMessage):
        encode(WireMessage(MessageKind.RESULT, {"outcome": "accept", "reason": "double_spend"}))
    with pytest.raises(MalformedMessage):
        encode(WireMessage(MessageKind.RESULT, {"outcome": "reject"}))


def test_unsorted_gossip_serials():
    body = {"sender": "transit-0", "attributes": ["a"], "serials": [SERIAL.hex(), bytes(32).hex()]}
    with pytest.raises(MalformedMessage):
        encode(WireMessage(MessageKind.GOSSIP, body))


def test_from_wire_round_trip_of_denial():
    msg = decode(encode(to_wire(IssueResponse("x", denial=Denial.NOT_ELIGIBLE))))
    response = from_wire(msg)
    assert not response.granted
    assert response.denial is Denial.NOT_ELIGIBLE
