"""Bit-exact wire format for issuer and relying-party messages.

Messages are canonical JSON objects {"body": {...}, "kind": "..."} encoded as
UTF-8 with sorted keys and no whitespace. Integers are lowercase hex without
leading zeros; serials are 64 lowercase hex characters. Every body must match
one of its kind's field sets exactly: an extra or missing field is a
malformed message, and so is any input that does not re-encode to the same
bytes.

Example:
    data = encode(to_wire(IssueRequest("taxpayer:region-X", 9)))
    # b'{"body":{"attribute_id":"taxpayer:region-X","blinded_value":"9"},"kind":"ISSUE_REQUEST"}'
    request = from_wire(decode(data))
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

from ..blindsig import SERIAL_BYTES
from ..credentials import IssueRequest, Presentation
from ..errors import MalformedMessage
from ..utils.serialization import (bytes_to_hex, canonical_dumps, hex_to_bytes,
                                   hex_to_int, int_to_hex, loads)


class MessageKind(str, Enum):
    ISSUE_REQUEST = "ISSUE_REQUEST"
    ISSUE_RESPONSE = "ISSUE_RESPONSE"
    PRESENTATION = "PRESENTATION"
    RESULT = "RESULT"
    GOSSIP = "GOSSIP"


class Denial(str, Enum):
    """Why an issuer refused to sign."""

    UNKNOWN_ATTRIBUTE = "unknown_attribute"
    NOT_ELIGIBLE = "not_eligible"
    QUOTA_EXCEEDED = "quota_exceeded"
    MALFORMED_REQUEST = "malformed_request"


class Outcome(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class RejectReason(str, Enum):
    """Why a relying party refused a presentation, in precedence order."""

    UNKNOWN_ATTRIBUTE = "unknown_attribute"
    BAD_SIGNATURE = "bad_signature"
    DOUBLE_SPEND = "double_spend"


@dataclass(frozen=True)
class IssueResponse:
    attribute_id: str
    blinded_signature: Optional[int] = None
    denial: Optional[Denial] = None

    @property
    def granted(self) -> bool:
        return self.denial is None


@dataclass(frozen=True)
class PresentationResult:
    outcome: Outcome
    reason: Optional[RejectReason] = None

    @property
    def accepted(self) -> bool:
        return self.outcome is Outcome.ACCEPT


@dataclass(frozen=True)
class GossipMessage:
    sender: str
    attributes: FrozenSet[str]
    serials: FrozenSet[bytes]


@dataclass(frozen=True)
class WireMessage:
    kind: MessageKind
    body: Mapping[str, Any]


def _is_str(value: Any) -> bool:
    return isinstance(value, str) and value != ""


def _is_int(value: Any) -> bool:
    try:
        hex_to_int(value)
    except ValueError:
        return False
    return True


def _is_serial(value: Any) -> bool:
    try:
        hex_to_bytes(value, SERIAL_BYTES)
    except ValueError:
        return False
    return True


def _one_of(enum_cls) -> Callable[[Any], bool]:
    values = {member.value for member in enum_cls}
    return lambda value: isinstance(value, str) and value in values


def _sorted_unique(check: Callable[[Any], bool]) -> Callable[[Any], bool]:
    def _check(value: Any) -> bool:
        return (
            isinstance(value, list)
            and all(check(item) for item in value)
            and value == sorted(set(value))
        )

    return _check


# kind -> alternative exact field sets, each mapping field -> validator
SCHEMAS: Dict[MessageKind, Tuple[Dict[str, Callable[[Any], bool]], ...]] = {
    MessageKind.ISSUE_REQUEST: (
        {"attribute_id": _is_str, "blinded_value": _is_int},
    ),
    MessageKind.ISSUE_RESPONSE: (
        {"attribute_id": _is_str, "blinded_signature": _is_int},
        {"attribute_id": _is_str, "denial": _one_of(Denial)},
    ),
    MessageKind.PRESENTATION: (
        {"attribute_id": _is_str, "serial": _is_serial, "signature": _is_int},
    ),
    MessageKind.RESULT: (
        {"outcome": lambda value: value == Outcome.ACCEPT.value},
        {
            "outcome": lambda value: value == Outcome.REJECT.value,
            "reason": _one_of(RejectReason),
        },
    ),
    MessageKind.GOSSIP: (
        {
            "sender": _is_str,
            "attributes": _sorted_unique(_is_str),
            "serials": _sorted_unique(_is_serial),
        },
    ),
}


def _validate(kind: MessageKind, body: Mapping[str, Any]) -> None:
    if not isinstance(body, Mapping):
        raise MalformedMessage(f"{kind.value} body is not an object")
    for schema in SCHEMAS[kind]:
        if set(body) == set(schema) and all(
            check(body[name]) for name, check in schema.items()
        ):
            return
    raise MalformedMessage(f"{kind.value} body does not match its schema: {sorted(body)}")


def encode(msg: WireMessage) -> bytes:
    """Canonical UTF-8 bytes for a schema-valid message.

    Raises:
        MalformedMessage: If the body does not match the kind's schema
    """
    try:
        kind = MessageKind(msg.kind)
    except ValueError:
        raise MalformedMessage(f"Unknown message kind: {msg.kind!r}") from None
    _validate(kind, msg.body)
    return canonical_dumps({"body": dict(msg.body), "kind": kind.value}).encode("utf-8")


def decode(data: bytes) -> WireMessage:
    """Parse and strictly validate wire bytes.

    Raises:
        MalformedMessage: On invalid UTF-8 or JSON, unknown kinds, schema
            mismatches or non-canonical encodings
    """
    try:
        doc = loads(data.decode("utf-8"))
    except (UnicodeDecodeError, ValueError, AttributeError) as e:
        raise MalformedMessage(f"Undecodable message: {e}") from e

    if not isinstance(doc, dict) or set(doc) != {"body", "kind"}:
        raise MalformedMessage("Message must be an object with exactly body and kind")
    try:
        kind = MessageKind(doc["kind"])
    except (ValueError, TypeError):
        raise MalformedMessage(f"Unknown message kind: {doc['kind']!r}") from None

    msg = WireMessage(kind=kind, body=doc["body"])
    if encode(msg) != data:
        raise MalformedMessage("Message is not in canonical form")
    return msg


def to_wire(obj: Union[IssueRequest, IssueResponse, Presentation, PresentationResult, GossipMessage]) -> WireMessage:
    """Wrap a protocol object into its WireMessage."""
    if isinstance(obj, IssueRequest):
        return WireMessage(
            MessageKind.ISSUE_REQUEST,
            {"attribute_id": obj.attribute_id, "blinded_value": int_to_hex(obj.blinded_value)},
        )
    if isinstance(obj, IssueResponse):
        if obj.granted:
            body = {"attribute_id": obj.attribute_id, "blinded_signature": int_to_hex(obj.blinded_signature)}
        else:
            body = {"attribute_id": obj.attribute_id, "denial": obj.denial.value}
        return WireMessage(MessageKind.ISSUE_RESPONSE, body)
    if isinstance(obj, Presentation):
        return WireMessage(
            MessageKind.PRESENTATION,
            {
                "attribute_id": obj.attribute_id,
                "serial": bytes_to_hex(obj.serial),
                "signature": int_to_hex(obj.signature),
            },
        )
    if isinstance(obj, PresentationResult):
        body = {"outcome": obj.outcome.value}
        if obj.reason is not None:
            body["reason"] = obj.reason.value
        return WireMessage(MessageKind.RESULT, body)
    if isinstance(obj, GossipMessage):
        return WireMessage(
            MessageKind.GOSSIP,
            {
                "sender": obj.sender,
                "attributes": sorted(obj.attributes),
                "serials": sorted(bytes_to_hex(serial) for serial in obj.serials),
            },
        )
    raise TypeError(f"No wire form for {type(obj).__name__}")


def from_wire(msg: WireMessage):
    """Turn a decoded WireMessage back into its protocol object."""
    body = msg.body
    if msg.kind is MessageKind.ISSUE_REQUEST:
        return IssueRequest(body["attribute_id"], hex_to_int(body["blinded_value"]))
    if msg.kind is MessageKind.ISSUE_RESPONSE:
        if "denial" in body:
            return IssueResponse(body["attribute_id"], denial=Denial(body["denial"]))
        return IssueResponse(body["attribute_id"], blinded_signature=hex_to_int(body["blinded_signature"]))
    if msg.kind is MessageKind.PRESENTATION:
        return Presentation(
            attribute_id=body["attribute_id"],
            serial=hex_to_bytes(body["serial"], SERIAL_BYTES),
            signature=hex_to_int(body["signature"]),
        )
    if msg.kind is MessageKind.RESULT:
        reason = body.get("reason")
        return PresentationResult(Outcome(body["outcome"]), RejectReason(reason) if reason else None)
    if msg.kind is MessageKind.GOSSIP:
        return GossipMessage(
            sender=body["sender"],
            attributes=frozenset(body["attributes"]),
            serials=frozenset(hex_to_bytes(serial, SERIAL_BYTES) for serial in body["serials"]),
        )
    raise MalformedMessage(f"Unknown message kind: {msg.kind!r}")


def transmit(obj):
    """Encode then decode, as a message crossing a node boundary would."""
    return from_wire(decode(encode(to_wire(obj))))


def field_names(obj) -> List[str]:
    """Sorted body field names of an object's wire form."""
    return sorted(to_wire(obj).body)
