"""Issuer and relying-party nodes, the wire codec, spent-sets and transcripts."""

from .issuer import (CitizenSession, IssuerNode, handle_issue_request,
                     holds_attribute)
from .relying_party import RelyingPartyNode, handle_presentation
from .spent import SpentSet, gossip_round, gossip_spent
from .transcript import (DEFAULT_SCHEMAS, DENIAL, GOSSIP, ISSUANCE,
                         PRESENTATION, PUBLICATION, LogicalClock, Transcript,
                         TranscriptEvent, load_transcript, save_transcript)
from .wire import (Denial, GossipMessage, IssueResponse, MessageKind, Outcome,
                   PresentationResult, RejectReason, WireMessage, decode,
                   encode, from_wire, to_wire, transmit)

__all__ = [
    # issuer
    "CitizenSession",
    "IssuerNode",
    "handle_issue_request",
    "holds_attribute",
    # relying_party
    "RelyingPartyNode",
    "handle_presentation",
    # spent
    "SpentSet",
    "gossip_spent",
    "gossip_round",
    # transcript
    "LogicalClock",
    "Transcript",
    "TranscriptEvent",
    "DEFAULT_SCHEMAS",
    "ISSUANCE",
    "DENIAL",
    "PRESENTATION",
    "GOSSIP",
    "PUBLICATION",
    "save_transcript",
    "load_transcript",
    # wire
    "MessageKind",
    "WireMessage",
    "Denial",
    "Outcome",
    "RejectReason",
    "IssueResponse",
    "PresentationResult",
    "GossipMessage",
    "encode",
    "decode",
    "to_wire",
    "from_wire",
    "transmit",
]
