"""Relying-party node: verifies bare credentials and burns their serials."""

import threading
from dataclasses import dataclass, field
from typing import Any, FrozenSet

from ..blindsig import full_domain_hash, verify
from ..credentials import AttributeKeyDirectory, Presentation
from ..errors import InvalidSerial, UnknownAttribute
from ..utils.logger import get_logger
from ..utils.serialization import bytes_to_hex
from .spent import SpentSet
from .transcript import PRESENTATION, LogicalClock, Transcript
from .wire import GossipMessage, Outcome, PresentationResult, RejectReason

logger = get_logger(__name__)


@dataclass
class RelyingPartyNode:
    """Relying-party state machine.

    Attributes:
        name: Node name
        issuer: The one issuer whose keys this node trusts
        directory: Public attribute-key directory
        attributes: Attributes this node serves; also its gossip domain
        spent: Local grow-only spent-set
    """

    name: str
    issuer: str
    directory: AttributeKeyDirectory
    attributes: FrozenSet[str]
    spent: SpentSet = field(default_factory=SpentSet, repr=False)
    clock: LogicalClock = field(default_factory=LogicalClock, repr=False)
    transcript: Transcript = field(init=False, repr=False)
    _lock: Any = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        self.attributes = frozenset(self.attributes)
        self.transcript = Transcript(self.name, self.clock)

    def gossip_message(self) -> GossipMessage:
        return GossipMessage(
            sender=self.name,
            attributes=self.attributes,
            serials=self.spent.snapshot(),
        )

    def handle_presentation(self, pres: Presentation) -> PresentationResult:
        return handle_presentation(self, pres)


def _check(rp: RelyingPartyNode, pres: Presentation) -> PresentationResult:
    if pres.attribute_id not in rp.attributes:
        return PresentationResult(Outcome.REJECT, RejectReason.UNKNOWN_ATTRIBUTE)
    try:
        pub = rp.directory.lookup(rp.issuer, pres.attribute_id)
    except UnknownAttribute:
        return PresentationResult(Outcome.REJECT, RejectReason.UNKNOWN_ATTRIBUTE)

    try:
        msg = full_domain_hash(pres.serial, pub)
    except InvalidSerial:
        return PresentationResult(Outcome.REJECT, RejectReason.BAD_SIGNATURE)
    if not verify(msg, pres.signature, pub):
        return PresentationResult(Outcome.REJECT, RejectReason.BAD_SIGNATURE)
    if not rp.spent.add_if_absent(pres.serial):
        return PresentationResult(Outcome.REJECT, RejectReason.DOUBLE_SPEND)
    return PresentationResult(Outcome.ACCEPT)


def handle_presentation(rp: RelyingPartyNode, pres: Presentation) -> PresentationResult:
    """Accept a presentation iff its key is known, it verifies and its serial is new.

    Rejections report the first failing check, in the order unknown
    attribute, bad signature, double spend. The spent-set check-and-insert
    is atomic, so a serial yields at most one accept per node.
    """
    with rp._lock:
        result = _check(rp, pres)
        outcome = result.outcome.value if result.accepted else result.reason.value
        rp.transcript.append(
            PRESENTATION,
            {
                "attribute_id": pres.attribute_id,
                "serial": bytes_to_hex(pres.serial),
                "outcome": outcome,
            },
        )
    if result.reason is RejectReason.DOUBLE_SPEND:
        logger.warning("%s rejected a double spend of %s", rp.name, pres.attribute_id)
    return result
