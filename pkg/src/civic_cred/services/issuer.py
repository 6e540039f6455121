"""Issuer node: checks eligibility at issuance, then signs blind.

The issuer knows who is asking (an authenticated citizen session) because it
must check eligibility, but it only ever sees blinded values. Its transcript
keeps {attribute_id, blinded_value} per issuance and nothing that could be
matched against a later presentation.
"""

import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Tuple

from ..blindsig import BlindKeyPair, sign_blinded
from ..credentials import AttributeKeyDirectory, IssueRequest
from ..utils.logger import get_logger
from ..utils.serialization import int_to_hex
from .transcript import DENIAL, ISSUANCE, LogicalClock, Transcript
from .wire import Denial, IssueResponse

logger = get_logger(__name__)

DEFAULT_QUOTA = 3
DEFAULT_PERIOD_TICKS = 1_000_000


@dataclass(frozen=True)
class CitizenSession:
    """An authenticated session at the issuer (identity at issuance)."""

    session_id: str
    attributes: FrozenSet[str] = frozenset()


def holds_attribute(session: CitizenSession, attribute: str) -> bool:
    """Default eligibility: the issuer's records grant the attribute."""
    return attribute in session.attributes


@dataclass
class IssuerNode:
    """Issuer state machine.

    Attributes:
        name: Issuer name, as published in the directory
        keys: One signing key per attribute
        eligibility: Predicate over (session, attribute)
        quota: Credentials per (session, attribute, period)
        period_ticks: Length of a quota period in clock ticks
    """

    name: str
    keys: Dict[str, BlindKeyPair]
    eligibility: Callable[[CitizenSession, str], bool] = holds_attribute
    quota: int = DEFAULT_QUOTA
    period_ticks: int = DEFAULT_PERIOD_TICKS
    clock: LogicalClock = field(default_factory=LogicalClock, repr=False)
    quotas: Counter = field(default_factory=Counter, repr=False)
    transcript: Transcript = field(init=False, repr=False)
    _lock: Any = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        self.transcript = Transcript(self.name, self.clock)

    def publish(self, directory: AttributeKeyDirectory) -> AttributeKeyDirectory:
        """Publish the public half of every attribute key."""
        for attribute, key in sorted(self.keys.items()):
            directory.publish(self.name, attribute, key.public_key())
        return directory

    def period(self) -> int:
        return max(self.clock.now, 0) // self.period_ticks

    def handle_issue_request(self, session: CitizenSession, req: IssueRequest) -> IssueResponse:
        return handle_issue_request(self, session, req)


def _deny(issuer: IssuerNode, req: IssueRequest, reason: Denial) -> IssueResponse:
    issuer.transcript.append(DENIAL, {"attribute_id": req.attribute_id, "reason": reason.value})
    logger.info("%s denied %s: %s", issuer.name, req.attribute_id, reason.value)
    return IssueResponse(req.attribute_id, denial=reason)


def handle_issue_request(
    issuer: IssuerNode, session: CitizenSession, req: IssueRequest
) -> IssueResponse:
    """Sign a blinded value if the session is eligible and under quota.

    Denials come back as values, checked in order: unknown attribute,
    malformed request, not eligible, quota exceeded.
    """
    with issuer._lock:
        key = issuer.keys.get(req.attribute_id)
        if key is None:
            return _deny(issuer, req, Denial.UNKNOWN_ATTRIBUTE)
        if not 0 < req.blinded_value < key.modulus_n:
            return _deny(issuer, req, Denial.MALFORMED_REQUEST)
        if not issuer.eligibility(session, req.attribute_id):
            return _deny(issuer, req, Denial.NOT_ELIGIBLE)

        quota_key: Tuple[str, str, int] = (session.session_id, req.attribute_id, issuer.period())
        if issuer.quotas[quota_key] >= issuer.quota:
            return _deny(issuer, req, Denial.QUOTA_EXCEEDED)

        blinded_signature = sign_blinded(req.blinded_value, key)
        issuer.quotas[quota_key] += 1
        issuer.transcript.append(
            ISSUANCE,
            {
                "attribute_id": req.attribute_id,
                "blinded_value": int_to_hex(req.blinded_value),
            },
        )
        return IssueResponse(req.attribute_id, blinded_signature=blinded_signature)
