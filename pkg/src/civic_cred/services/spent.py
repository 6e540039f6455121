"""Grow-only spent-sets and pairwise gossip between relying parties.

There is no central registry of spent serials. Each relying party keeps its
own grow-only set and merges with peers by set union, so state converges
eventually; a serial replayed at a peer before gossip reaches it can still
be accepted there once (the race window the auditor reports).
"""

import itertools
import random
import threading
from typing import TYPE_CHECKING, FrozenSet, Iterable, Iterator, Optional, Sequence, Tuple

from ..errors import GossipDomainMismatch
from ..utils.logger import get_logger
from .transcript import GOSSIP
from .wire import GossipMessage, transmit

if TYPE_CHECKING:
    from .relying_party import RelyingPartyNode

logger = get_logger(__name__)


class SpentSet:
    """Grow-only set of consumed 32-byte serials.

    No removal operation exists; merge is set union and check-and-insert
    is atomic.
    """

    def __init__(self, serials: Iterable[bytes] = ()):
        self._serials = set(serials)
        self._lock = threading.Lock()

    def __contains__(self, serial: bytes) -> bool:
        with self._lock:
            return serial in self._serials

    def __len__(self) -> int:
        with self._lock:
            return len(self._serials)

    def __iter__(self) -> Iterator[bytes]:
        return iter(self.snapshot())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpentSet):
            return NotImplemented
        return self.snapshot() == other.snapshot()

    def __repr__(self) -> str:
        return f"SpentSet({len(self)} serials)"

    def snapshot(self) -> FrozenSet[bytes]:
        with self._lock:
            return frozenset(self._serials)

    def add_if_absent(self, serial: bytes) -> bool:
        """Insert a serial; True iff it was new. Atomic."""
        with self._lock:
            if serial in self._serials:
                return False
            self._serials.add(serial)
            return True

    def merge(self, serials: Iterable[bytes]) -> int:
        """Union in serials; returns how many were new."""
        incoming = set(serials)
        with self._lock:
            new = incoming - self._serials
            self._serials |= new
            return len(new)


def _absorb(receiver: "RelyingPartyNode", message: GossipMessage) -> int:
    if message.attributes != receiver.attributes:
        raise GossipDomainMismatch(
            f"{receiver.name} serves {sorted(receiver.attributes)}, "
            f"{message.sender} serves {sorted(message.attributes)}"
        )
    learned = receiver.spent.merge(message.serials)
    if learned:
        receiver.transcript.append(GOSSIP, {"peer": message.sender, "learned": learned})
    return learned


def gossip_spent(
    rp_a: "RelyingPartyNode", rp_b: "RelyingPartyNode"
) -> Tuple["RelyingPartyNode", "RelyingPartyNode"]:
    """Exchange spent-sets both ways; afterwards both hold the union.

    Commutative, associative and idempotent. Nodes serving different
    attributes never gossip: a shared spent-set across services would be a
    linkage channel.

    Raises:
        GossipDomainMismatch: If the nodes serve different attribute sets
    """
    if rp_a.attributes != rp_b.attributes:
        raise GossipDomainMismatch(
            f"{rp_a.name} and {rp_b.name} serve different attributes"
        )
    from_a = transmit(rp_a.gossip_message())
    from_b = transmit(rp_b.gossip_message())
    learned_b = _absorb(rp_b, from_a)
    learned_a = _absorb(rp_a, from_b)
    logger.debug(
        "Gossip %s <-> %s: learned %d / %d", rp_a.name, rp_b.name, learned_a, learned_b
    )
    return rp_a, rp_b


def gossip_round(
    nodes: Sequence["RelyingPartyNode"], rng: Optional[random.Random] = None
) -> None:
    """Gossip every unordered pair exactly once.

    With an rng the pair order is shuffled. In any order, each node ends the
    round holding the union of all spent-sets, since every pair meets once
    and sets only grow.
    """
    pairs = list(itertools.combinations(nodes, 2))
    if rng is not None:
        rng.shuffle(pairs)
    for rp_a, rp_b in pairs:
        gossip_spent(rp_a, rp_b)
