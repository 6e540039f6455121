"""Append-only protocol transcripts and the logical clock that orders them.

Every node of a run shares one `LogicalClock`, so (timestamp, node, seq) is a
total order over all events. Transcripts are what an honest-but-curious
observer gets to keep; the auditor scans them for linkage and for fields
beyond the per-kind schema.
"""

import itertools
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import (Any, Dict, FrozenSet, Iterator, List, Mapping, Optional,
                    Union)

from ..utils.file_utils import ensure_directory
from ..utils.serialization import iter_jsonl, save_jsonl

# Allowed payload fields per event kind.
ISSUANCE = "issuance"
DENIAL = "denial"
PRESENTATION = "presentation"
GOSSIP = "gossip"
PUBLICATION = "publication"

DEFAULT_SCHEMAS: Dict[str, FrozenSet[str]] = {
    ISSUANCE: frozenset({"attribute_id", "blinded_value"}),
    DENIAL: frozenset({"attribute_id", "reason"}),
    PRESENTATION: frozenset({"attribute_id", "serial", "outcome"}),
    GOSSIP: frozenset({"peer", "learned"}),
    PUBLICATION: frozenset({"seed"}),
}

# Top-level keys of a transcript record; anything else is kept in `extra`.
RECORD_FIELDS = frozenset({"timestamp", "node", "kind", "payload", "seq"})


class LogicalClock:
    """Thread-safe integer tick source shared by the nodes of one run."""

    def __init__(self, start: int = 0):
        self._counter = itertools.count(start)
        self._lock = threading.Lock()
        self.now = start - 1

    def tick(self) -> int:
        with self._lock:
            self.now = next(self._counter)
            return self.now


@dataclass(frozen=True)
class TranscriptEvent:
    """One protocol log entry.

    Attributes:
        timestamp: Logical tick
        node: Name of the node that logged it
        kind: Event kind, see DEFAULT_SCHEMAS
        payload: Kind-specific fields (already JSON-ready)
        seq: Per-node sequence number
        extra: Record keys outside RECORD_FIELDS found when loading
    """

    timestamp: int
    node: str
    kind: str
    payload: Mapping[str, Any]
    seq: int = 0
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def sort_key(self):
        return (self.timestamp, self.node, self.seq)

    def to_record(self) -> Dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "node": self.node,
            "kind": self.kind,
            **self.extra,
            "payload": dict(self.payload),
            "seq": self.seq,
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "TranscriptEvent":
        return cls(
            timestamp=int(record["timestamp"]),
            node=str(record["node"]),
            kind=str(record["kind"]),
            payload=dict(record.get("payload") or {}),
            seq=int(record.get("seq", 0)),
            extra={key: value for key, value in record.items() if key not in RECORD_FIELDS},
        )


@dataclass
class Transcript:
    """Append-only event list for one node."""

    node: str
    clock: LogicalClock = field(default_factory=LogicalClock, repr=False)
    _events: List[TranscriptEvent] = field(default_factory=list, repr=False)
    _lock: Any = field(default_factory=threading.Lock, repr=False, compare=False)

    def append(self, kind: str, payload: Mapping[str, Any], timestamp: Optional[int] = None) -> TranscriptEvent:
        with self._lock:
            event = TranscriptEvent(
                timestamp=self.clock.tick() if timestamp is None else timestamp,
                node=self.node,
                kind=kind,
                payload=dict(payload),
                seq=len(self._events),
            )
            self._events.append(event)
            return event

    @property
    def events(self) -> List[TranscriptEvent]:
        """A copy: callers can read but never rewrite history."""
        with self._lock:
            return list(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[TranscriptEvent]:
        return iter(self.events)


def transcript_path(out_dir: Union[str, Path], node: str) -> Path:
    return Path(out_dir) / f"{node}.jsonl"


def save_transcript(events: List[TranscriptEvent], out_dir: Union[str, Path], node: str) -> Path:
    """Write one node's events as JSONL (file-per-node)."""
    ensure_directory(out_dir)
    return save_jsonl((event.to_record() for event in events), transcript_path(out_dir, node))


def load_transcript(path: Union[str, Path]) -> List[TranscriptEvent]:
    events = [TranscriptEvent.from_record(record) for record in iter_jsonl(path)]
    return sorted(events, key=TranscriptEvent.sort_key)
