"""Decentralized contact tracing with rotating ephemeral identifiers.

Each agent keeps a 32-byte seed on its device and broadcasts one token per
epoch derived from it. Agents store the tokens they hear as a time-sorted
list and never upload it. Infected agents publish their seed to a bulletin
board; everybody else recomputes the published tokens locally and
intersects them with what they heard.

Publishing seeds is the compact variant: anyone can link all tokens of a
published seed to each other, which is weaker than publishing individual
tokens but only concerns agents who chose to report an infection.
"""

import bisect
import hashlib
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import (Any, Dict, Iterable, List, Optional, Sequence, Set,
                    Tuple, Union)

from tqdm import tqdm

from ..errors import InvalidConfig, InvalidEpoch, UnsortedInput
from ..services.transcript import PUBLICATION, LogicalClock, Transcript, save_transcript
from ..utils.config import ScenarioConfig
from ..utils.file_utils import ensure_directory
from ..utils.logger import get_logger
from ..utils.serialization import bytes_to_hex, save_json

logger = get_logger(__name__)

AGENT_SEED_BYTES = 32
TOKEN_BYTES = 16
BULLETIN_BOARD = "bulletin_board"
EXPOSURE_REPORT_FILE = "exposure_report.json"


@dataclass(frozen=True, order=True)
class EphemeralToken:
    epoch: int
    token: bytes


@dataclass(frozen=True)
class ProximityEvent:
    """Two agents were close during one epoch. Symmetric."""

    epoch: int
    agent_a: str
    agent_b: str

    def __post_init__(self):
        if self.agent_a == self.agent_b:
            raise ValueError("A proximity event needs two distinct agents")
        if self.epoch < 0:
            raise InvalidEpoch(f"Negative epoch: {self.epoch}")


def rotate_ephemeral_id(agent_seed: bytes, epoch: int) -> EphemeralToken:
    """First 16 bytes of SHA-256(seed || epoch as 8-byte big-endian).

    Raises:
        InvalidEpoch: If epoch is negative
    """
    if not isinstance(epoch, int) or epoch < 0:
        raise InvalidEpoch(f"Epoch must be a non-negative integer, got {epoch!r}")
    digest = hashlib.sha256(bytes(agent_seed) + epoch.to_bytes(8, "big")).digest()
    return EphemeralToken(epoch=epoch, token=digest[:TOKEN_BYTES])


@dataclass
class Agent:
    """A device: its seed and the time-sorted list of tokens it heard."""

    name: str
    seed: bytes = field(repr=False)
    heard: List[EphemeralToken] = field(default_factory=list, repr=False)

    def broadcast(self, epoch: int) -> EphemeralToken:
        return rotate_ephemeral_id(self.seed, epoch)

    def hear(self, token: EphemeralToken) -> None:
        bisect.insort(self.heard, token)


class BulletinBoard:
    """Public board of published seeds. It stores nothing else."""

    def __init__(self, clock: Optional[LogicalClock] = None):
        self._seeds: List[bytes] = []
        self.transcript = Transcript(BULLETIN_BOARD, clock or LogicalClock())

    def publish(self, seed: bytes) -> None:
        self._seeds.append(bytes(seed))
        self.transcript.append(PUBLICATION, {"seed": bytes_to_hex(seed)})

    @property
    def seeds(self) -> List[bytes]:
        return list(self._seeds)

    def state(self) -> Dict[str, List[str]]:
        return {"seeds": [bytes_to_hex(seed) for seed in self._seeds]}


def match_exposures(
    heard: Sequence[EphemeralToken], published_seeds: Iterable[bytes], window: Iterable[int]
) -> Set[int]:
    """Epochs at which a heard token matches one recomputed from a published seed.

    Args:
        heard: Tokens sorted by epoch
        published_seeds: Seeds from the bulletin board
        window: Epochs to recompute

    Returns:
        Set of matched epochs

    Raises:
        UnsortedInput: If heard is not sorted by epoch
    """
    for earlier, later in zip(heard, heard[1:]):
        if earlier.epoch > later.epoch:
            raise UnsortedInput("Heard tokens must be sorted by epoch")
    epochs = list(window)
    recomputed = {
        (token.epoch, token.token)
        for seed in published_seeds
        for token in (rotate_ephemeral_id(seed, epoch) for epoch in epochs)
    }
    return {token.epoch for token in heard if (token.epoch, token.token) in recomputed}


def infectious_window(config: ScenarioConfig) -> range:
    """The last `infectious_window` epochs before publication at the last epoch."""
    return range(max(0, config.epochs - config.infectious_window), config.epochs)


def ground_truth_exposed(
    events: Iterable[ProximityEvent], infected: Iterable[str], window: Iterable[int]
) -> Set[str]:
    """Brute force from the event log: contacts of infected agents inside the window."""
    sick = set(infected)
    epochs = set(window)
    exposed = set()
    for event in events:
        if event.epoch not in epochs:
            continue
        if event.agent_a in sick:
            exposed.add(event.agent_b)
        if event.agent_b in sick:
            exposed.add(event.agent_a)
    return exposed


@dataclass
class ExposureReport:
    config: ScenarioConfig
    window: range
    infected: List[str]
    exposed: List[str]
    exposure_epochs: Dict[str, List[int]]
    contacts: int
    board: BulletinBoard = field(repr=False)
    ground_truth: List[str] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": "tracing",
            "config": self.config.to_dict(),
            "window": [self.window.start, self.window.stop],
            "infected": self.infected,
            "exposed": self.exposed,
            "exposure_epochs": self.exposure_epochs,
            "proximity_events": self.contacts,
            "bulletin_board": self.board.state(),
            "ground_truth_exposed": self.ground_truth,
        }


def sample_proximity_events(
    config: ScenarioConfig, names: Sequence[str], rng: random.Random
) -> List[ProximityEvent]:
    if config.proximity_events and (len(names) < 2 or config.epochs < 1):
        raise InvalidConfig("Proximity events need two agents and one epoch")
    events = []
    for _ in range(config.proximity_events):
        a, b = rng.sample(range(len(names)), 2)
        events.append(ProximityEvent(rng.randrange(config.epochs), names[a], names[b]))
    return events


def run_contact_tracing_scenario(
    config: ScenarioConfig,
    events: Optional[Sequence[ProximityEvent]] = None,
    infected: Optional[Iterable[str]] = None,
    progress: bool = False,
) -> ExposureReport:
    """Run the decentralized contact-tracing scenario.

    `events` and `infected` override the seeded draws (agents are named
    agent-000, agent-001, ...).

    Raises:
        InvalidConfig: If the config or overrides are inconsistent
    """
    config.validate()
    rng = random.Random(config.seed)
    names = [f"agent-{i:03d}" for i in range(config.citizens)]
    agents = {name: Agent(name, rng.randbytes(AGENT_SEED_BYTES)) for name in names}

    if events is None:
        events = sample_proximity_events(config, names, rng)
    if infected is None:
        if config.infected > len(names):
            raise InvalidConfig("More infected agents than agents")
        infected = rng.sample(names, config.infected)
    infected = sorted(set(infected))

    for name in infected:
        if name not in agents:
            raise InvalidConfig(f"Unknown infected agent: {name}")
    ordered: List[Tuple[int, str, str]] = sorted(
        (event.epoch, event.agent_a, event.agent_b) for event in events
    )
    for epoch, a, b in ordered:
        if a not in agents or b not in agents:
            raise InvalidConfig(f"Proximity event with unknown agent: {a}, {b}")
        if epoch >= config.epochs:
            raise InvalidConfig(f"Proximity event at epoch {epoch} beyond the timeline")

    logger.info(
        "Tracing run: %d agents, %d events, %d infected", len(agents), len(ordered), len(infected)
    )
    for epoch, a, b in tqdm(ordered, desc="Contacts", unit="event", disable=not progress):
        agents[a].hear(agents[b].broadcast(epoch))
        agents[b].hear(agents[a].broadcast(epoch))

    board = BulletinBoard()
    for name in infected:
        board.publish(agents[name].seed)

    window = infectious_window(config)
    published = board.seeds
    exposure_epochs: Dict[str, List[int]] = {}
    for name, agent in agents.items():
        others = [seed for seed in published if seed != agent.seed]
        matched = match_exposures(agent.heard, others, window)
        if matched:
            exposure_epochs[name] = sorted(matched)

    truth = ground_truth_exposed(
        (ProximityEvent(epoch, a, b) for epoch, a, b in ordered), infected, window
    )
    report = ExposureReport(
        config=config,
        window=window,
        infected=infected,
        exposed=sorted(exposure_epochs),
        exposure_epochs=exposure_epochs,
        contacts=len(ordered),
        board=board,
        ground_truth=sorted(truth),
    )
    logger.info("Tracing run done: %d exposed agents", len(report.exposed))
    return report


def write_tracing_run(report: ExposureReport, out_dir: Union[str, Path]) -> Path:
    """Write exposure_report.json and bulletin_board.jsonl."""
    out_path = ensure_directory(out_dir)
    save_json(report.to_dict(), out_path / EXPOSURE_REPORT_FILE)
    save_transcript(report.board.transcript.events, out_path, BULLETIN_BOARD)
    return out_path
