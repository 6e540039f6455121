"""Transit-discount scenario.

A tax office attests "taxpayer in region X" with an attribute-scoped key;
citizens obtain single-use credentials and spend them at transit relying
parties, which gossip their spent-sets. Cheaters replay a consumed
presentation, forgers present a signature that does not verify.

The scheduler owns every node and draws all randomness from one seeded
`random.Random`, so a run is a pure function of its config.
"""

import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from tqdm import tqdm

from ..blindsig import BlindKeyPair, full_domain_hash, generate_keypair
from ..credentials import (AttributeKeyDirectory, Presentation, Wallet,
                           create_issue_request, finalize_credential,
                           generate_serial, keyring_to_records,
                           take_for_presentation)
from ..errors import InvalidConfig
from ..services.issuer import CitizenSession, IssuerNode
from ..services.relying_party import RelyingPartyNode
from ..services.spent import gossip_round
from ..services.transcript import LogicalClock, TranscriptEvent, save_transcript
from ..services.wire import RejectReason, transmit
from ..utils.config import ScenarioConfig
from ..utils.file_utils import ensure_directory
from ..utils.logger import get_logger
from ..utils.serialization import save_json

logger = get_logger(__name__)

ISSUE = "issue"
PRESENT = "present"
REPLAY = "replay"
FORGE = "forge"

REPORT_FILE = "report.json"
DIRECTORY_FILE = "directory.json"
KEYRING_FILE = "keyring.json"


@dataclass
class _Citizen:
    name: str
    session: CitizenSession
    wallet: Wallet
    queue: List[str]
    issued_at: Dict[bytes, int] = field(default_factory=dict)
    first_spend: Optional[Presentation] = None
    first_node: Optional[RelyingPartyNode] = None


@dataclass
class SimulationReport:
    """Outcome of one transit run.

    Attributes:
        config: The validated config that produced the run
        accepts: Accepted presentations
        double_spend_rejects: Presentations rejected as replays
        bad_signature_rejects: Presentations whose signature failed
        unknown_attribute_rejects: Presentations for attributes nobody serves
        presentations_attempted: Every presentation sent to a relying party
        issued: Granted issuance requests
        denied: Denied issuance requests, by reason
        transcripts: Events per node
        directory: Published attribute-key directory
        keyring: Private issuer keys, kept out of report.json
        ground_truth: Scenario-internal truth (links, replays, roles)
    """

    config: ScenarioConfig
    accepts: int = 0
    double_spend_rejects: int = 0
    bad_signature_rejects: int = 0
    unknown_attribute_rejects: int = 0
    presentations_attempted: int = 0
    issued: int = 0
    denied: Counter = field(default_factory=Counter)
    transcripts: Dict[str, List[TranscriptEvent]] = field(default_factory=dict, repr=False)
    directory: AttributeKeyDirectory = field(default_factory=AttributeKeyDirectory, repr=False)
    keyring: Dict[Any, BlindKeyPair] = field(default_factory=dict, repr=False)
    ground_truth: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def rejects(self) -> int:
        return self.double_spend_rejects + self.bad_signature_rejects + self.unknown_attribute_rejects

    def tally(self, reason: Optional[RejectReason]) -> None:
        self.presentations_attempted += 1
        if reason is None:
            self.accepts += 1
        elif reason is RejectReason.DOUBLE_SPEND:
            self.double_spend_rejects += 1
        elif reason is RejectReason.BAD_SIGNATURE:
            self.bad_signature_rejects += 1
        else:
            self.unknown_attribute_rejects += 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": "transit",
            "config": self.config.to_dict(),
            "accepts": self.accepts,
            "double_spend_rejects": self.double_spend_rejects,
            "bad_signature_rejects": self.bad_signature_rejects,
            "unknown_attribute_rejects": self.unknown_attribute_rejects,
            "presentations_attempted": self.presentations_attempted,
            "issued": self.issued,
            "denied": dict(sorted(self.denied.items())),
            "nodes": sorted(self.transcripts),
            "ground_truth": self.ground_truth,
        }


def _check_transit_config(config: ScenarioConfig) -> ScenarioConfig:
    config.validate()
    spends = config.citizens and (config.credentials_per_citizen or config.forgers)
    if spends and config.relying_parties < 1:
        raise InvalidConfig("Presentations need at least one relying party")
    if config.cheaters and config.replay_at == "other" and config.relying_parties < 2:
        raise InvalidConfig("replay_at='other' needs at least two relying parties")
    if config.issuer.startswith("transit-"):
        raise InvalidConfig("Issuer name collides with relying-party names")
    return config


def issue_attribute_keys(config: ScenarioConfig, rng: random.Random) -> Dict[str, BlindKeyPair]:
    """One key per attribute, with pairwise distinct moduli."""
    keys: Dict[str, BlindKeyPair] = {}
    moduli = set()
    for attribute in config.attributes:
        key = generate_keypair(config.key_bits, config.public_exponent, attribute, rng)
        while key.modulus_n in moduli:
            key = generate_keypair(config.key_bits, config.public_exponent, attribute, rng)
        moduli.add(key.modulus_n)
        keys[attribute] = key
    return keys


def _forge(citizen: _Citizen, attribute: str, directory: AttributeKeyDirectory,
           issuer: str, rng: random.Random) -> Presentation:
    """A fresh serial with a signature that is known not to verify."""
    pub = directory.lookup(issuer, attribute)
    serial = generate_serial(citizen.wallet)
    message = full_domain_hash(serial, pub)
    signature = rng.randrange(1, pub.modulus_n)
    if pow(signature, pub.public_exponent_e, pub.modulus_n) == message.m:
        signature = signature % (pub.modulus_n - 1) + 1
    return Presentation(attribute_id=attribute, serial=serial, signature=signature)


def _replay_target(citizen: _Citizen, rps: List[RelyingPartyNode], replay_at: str,
                   rng: random.Random) -> RelyingPartyNode:
    if replay_at == "same":
        return citizen.first_node
    if replay_at == "other":
        return rng.choice([rp for rp in rps if rp is not citizen.first_node])
    return rng.choice(rps)


def run_transit_scenario(config: ScenarioConfig, progress: bool = False) -> SimulationReport:
    """Run the transit-discount scenario.

    Each citizen's actions (k issuances, k presentations, then a replay for
    cheaters and a forgery for forgers) are queued and the queues are
    interleaved by the seeded rng. Every message crosses the wire codec.
    A full gossip round follows every `gossip_every`-th presentation.

    Args:
        config: Scenario configuration
        progress: Show a tqdm progress bar on stderr

    Returns:
        SimulationReport

    Raises:
        InvalidConfig: If the config is inconsistent

    Example:
        report = run_transit_scenario(ScenarioConfig(seed=1, citizens=10))
        assert report.accepts == 30
    """
    config = _check_transit_config(config)
    rng = random.Random(config.seed)
    clock = LogicalClock()
    attribute = config.attributes[0]

    keys = issue_attribute_keys(config, random.Random(rng.getrandbits(64)))
    issuer = IssuerNode(config.issuer, keys, quota=config.quota, clock=clock)
    directory = issuer.publish(AttributeKeyDirectory())

    rps = [
        RelyingPartyNode(
            name=f"transit-{i}",
            issuer=config.issuer,
            directory=directory,
            attributes=frozenset({attribute}),
            clock=clock,
        )
        for i in range(config.relying_parties)
    ]

    names = [f"citizen-{i:03d}" for i in range(config.citizens)]
    cheaters = set(rng.sample(names, config.cheaters))
    forgers = set(rng.sample(names, config.forgers))
    citizens = []
    for name in names:
        queue = [ISSUE] * config.credentials_per_citizen + [PRESENT] * config.credentials_per_citizen
        if name in cheaters:
            queue.append(REPLAY)
        if name in forgers:
            queue.append(FORGE)
        citizens.append(
            _Citizen(
                name=name,
                session=CitizenSession(name, frozenset({attribute})),
                wallet=Wallet.from_seed(rng.getrandbits(64)),
                queue=queue,
            )
        )

    report = SimulationReport(config=config, directory=directory)
    links: List[Dict[str, Any]] = []
    replays: List[Dict[str, Any]] = []

    logger.info(
        "Transit run: %d citizens, %d relying parties, seed %d",
        config.citizens, config.relying_parties, config.seed,
    )
    total = sum(len(c.queue) for c in citizens)
    active = [c for c in citizens if c.queue]

    with tqdm(total=total, desc="Transit", unit="action", disable=not progress) as pbar:
        while active:
            citizen = rng.choice(active)
            action = citizen.queue.pop(0)
            if not citizen.queue:
                active.remove(citizen)
            pbar.update(1)

            if action == ISSUE:
                request, pending = create_issue_request(
                    citizen.wallet, attribute, directory, config.issuer
                )
                response = transmit(issuer.handle_issue_request(citizen.session, transmit(request)))
                if response.granted:
                    finalize_credential(citizen.wallet, pending, response.blinded_signature)
                    citizen.issued_at[pending.serial] = clock.now
                    report.issued += 1
                else:
                    citizen.wallet.discard_pending(pending.serial)
                    report.denied[response.denial.value] += 1
                continue

            if action == PRESENT:
                if not citizen.wallet.unused(attribute):
                    continue
                presentation = take_for_presentation(citizen.wallet, attribute)
                rp = rng.choice(rps)
            elif action == REPLAY:
                if citizen.first_spend is None:
                    continue
                presentation = citizen.first_spend
                rp = _replay_target(citizen, rps, config.replay_at, rng)
            else:
                presentation = _forge(citizen, attribute, directory, config.issuer, rng)
                rp = rng.choice(rps)

            result = transmit(rp.handle_presentation(transmit(presentation)))
            report.tally(result.reason)

            if action == PRESENT:
                if citizen.first_spend is None:
                    citizen.first_spend, citizen.first_node = presentation, rp
                if result.accepted:
                    links.append(
                        {
                            "issuance_timestamp": citizen.issued_at[presentation.serial],
                            "presentation_timestamp": clock.now,
                            "node": rp.name,
                        }
                    )
            elif action == REPLAY:
                replays.append(
                    {
                        "citizen": citizen.name,
                        "original_node": citizen.first_node.name,
                        "replay_node": rp.name,
                        "outcome": result.outcome.value if result.accepted else result.reason.value,
                    }
                )

            if config.gossip_every and report.presentations_attempted % config.gossip_every == 0:
                gossip_round(rps, rng)

    report.transcripts = {node.name: node.transcript.events for node in [issuer, *rps]}
    report.keyring = {(config.issuer, a): key for a, key in keys.items()}
    report.ground_truth = {
        "attribute": attribute,
        "cheaters": sorted(cheaters),
        "forgers": sorted(forgers),
        "links": links,
        "replays": replays,
    }
    logger.info(
        "Transit run done: %d accepted, %d rejected of %d presentations",
        report.accepts, report.rejects, report.presentations_attempted,
    )
    return report


def write_transit_run(report: SimulationReport, out_dir: Union[str, Path],
                      export_keyring: bool = False) -> Path:
    """Write report.json, directory.json and one <node>.jsonl per node.

    The private keyring is only written when asked for.
    """
    out_path = ensure_directory(out_dir)
    save_json(report.to_dict(), out_path / REPORT_FILE)
    save_json(report.directory.to_records(), out_path / DIRECTORY_FILE)
    for node, events in sorted(report.transcripts.items()):
        save_transcript(events, out_path, node)
    if export_keyring:
        save_json(keyring_to_records(report.keyring), out_path / KEYRING_FILE)
    return out_path
