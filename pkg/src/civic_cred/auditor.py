"""Adversarial analysis over protocol transcripts.

The auditor takes the strongest honest-but-curious position: it holds every
transcript of every node. It tries to link issuance events (blinded values)
to accepted presentations (hashed serials) and reports how far it got, scans
payloads for fields beyond their schema, checks that attribute keys are
separate, recounts double spends and measures how much of the presentation
traffic each operator observed.
"""

import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import (Any, Dict, Iterable, List, Mapping, Optional, Sequence,
                    Tuple, Union)

from sympy import factorint, mod_inverse
from tqdm import tqdm

from .blindsig import BlindKeyPair, PublicKey, full_domain_hash, verify
from .credentials import AttributeKeyDirectory, DirectoryKey
from .errors import InsufficientAttributes, ModulusTooLargeForExhaustive
from .services.transcript import (DEFAULT_SCHEMAS, DENIAL, GOSSIP, ISSUANCE,
                                  PRESENTATION, TranscriptEvent,
                                  load_transcript)
from .utils.file_utils import list_files_with_extension
from .utils.logger import get_logger
from .utils.serialization import hex_to_bytes, hex_to_int, load_json

logger = get_logger(__name__)

EXHAUSTIVE = "exhaustive"
ALGEBRAIC = "algebraic"
MODES = (EXHAUSTIVE, ALGEBRAIC)
EXHAUSTIVE_LIMIT = 2**20
LARGE_MODULUS_BITS = 64
CHANCE_RATE = 0.05

EXTRA_FIELD = "ExtraField"
UNKNOWN_KIND = "UnknownKind"

Transcripts = Union[Mapping[str, Sequence[TranscriptEvent]], Iterable[Sequence[TranscriptEvent]]]


def _event_lists(transcripts: Transcripts) -> List[Sequence[TranscriptEvent]]:
    if isinstance(transcripts, Mapping):
        return [transcripts[node] for node in sorted(transcripts)]
    return list(transcripts)


def _all_events(transcripts: Transcripts) -> List[TranscriptEvent]:
    events = [event for events in _event_lists(transcripts) for event in events]
    return sorted(events, key=TranscriptEvent.sort_key)


# ---------------------------------------------------------------------------
# Consistency matrix
# ---------------------------------------------------------------------------


@dataclass
class ConsistencyMatrix:
    """Which issuances could have produced which accepted presentations.

    Cell (i, j) holds the number of units r with b_i = m_j * r^e mod n; a
    cell is consistent iff that count is positive. Defined for one
    attribute key only.

    Attributes:
        pub: The attribute key both sides were produced under
        mode: exhaustive or algebraic
        rows: Blinded values of issuance events
        row_times: Issuance timestamps
        cols: Hashed messages of accepted presentations
        col_times: Presentation timestamps
        witnesses: rows x cols witness counts
    """

    pub: PublicKey
    mode: str
    rows: List[int] = field(default_factory=list)
    row_times: List[int] = field(default_factory=list)
    cols: List[int] = field(default_factory=list)
    col_times: List[int] = field(default_factory=list)
    witnesses: List[List[int]] = field(default_factory=list)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.rows), len(self.cols)

    @property
    def cells(self) -> List[List[bool]]:
        return [[count > 0 for count in row] for row in self.witnesses]

    def column(self, j: int) -> List[int]:
        return [row[j] for row in self.witnesses]


def power_residue_table(pub: PublicKey) -> Counter:
    """Count of units r with r^e = c, for every c (exhaustive mode).

    Raises:
        ModulusTooLargeForExhaustive: If n > 2^20
    """
    n, e = pub.modulus_n, pub.public_exponent_e
    if n > EXHAUSTIVE_LIMIT:
        raise ModulusTooLargeForExhaustive(f"Modulus {n} is too large to enumerate")
    return Counter(pow(r, e, n) for r in range(1, n) if math.gcd(r, n) == 1)


def _prime_power_roots(c: int, e: int, p: int, k: int) -> int:
    """Number of solutions of r^e = c modulo p^k, c a unit."""
    modulus = p**k
    c %= modulus
    if p == 2:
        return sum(1 for r in range(1, modulus, 2) if pow(r, e, modulus) == c)
    phi = p ** (k - 1) * (p - 1)
    g = math.gcd(e, phi)
    return g if pow(c, phi // g, modulus) == 1 else 0


def algebraic_witnesses(c: int, e: int, factors: Mapping[int, int], n: int) -> int:
    """Witness count for r^e = c mod n from the factorization of n (CRT)."""
    if math.gcd(c, n) != 1:
        return 0
    count = 1
    for p, k in factors.items():
        count *= _prime_power_roots(c, e, p, k)
        if not count:
            return 0
    return count


# Per-process state for Pool workers.
_WORKER: Dict[str, Any] = {}


def _init_worker(pub: PublicKey, mode: str, rows: List[int], table: Optional[Counter],
                 factors: Optional[Dict[int, int]]) -> None:
    _WORKER.update(pub=pub, mode=mode, rows=rows, table=table, factors=factors)


def _column_witnesses(m: int) -> List[int]:
    pub: PublicKey = _WORKER["pub"]
    n, e = pub.modulus_n, pub.public_exponent_e
    m_inverse = int(mod_inverse(m, n))
    column = []
    for b in _WORKER["rows"]:
        if math.gcd(b, n) != 1:
            column.append(0)
            continue
        c = b * m_inverse % n
        if _WORKER["mode"] == EXHAUSTIVE:
            column.append(_WORKER["table"][c])
        else:
            column.append(algebraic_witnesses(c, e, _WORKER["factors"], n))
    return column


def consistency_matrix(
    issuer_transcript: Sequence[TranscriptEvent],
    rp_transcripts: Transcripts,
    pub: PublicKey,
    mode: str = EXHAUSTIVE,
    workers: int = 1,
    progress: bool = False,
) -> ConsistencyMatrix:
    """Try every issuance against every accepted presentation under one key.

    Exhaustive mode enumerates all units r; algebraic mode decides
    solvability of r^e = b * m^-1 from the factorization of n. With
    gcd(e, lambda(n)) = 1 every cell is consistent, and both modes agree.

    Args:
        issuer_transcript: Issuer events (issuance rows)
        rp_transcripts: Relying-party events (accepted presentation columns)
        pub: Attribute key to restrict to
        mode: "exhaustive" or "algebraic"
        workers: Pool size for column computation (1 runs inline)
        progress: Show a tqdm progress bar on stderr

    Raises:
        ModulusTooLargeForExhaustive: In exhaustive mode when n > 2^20
    """
    if mode not in MODES:
        raise ValueError(f"Unknown mode: {mode}")
    attribute = pub.attribute_id
    matrix = ConsistencyMatrix(pub=pub, mode=mode)

    for event in sorted(issuer_transcript, key=TranscriptEvent.sort_key):
        if event.kind == ISSUANCE and event.payload.get("attribute_id") == attribute:
            matrix.rows.append(hex_to_int(event.payload["blinded_value"]))
            matrix.row_times.append(event.timestamp)

    for event in _all_events(rp_transcripts):
        payload = event.payload
        if (
            event.kind == PRESENTATION
            and payload.get("attribute_id") == attribute
            and payload.get("outcome") == "accept"
        ):
            serial = hex_to_bytes(payload["serial"])
            matrix.cols.append(full_domain_hash(serial, pub).m)
            matrix.col_times.append(event.timestamp)

    table = power_residue_table(pub) if mode == EXHAUSTIVE else None
    factors = None if mode == EXHAUSTIVE else {int(p): int(k) for p, k in factorint(pub.modulus_n).items()}
    init_args = (pub, mode, matrix.rows, table, factors)

    if workers > 1 and len(matrix.cols) > 1:
        with Pool(processes=workers, initializer=_init_worker, initargs=init_args) as pool:
            columns = list(
                tqdm(
                    pool.imap(_column_witnesses, matrix.cols),
                    total=len(matrix.cols),
                    desc="Columns",
                    disable=not progress,
                )
            )
    else:
        _init_worker(*init_args)
        columns = [
            _column_witnesses(m)
            for m in tqdm(matrix.cols, desc="Columns", disable=not progress)
        ]

    matrix.witnesses = [[column[i] for column in columns] for i in range(len(matrix.rows))]
    return matrix


def anonymity_set_sizes(matrix: ConsistencyMatrix) -> List[int]:
    """Number of consistent issuances per presentation (column sums)."""
    return [sum(1 for count in matrix.column(j) if count > 0) for j in range(len(matrix.cols))]


def timing_unique_candidates(matrix: ConsistencyMatrix) -> int:
    """Presentations with exactly one consistent issuance earlier in time.

    This is the timing side channel: it is reported, not covered by the
    anonymity-set guarantee, which is about message contents only.
    """
    unique = 0
    for j, when in enumerate(matrix.col_times):
        earlier = [
            i for i, count in enumerate(matrix.column(j))
            if count > 0 and matrix.row_times[i] < when
        ]
        if len(earlier) == 1:
            unique += 1
    return unique


# ---------------------------------------------------------------------------
# Data minimization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeakFinding:
    node: str
    timestamp: int
    kind: str
    finding: str
    field_name: Optional[str] = None


def metadata_leak_scan(
    transcripts: Transcripts, allowed_schemas: Mapping[str, Iterable[str]] = DEFAULT_SCHEMAS
) -> List[LeakFinding]:
    """One finding per payload field outside its kind's schema.

    Record keys next to the payload are extra fields too, whatever the kind.
    Events of a kind with no schema yield a single UnknownKind finding.
    """
    schemas = {kind: frozenset(names) for kind, names in allowed_schemas.items()}
    findings = []
    for event in _all_events(transcripts):
        for name in sorted(event.extra):
            findings.append(LeakFinding(event.node, event.timestamp, event.kind, EXTRA_FIELD, name))
        allowed = schemas.get(event.kind)
        if allowed is None:
            findings.append(LeakFinding(event.node, event.timestamp, event.kind, UNKNOWN_KIND))
            continue
        for name in sorted(set(event.payload) - allowed):
            findings.append(LeakFinding(event.node, event.timestamp, event.kind, EXTRA_FIELD, name))
    for finding in findings:
        logger.warning(
            "Leak: %s at %s/%d field %s", finding.finding, finding.node, finding.timestamp, finding.field_name
        )
    return findings


# ---------------------------------------------------------------------------
# Key separation
# ---------------------------------------------------------------------------


@dataclass
class KeySeparationResult:
    """Structural and statistical key-separation outcome.

    Attributes:
        shared_moduli: Pairs of directory entries that share a modulus
        trials: One row per ordered (signer, verifier) pair
    """

    shared_moduli: List[Tuple[str, str]] = field(default_factory=list)
    trials: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def structural_pass(self) -> bool:
        return not self.shared_moduli

    @property
    def statistical_pass(self) -> bool:
        return all(row["passed"] for row in self.trials)

    @property
    def passed(self) -> bool:
        return self.structural_pass and self.statistical_pass

    def to_dict(self) -> Dict[str, Any]:
        return {
            "structural_pass": self.structural_pass,
            "statistical_pass": self.statistical_pass,
            "shared_moduli": [list(pair) for pair in self.shared_moduli],
            "trials": self.trials,
        }


def _label(key: DirectoryKey) -> str:
    return f"{key[0]}/{key[1]}"


def key_separation_check(
    directory: AttributeKeyDirectory,
    trials: int = 1000,
    rng: Optional[random.Random] = None,
    signers: Optional[Mapping[DirectoryKey, BlindKeyPair]] = None,
) -> KeySeparationResult:
    """Check that attestations under one key say nothing under another.

    Structurally, any two entries sharing a modulus fail. Statistically,
    for every ordered pair (A, B) with a signer for A, signatures on random
    serials under A are checked against B; the cross-verification rate must
    stay below 5%, and be exactly 0 once B's modulus has 64 bits or more.
    Without signers only the structural part runs.

    Raises:
        InsufficientAttributes: With fewer than two directory entries
    """
    entries = sorted(directory.entries.items())
    if len(entries) < 2:
        raise InsufficientAttributes("Key separation needs at least two attribute keys")
    rng = rng or random.Random(0)
    result = KeySeparationResult()

    for i, (key_a, pub_a) in enumerate(entries):
        for key_b, pub_b in entries[i + 1:]:
            if pub_a.modulus_n == pub_b.modulus_n:
                result.shared_moduli.append((_label(key_a), _label(key_b)))

    for key_a, _ in entries:
        signer = (signers or {}).get(key_a)
        if signer is None:
            continue
        for key_b, pub_b in entries:
            if key_b == key_a:
                continue
            passes = 0
            for _ in range(trials):
                message = full_domain_hash(rng.randbytes(32), signer.public_key())
                signature = pow(message.m, signer.private_exponent_d, signer.modulus_n)
                recomputed = full_domain_hash(message.source_serial, pub_b)
                if verify(recomputed, signature, pub_b):
                    passes += 1
            rate = passes / trials if trials else 0.0
            large = pub_b.modulus_n.bit_length() >= LARGE_MODULUS_BITS
            result.trials.append(
                {
                    "signer": _label(key_a),
                    "verifier": _label(key_b),
                    "trials": trials,
                    "cross_verified": passes,
                    "rate": rate,
                    "passed": passes == 0 if large else rate < CHANCE_RATE,
                }
            )

    if result.shared_moduli:
        logger.warning("Attribute keys share a modulus: %s", result.shared_moduli)
    return result


# ---------------------------------------------------------------------------
# Double spending and operator exposure
# ---------------------------------------------------------------------------


@dataclass
class DoubleSpendAudit:
    """Recount of repeated serials from raw presentation events.

    Attributes:
        recount: Sum over serials of (spends - 1)
        double_spend_rejects: Presentations rejected as double spends
        accepted_duplicates: Sum over serials of (accepts - 1)
        races: Serials accepted more than once, with the accepting nodes
    """

    recount: int = 0
    double_spend_rejects: int = 0
    accepted_duplicates: int = 0
    races: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.recount == self.double_spend_rejects + self.accepted_duplicates

    def to_dict(self) -> Dict[str, Any]:
        return {
            "recount": self.recount,
            "double_spend_rejects": self.double_spend_rejects,
            "accepted_duplicates": self.accepted_duplicates,
            "races": self.races,
            "consistent": self.consistent,
        }


def double_spend_audit(rp_transcripts: Transcripts) -> DoubleSpendAudit:
    """Recount serials presented more than once across all relying parties.

    Bad-signature and unknown-attribute rejects are not spends and are not
    counted. A serial accepted at two nodes is a gossip race: it shows up
    in `accepted_duplicates` and in `races`, never silently dropped.
    """
    spends: Dict[str, List[TranscriptEvent]] = defaultdict(list)
    audit = DoubleSpendAudit()
    for event in _all_events(rp_transcripts):
        if event.kind != PRESENTATION:
            continue
        outcome = event.payload.get("outcome")
        if outcome not in ("accept", "double_spend"):
            continue
        spends[event.payload["serial"]].append(event)
        if outcome == "double_spend":
            audit.double_spend_rejects += 1

    for serial, events in sorted(spends.items()):
        audit.recount += len(events) - 1
        accepts = [event for event in events if event.payload["outcome"] == "accept"]
        if len(accepts) > 1:
            audit.accepted_duplicates += len(accepts) - 1
            audit.races.append(
                {
                    "serial": serial,
                    "nodes": [event.node for event in accepts],
                    "timestamps": [event.timestamp for event in accepts],
                }
            )
    if audit.races:
        logger.warning("%d serial(s) accepted more than once (gossip race)", len(audit.races))
    return audit


def operator_exposure(rp_transcripts: Transcripts) -> Dict[str, float]:
    """Share of all presentation events each node observed.

    A single central operator would observe 1.0: who presented, where and
    when, for every presentation.
    """
    seen = Counter(
        event.node for event in _all_events(rp_transcripts) if event.kind == PRESENTATION
    )
    total = sum(seen.values())
    return {node: count / total for node, count in sorted(seen.items())} if total else {}


# ---------------------------------------------------------------------------
# Whole-run audit
# ---------------------------------------------------------------------------


def load_transcripts(run_dir: Union[str, Path]) -> Dict[str, List[TranscriptEvent]]:
    """Every `<node>.jsonl` of a run directory, keyed by node name."""
    return {
        path.stem: load_transcript(path)
        for path in list_files_with_extension(run_dir, "jsonl")
    }


def _split_nodes(
    transcripts: Mapping[str, Sequence[TranscriptEvent]]
) -> Tuple[Dict[str, Sequence[TranscriptEvent]], Dict[str, Sequence[TranscriptEvent]]]:
    issuers, rps = {}, {}
    for node, events in transcripts.items():
        kinds = {event.kind for event in events}
        if kinds & {ISSUANCE, DENIAL}:
            issuers[node] = events
        if kinds & {PRESENTATION, GOSSIP}:
            rps[node] = events
    return issuers, rps


@dataclass
class LinkageSummary:
    issuer: str
    attribute: str
    mode: str
    rows: int
    columns: int
    anonymity_set_sizes: List[int]
    timing_unique_candidates: int

    @property
    def chance_level(self) -> bool:
        return all(size == self.rows for size in self.anonymity_set_sizes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "issuer": self.issuer,
            "attribute": self.attribute,
            "mode": self.mode,
            "rows": self.rows,
            "columns": self.columns,
            "anonymity_set_sizes": self.anonymity_set_sizes,
            "chance_level": self.chance_level,
            "timing_unique_candidates": self.timing_unique_candidates,
        }


@dataclass
class AuditReport:
    """Everything the auditor found in one run."""

    linkage: List[LinkageSummary] = field(default_factory=list)
    leaks: List[LeakFinding] = field(default_factory=list)
    key_separation: Optional[KeySeparationResult] = None
    double_spend: DoubleSpendAudit = field(default_factory=DoubleSpendAudit)
    operator_exposure: Dict[str, float] = field(default_factory=dict)
    nodes: List[str] = field(default_factory=list)

    @property
    def anonymity_set_sizes(self) -> Dict[str, List[int]]:
        return {f"{s.issuer}/{s.attribute}": s.anonymity_set_sizes for s in self.linkage}

    @property
    def double_spend_recount(self) -> int:
        return self.double_spend.recount

    def strict_failures(self) -> List[str]:
        """Reasons a --strict audit fails; empty when clean."""
        failures = []
        if self.leaks:
            failures.append(f"{len(self.leaks)} metadata leak finding(s)")
        if self.key_separation is not None and not self.key_separation.structural_pass:
            failures.append("attribute keys share a modulus")
        for summary in self.linkage:
            if not summary.chance_level:
                failures.append(f"linkage above chance for {summary.issuer}/{summary.attribute}")
        if not self.double_spend.consistent:
            failures.append("double-spend recount is inconsistent")
        return failures

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nodes": self.nodes,
            "linkage": [summary.to_dict() for summary in self.linkage],
            "anonymity_set_sizes": self.anonymity_set_sizes,
            "leaks": [
                {
                    "node": f.node,
                    "timestamp": f.timestamp,
                    "kind": f.kind,
                    "finding": f.finding,
                    "field": f.field_name,
                }
                for f in self.leaks
            ],
            "key_separation": self.key_separation.to_dict() if self.key_separation else None,
            "double_spend": self.double_spend.to_dict(),
            "double_spend_recount": self.double_spend_recount,
            "operator_exposure": self.operator_exposure,
        }


def audit_run(
    run_dir: Optional[Union[str, Path]] = None,
    *,
    transcripts: Optional[Mapping[str, Sequence[TranscriptEvent]]] = None,
    directory: Optional[AttributeKeyDirectory] = None,
    mode: str = EXHAUSTIVE,
    trials: int = 1000,
    seed: int = 0,
    signers: Optional[Mapping[DirectoryKey, BlindKeyPair]] = None,
    workers: int = 1,
    schemas: Mapping[str, Iterable[str]] = DEFAULT_SCHEMAS,
    progress: bool = False,
) -> AuditReport:
    """Run every check over a run directory or already-loaded transcripts.

    Linkage is attempted for every directory entry whose issuer has a
    transcript. In exhaustive mode, keys too large to enumerate fall back
    to algebraic mode. Key separation is skipped with fewer than two keys.

    Example:
        report = audit_run("run1/")
        print(format_summary(report))
    """
    if transcripts is None:
        if run_dir is None:
            raise ValueError("Either run_dir or transcripts is required")
        transcripts = load_transcripts(run_dir)
    if directory is None and run_dir is not None:
        directory_file = Path(run_dir) / "directory.json"
        if directory_file.exists():
            directory = AttributeKeyDirectory.from_records(load_json(directory_file))
    directory = directory or AttributeKeyDirectory()

    issuers, rps = _split_nodes(transcripts)
    report = AuditReport(nodes=sorted(transcripts))

    for (issuer, attribute), pub in sorted(directory.entries.items()):
        if issuer not in issuers:
            continue
        key_mode = mode
        if mode == EXHAUSTIVE and pub.modulus_n > EXHAUSTIVE_LIMIT:
            logger.warning("%s/%s too large to enumerate; using algebraic mode", issuer, attribute)
            key_mode = ALGEBRAIC
        matrix = consistency_matrix(issuers[issuer], rps, pub, key_mode, workers, progress)
        if not any(matrix.shape):
            continue
        report.linkage.append(
            LinkageSummary(
                issuer=issuer,
                attribute=attribute,
                mode=key_mode,
                rows=len(matrix.rows),
                columns=len(matrix.cols),
                anonymity_set_sizes=anonymity_set_sizes(matrix),
                timing_unique_candidates=timing_unique_candidates(matrix),
            )
        )

    report.leaks = metadata_leak_scan(transcripts, schemas)
    if len(directory) >= 2:
        report.key_separation = key_separation_check(
            directory, trials, random.Random(seed), signers
        )
    report.double_spend = double_spend_audit(rps)
    report.operator_exposure = operator_exposure(rps)
    logger.info("Audit of %d node(s): %d leak finding(s)", len(report.nodes), len(report.leaks))
    return report


def format_summary(report: AuditReport) -> str:
    """Human-readable summary table."""
    lines = ["=" * 60, "AUDIT SUMMARY", "=" * 60]
    lines.append(f"Nodes: {', '.join(report.nodes) or '-'}")
    lines.append("")
    lines.append(f"{'Key':<36} {'Rows':>5} {'Cols':>5} {'Min set':>8} {'Timing':>7}")
    for s in report.linkage:
        smallest = min(s.anonymity_set_sizes) if s.anonymity_set_sizes else 0
        mark = "✓" if s.chance_level else "✗"
        lines.append(
            f"{mark} {s.issuer + '/' + s.attribute:<34} {s.rows:>5} {s.columns:>5} "
            f"{smallest:>8} {s.timing_unique_candidates:>7}"
        )
    lines.append("")
    lines.append(f"{'✓' if not report.leaks else '✗'} Metadata leaks: {len(report.leaks)}")
    if report.key_separation is None:
        lines.append("- Key separation: skipped (fewer than two keys)")
    else:
        ks = report.key_separation
        lines.append(
            f"{'✓' if ks.structural_pass else '✗'} Key separation (structural), "
            f"{len(ks.trials)} statistical pair(s) {'passed' if ks.statistical_pass else 'FAILED'}"
        )
    ds = report.double_spend
    lines.append(
        f"{'✓' if ds.consistent else '✗'} Double spends: recount {ds.recount}, "
        f"rejected {ds.double_spend_rejects}, races {ds.accepted_duplicates}"
    )
    for node, share in report.operator_exposure.items():
        lines.append(f"  {node} observed {share:.0%} of presentations")
    lines.append("=" * 60)
    return "\n".join(lines)

