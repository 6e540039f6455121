"""Holder-side credential lifecycle and the public attribute-key directory.

A wallet generates its own serials and blinding factors, sends only the
blinded value to the issuer, unblinds the answer into a bearer credential
and presents each credential exactly once. Serials and blinding factors
never leave the wallet before presentation.
"""

import random
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

from .blindsig import (SERIAL_BYTES, BlindingFactor, BlindKeyPair, PublicKey,
                       blind, full_domain_hash, sample_blinding_factor,
                       unblind, verify)
from .errors import (BadIssuerSignature, CredentialAlreadyUsed,
                     InvalidSerial, NoSuchCredential, NoSuchPendingIssuance,
                     SharedModulus, UnknownAttribute)
from .utils.logger import get_logger
from .utils.serialization import hex_to_int, int_to_hex

logger = get_logger(__name__)

AttributeId = str
Serial = bytes
DirectoryKey = Tuple[str, AttributeId]


@dataclass(frozen=True)
class IssueRequest:
    """What the issuer gets to see: the attribute and a blinded value."""

    attribute_id: AttributeId
    blinded_value: int


@dataclass(frozen=True)
class Presentation:
    """What a relying party gets to see: a bare single-use credential."""

    attribute_id: AttributeId
    serial: Serial
    signature: int


@dataclass(frozen=True)
class PendingIssuance:
    """Holder-side state between request and finalization."""

    attribute_id: AttributeId
    serial: Serial = field(repr=False)
    blinding_factor: BlindingFactor = field(repr=False)
    blinded_value: int
    issuer_key: PublicKey


@dataclass
class Credential:
    """An unblinded, verified, single-use bearer token."""

    attribute_id: AttributeId
    serial: Serial = field(repr=False)
    signature: int = field(repr=False)
    issuer_key: PublicKey
    used: bool = False


@dataclass
class Wallet:
    """Single-owner holder state machine.

    Operations on one wallet are serialized through its lock; distinct
    wallets are independent.

    Attributes:
        rng: Holder-controlled seeded random source
        pending: Pending issuances keyed by serial
        ready: Finalized credentials keyed by serial, in issuance order
    """

    rng: random.Random
    pending: Dict[Serial, PendingIssuance] = field(default_factory=dict)
    ready: Dict[Serial, Credential] = field(default_factory=dict)
    _seen_serials: set = field(default_factory=set, repr=False, compare=False)
    lock: Any = field(default_factory=threading.RLock, repr=False, compare=False)

    @classmethod
    def from_seed(cls, seed: int) -> "Wallet":
        return cls(rng=random.Random(seed))

    def unused(self, attribute: Optional[AttributeId] = None) -> List[Credential]:
        """Credentials not yet presented, optionally for one attribute."""
        with self.lock:
            return [
                cred
                for cred in self.ready.values()
                if not cred.used and (attribute is None or cred.attribute_id == attribute)
            ]

    def discard_pending(self, serial: Serial) -> PendingIssuance:
        """Drop a pending issuance the issuer denied.

        Raises:
            NoSuchPendingIssuance: If no issuance is pending for serial
        """
        with self.lock:
            try:
                return self.pending.pop(serial)
            except KeyError:
                raise NoSuchPendingIssuance("No pending issuance for this serial") from None


class AttributeKeyDirectory:
    """Public map from (issuer, attribute) to the key attesting it.

    The choice of key is the attribute: signatures carry nothing else.

    Example:
        directory = AttributeKeyDirectory()
        directory.publish("tax-office", "taxpayer:region-X", key.public_key())
        pub = directory.lookup("tax-office", "taxpayer:region-X")
    """

    def __init__(self, entries: Optional[Mapping[DirectoryKey, PublicKey]] = None):
        self.entries: Dict[DirectoryKey, PublicKey] = {}
        self.rotations: List[Dict[str, str]] = []
        for (issuer, attribute), key in (entries or {}).items():
            self.publish(issuer, attribute, key)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, item: DirectoryKey) -> bool:
        return item in self.entries

    def publish(self, issuer: str, attribute: AttributeId, key: PublicKey) -> "AttributeKeyDirectory":
        """Publish (or rotate) the key for one issuer attribute.

        Raises:
            SharedModulus: If another attribute of the issuer uses key.modulus_n
        """
        if not attribute:
            raise ValueError("attribute must be non-empty")
        for (other_issuer, other_attribute), other in self.entries.items():
            if (
                other_issuer == issuer
                and other_attribute != attribute
                and other.modulus_n == key.modulus_n
            ):
                raise SharedModulus(
                    f"{issuer}: {attribute} would share a modulus with {other_attribute}"
                )

        previous = self.entries.get((issuer, attribute))
        if previous is not None:
            self.rotations.append(
                {
                    "issuer": issuer,
                    "attribute": attribute,
                    "old_n": int_to_hex(previous.modulus_n),
                    "new_n": int_to_hex(key.modulus_n),
                }
            )
            logger.warning("Key rotation for %s / %s", issuer, attribute)
        self.entries[(issuer, attribute)] = key
        return self

    def lookup(self, issuer: str, attribute: AttributeId) -> PublicKey:
        """Exact-match, read-only retrieval.

        Raises:
            UnknownAttribute: If nothing is published for the pair
        """
        try:
            return self.entries[(issuer, attribute)]
        except KeyError:
            raise UnknownAttribute(f"No key for {issuer} / {attribute}") from None

    def to_records(self) -> List[Dict[str, str]]:
        """Directory file rows: {issuer, attribute, n, e} with hex integers."""
        return [
            {
                "issuer": issuer,
                "attribute": attribute,
                "n": int_to_hex(key.modulus_n),
                "e": int_to_hex(key.public_exponent_e),
            }
            for (issuer, attribute), key in sorted(self.entries.items())
        ]

    @classmethod
    def from_records(cls, records: Iterable[Mapping[str, Any]]) -> "AttributeKeyDirectory":
        directory = cls()
        for row in records:
            key = PublicKey(
                modulus_n=hex_to_int(row["n"]),
                public_exponent_e=hex_to_int(row["e"]),
                attribute_id=row["attribute"],
            )
            directory.publish(row["issuer"], row["attribute"], key)
        return directory


def directory_publish(
    directory: AttributeKeyDirectory, issuer: str, attribute: AttributeId, key: PublicKey
) -> AttributeKeyDirectory:
    return directory.publish(issuer, attribute, key)


def directory_lookup(
    directory: AttributeKeyDirectory, issuer: str, attribute: AttributeId
) -> PublicKey:
    return directory.lookup(issuer, attribute)


def keyring_to_records(keyring: Mapping[DirectoryKey, BlindKeyPair]) -> List[Dict[str, str]]:
    """Private keyring rows: {issuer, attribute, n, e, d} with hex integers."""
    return [
        {
            "issuer": issuer,
            "attribute": attribute,
            "n": int_to_hex(key.modulus_n),
            "e": int_to_hex(key.public_exponent_e),
            "d": int_to_hex(key.private_exponent_d),
        }
        for (issuer, attribute), key in sorted(keyring.items())
    ]


def keyring_from_records(records: Iterable[Mapping[str, Any]]) -> Dict[DirectoryKey, BlindKeyPair]:
    return {
        (row["issuer"], row["attribute"]): BlindKeyPair(
            modulus_n=hex_to_int(row["n"]),
            public_exponent_e=hex_to_int(row["e"]),
            private_exponent_d=hex_to_int(row["d"]),
            attribute_id=row["attribute"],
        )
        for row in records
    }


def generate_serial(wallet: Wallet) -> Serial:
    """Draw 32 fresh bytes from the wallet rng, never repeating within it."""
    with wallet.lock:
        while True:
            serial = wallet.rng.randbytes(SERIAL_BYTES)
            if serial not in wallet._seen_serials:
                wallet._seen_serials.add(serial)
                return serial


def create_issue_request(
    wallet: Wallet,
    attribute: AttributeId,
    directory: AttributeKeyDirectory,
    issuer: str,
    *,
    serial: Optional[Serial] = None,
    blinding_factor: Optional[BlindingFactor] = None,
) -> Tuple[IssueRequest, PendingIssuance]:
    """Prepare a blinded issuance request and park the secrets in the wallet.

    `serial` and `blinding_factor` override the wallet's own draws (tests
    use them to force known values).

    Raises:
        UnknownAttribute: If the directory has no key for (issuer, attribute)
    """
    pub = directory.lookup(issuer, attribute)
    with wallet.lock:
        if serial is None:
            serial = generate_serial(wallet)
        else:
            if len(serial) != SERIAL_BYTES:
                raise InvalidSerial(f"Serial must be {SERIAL_BYTES} bytes")
            if serial in wallet.pending or serial in wallet.ready:
                raise ValueError("Serial already held by this wallet")
            wallet._seen_serials.add(serial)
        if blinding_factor is None:
            blinding_factor = sample_blinding_factor(pub, wallet.rng)

        blinded_value = blind(full_domain_hash(serial, pub), blinding_factor, pub)
        pending = PendingIssuance(
            attribute_id=attribute,
            serial=serial,
            blinding_factor=blinding_factor,
            blinded_value=blinded_value,
            issuer_key=pub,
        )
        wallet.pending[serial] = pending

    return IssueRequest(attribute_id=attribute, blinded_value=blinded_value), pending


def finalize_credential(
    wallet: Wallet, pending: PendingIssuance, blinded_sig: int
) -> Credential:
    """Unblind the issuer's answer and check it before trusting it.

    Raises:
        NoSuchPendingIssuance: If the wallet no longer holds the pending issuance
        BadIssuerSignature: If the unblinded signature does not verify
    """
    with wallet.lock:
        if wallet.pending.get(pending.serial) != pending:
            raise NoSuchPendingIssuance("Pending issuance is not held by this wallet")

        pub = pending.issuer_key
        signature = unblind(blinded_sig, pending.blinding_factor, pub)
        if not verify(full_domain_hash(pending.serial, pub), signature, pub):
            raise BadIssuerSignature(
                f"Issuer signature for {pending.attribute_id} failed verification"
            )

        credential = Credential(
            attribute_id=pending.attribute_id,
            serial=pending.serial,
            signature=signature,
            issuer_key=pub,
        )
        del wallet.pending[pending.serial]
        wallet.ready[pending.serial] = credential
        return credential


def take_for_presentation(
    wallet: Wallet, credential_selector: Union[Serial, AttributeId]
) -> Presentation:
    """Hand out a credential for its one and only presentation.

    The selector is either a serial (bytes) or an attribute id (str, first
    unused credential for it).

    Raises:
        NoSuchCredential: If nothing matches the selector
        CredentialAlreadyUsed: If the matching credential(s) were already presented
    """
    with wallet.lock:
        if isinstance(credential_selector, (bytes, bytearray)):
            credential = wallet.ready.get(bytes(credential_selector))
            if credential is None:
                raise NoSuchCredential("No credential with that serial")
            if credential.used:
                raise CredentialAlreadyUsed("Credential was already presented")
        else:
            matching = [
                cred
                for cred in wallet.ready.values()
                if cred.attribute_id == credential_selector
            ]
            if not matching:
                raise NoSuchCredential(f"No credential for {credential_selector}")
            fresh = [cred for cred in matching if not cred.used]
            if not fresh:
                raise CredentialAlreadyUsed(
                    f"All credentials for {credential_selector} were presented"
                )
            credential = fresh[0]

        credential.used = True
        return Presentation(
            attribute_id=credential.attribute_id,
            serial=credential.serial,
            signature=credential.signature,
        )
