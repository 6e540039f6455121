"""RSA blind signatures with a full-domain hash.

The blinding function b(m) = m * r^e mod n commutes with the signing function
s(x) = x^d mod n, so a holder can have a message signed without the signer
ever seeing it. Keys are demonstration-scale on purpose (down to 16-bit
moduli) so that linkage audits can enumerate every unit; nothing here is
production cryptography.

Example:
    key = keygen(5, 11, 3, "taxpayer:region-X")
    pub = key.public_key()
    msg = HashedMessage.raw(8, pub.modulus_n)
    bf = BlindingFactor.from_r(2, pub.modulus_n)
    s = unblind(sign_blinded(blind(msg, bf, pub), key), bf, pub)
    assert verify(msg, s, pub)
"""

import hashlib
import math
import random
from dataclasses import dataclass, field
from typing import Optional

from sympy import isprime, mod_inverse, nextprime

from .errors import (EqualPrimes, InvalidPrime, InvalidSerial,
                     ModulusMismatch, ModulusTooSmall, NonCoprimeExponent,
                     OutOfRange)
from .utils.logger import get_logger

logger = get_logger(__name__)

SERIAL_BYTES = 32
MIN_HASHABLE_MODULUS = 7
MIN_KEY_BITS = 8


@dataclass(frozen=True)
class PublicKey:
    """Public half of an attribute key: everyone can check what it signed."""

    modulus_n: int
    public_exponent_e: int
    attribute_id: str


@dataclass(frozen=True)
class BlindKeyPair:
    """Issuer signing key for exactly one attribute.

    Attributes:
        modulus_n: Product of two distinct odd primes
        public_exponent_e: Public exponent, coprime with lambda(n)
        private_exponent_d: Least positive inverse of e mod lambda(n)
        attribute_id: The attestation this key stands for
    """

    modulus_n: int
    public_exponent_e: int
    private_exponent_d: int = field(repr=False)
    attribute_id: str

    def public_key(self) -> PublicKey:
        """Drop the private exponent."""
        return PublicKey(self.modulus_n, self.public_exponent_e, self.attribute_id)


@dataclass(frozen=True)
class BlindingFactor:
    """Holder-side unit r with its cached inverse, bound to one modulus."""

    r: int = field(repr=False)
    r_inverse: int = field(repr=False)
    bound_modulus: int

    @classmethod
    def from_r(cls, r: int, n: int) -> "BlindingFactor":
        """Build a blinding factor from a chosen unit r.

        Raises:
            OutOfRange: If r is not a unit in [1, n-1]
        """
        if not 1 <= r < n or math.gcd(r, n) != 1:
            raise OutOfRange(f"Blinding factor must be a unit modulo {n}")
        return cls(r=r, r_inverse=int(mod_inverse(r, n)), bound_modulus=n)


@dataclass(frozen=True)
class HashedMessage:
    """A signable residue m, together with the serial it came from.

    `source_serial` is empty for residues built directly with `raw`.
    """

    m: int
    source_serial: bytes
    bound_modulus: int

    @classmethod
    def raw(cls, m: int, n: int) -> "HashedMessage":
        """Wrap an already reduced residue (exhaustive checks, auditing)."""
        if not 0 < m < n:
            raise OutOfRange(f"Message must lie in [1, {n - 1}]")
        return cls(m=m, source_serial=b"", bound_modulus=n)


def carmichael_lambda(p: int, q: int) -> int:
    """Carmichael function of p*q for distinct odd primes."""
    return math.lcm(p - 1, q - 1)


def keygen(p: int, q: int, e: int, attribute_id: str) -> BlindKeyPair:
    """Build the signing key for one attribute from two primes.

    Args:
        p: Odd prime
        q: Odd prime different from p
        e: Small odd public exponent
        attribute_id: Non-empty attribute label

    Returns:
        BlindKeyPair with d the least positive inverse of e mod lambda(pq)

    Raises:
        EqualPrimes: If p == q
        InvalidPrime: If p or q is not an odd prime
        NonCoprimeExponent: If gcd(e, lambda(pq)) != 1
        ValueError: If attribute_id is empty

    Example:
        keygen(5, 11, 3, "tax-region-X").private_exponent_d  # 7
    """
    if not attribute_id:
        raise ValueError("attribute_id must be non-empty")
    if p == q:
        raise EqualPrimes(f"p and q must differ (both {p})")
    for factor in (p, q):
        if factor == 2 or not isprime(factor):
            raise InvalidPrime(f"{factor} is not an odd prime")

    lam = carmichael_lambda(p, q)
    if e < 3 or math.gcd(e, lam) != 1:
        raise NonCoprimeExponent(f"gcd({e}, lambda={lam}) = {math.gcd(e, lam)}")

    d = int(mod_inverse(e, lam))
    return BlindKeyPair(
        modulus_n=p * q,
        public_exponent_e=e,
        private_exponent_d=d,
        attribute_id=attribute_id,
    )


def _draw_prime(bits: int, e: int, rng: random.Random, avoid: Optional[int] = None) -> int:
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        prime = int(nextprime(candidate - 1))
        if prime != avoid and prime > 2 and math.gcd(e, prime - 1) == 1:
            return prime


def generate_keypair(
    bits: int, e: int, attribute_id: str, rng: random.Random
) -> BlindKeyPair:
    """Draw a fresh demonstration-scale key from a seeded rng.

    Each prime has about bits/2 bits; primes with gcd(e, p-1) != 1 are
    rejected so keygen always succeeds.

    Args:
        bits: Approximate modulus size (>= 8)
        e: Public exponent
        attribute_id: Attribute the key signs for
        rng: Seeded random source

    Returns:
        BlindKeyPair
    """
    if bits < MIN_KEY_BITS:
        raise ValueError(f"Key size must be at least {MIN_KEY_BITS} bits")
    p_bits = bits // 2
    p = _draw_prime(p_bits, e, rng)
    q = _draw_prime(bits - p_bits, e, rng, avoid=p)
    key = keygen(p, q, e, attribute_id)
    logger.info(
        "Generated %d-bit key for %s", key.modulus_n.bit_length(), attribute_id
    )
    return key


def full_domain_hash(serial: bytes, pub: PublicKey) -> HashedMessage:
    """Map a 32-byte serial to a unit in [2, n-1].

    SHA-256 over serial || 8-byte big-endian counter (from 0), reduced as
    2 + digest mod (n - 2); the counter advances until gcd(m, n) = 1.

    Raises:
        InvalidSerial: If the serial is not 32 bytes
        ModulusTooSmall: If n <= 6
    """
    if len(serial) != SERIAL_BYTES:
        raise InvalidSerial(f"Serial must be {SERIAL_BYTES} bytes, got {len(serial)}")
    n = pub.modulus_n
    if n < MIN_HASHABLE_MODULUS:
        raise ModulusTooSmall(f"Modulus {n} is too small to hash into")

    counter = 0
    while True:
        digest = hashlib.sha256(serial + counter.to_bytes(8, "big")).digest()
        m = 2 + int.from_bytes(digest, "big") % (n - 2)
        if math.gcd(m, n) == 1:
            return HashedMessage(m=m, source_serial=bytes(serial), bound_modulus=n)
        counter += 1


def sample_blinding_factor(pub: PublicKey, rng: random.Random) -> BlindingFactor:
    """Rejection-sample a unit r uniformly from [2, n-1]."""
    n = pub.modulus_n
    if n < 3:
        raise ModulusTooSmall(f"Modulus {n} has no blinding factors")
    while True:
        r = rng.randrange(2, n)
        if math.gcd(r, n) == 1:
            return BlindingFactor.from_r(r, n)


def _check_moduli(pub: PublicKey, *bound: int) -> None:
    for modulus in bound:
        if modulus != pub.modulus_n:
            raise ModulusMismatch(
                f"Value bound to modulus {modulus:x}, key uses {pub.modulus_n:x}"
            )


def blind(msg: HashedMessage, bf: BlindingFactor, pub: PublicKey) -> int:
    """Blind a message: m * r^e mod n."""
    _check_moduli(pub, msg.bound_modulus, bf.bound_modulus)
    n = pub.modulus_n
    return msg.m * pow(bf.r, pub.public_exponent_e, n) % n


def sign_blinded(b: int, key: BlindKeyPair) -> int:
    """Sign a blinded value: b^d mod n.

    Raises:
        OutOfRange: Unless 0 < b < n
    """
    if not 0 < b < key.modulus_n:
        raise OutOfRange("Blinded value outside (0, n)")
    return pow(b, key.private_exponent_d, key.modulus_n)


def unblind(blinded_sig: int, bf: BlindingFactor, pub: PublicKey) -> int:
    """Strip the blinding: s' * r^-1 mod n."""
    _check_moduli(pub, bf.bound_modulus)
    return blinded_sig * bf.r_inverse % pub.modulus_n


def verify(msg: HashedMessage, s: int, pub: PublicKey) -> bool:
    """Check s^e == m (mod n) using public data only.

    Signatures outside [1, n-1] and messages bound to another modulus are
    rejected rather than raising.
    """
    n = pub.modulus_n
    if msg.bound_modulus != n or not 0 < s < n:
        return False
    return pow(s, pub.public_exponent_e, n) == msg.m % n
