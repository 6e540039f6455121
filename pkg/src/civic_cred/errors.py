"""Exception hierarchy for civic-cred.

Every domain error derives from `CivicCredError` and from the closest
builtin, so callers may catch either.
"""


class CivicCredError(Exception):
    """Base class for all civic-cred domain errors."""


# blindsig


class InvalidPrime(CivicCredError, ValueError):
    """A keygen factor is not an odd prime."""


class EqualPrimes(CivicCredError, ValueError):
    """Both keygen factors are the same prime."""


class NonCoprimeExponent(CivicCredError, ValueError):
    """The public exponent shares a factor with the Carmichael function of n."""


class ModulusTooSmall(CivicCredError, ValueError):
    """The modulus is too small to host a full-domain hash."""


class ModulusMismatch(CivicCredError, ValueError):
    """Values bound to different moduli were combined."""


class OutOfRange(CivicCredError, ValueError):
    """An integer lies outside the range an operation accepts."""


class InvalidSerial(CivicCredError, ValueError):
    """A serial is not exactly 32 bytes."""


# credentials


class UnknownAttribute(CivicCredError, LookupError):
    """No key is published for the requested (issuer, attribute) pair."""


class SharedModulus(CivicCredError, ValueError):
    """Two attributes of one issuer would share a modulus."""


class BadIssuerSignature(CivicCredError, ValueError):
    """The unblinded issuer signature does not verify."""


class CredentialAlreadyUsed(CivicCredError, RuntimeError):
    """A single-use credential was selected for a second presentation."""


class NoSuchCredential(CivicCredError, LookupError):
    """No credential matches the selector."""


class NoSuchPendingIssuance(CivicCredError, LookupError):
    """The pending issuance is not (or no longer) held by the wallet."""


# services


class MalformedMessage(CivicCredError, ValueError):
    """Wire bytes do not decode to a canonical, schema-exact message."""


class GossipDomainMismatch(CivicCredError, ValueError):
    """Two relying parties serving different attributes tried to gossip."""


# scenarios


class InvalidConfig(CivicCredError, ValueError):
    """A scenario configuration violates its constraints."""


class InvalidEpoch(CivicCredError, ValueError):
    """An epoch is negative."""


class UnsortedInput(CivicCredError, ValueError):
    """A heard-token list is not sorted by epoch."""


# auditor


class ModulusTooLargeForExhaustive(CivicCredError, ValueError):
    """Exhaustive search over units was requested for a large modulus."""


class InsufficientAttributes(CivicCredError, ValueError):
    """Key separation needs at least two directory entries."""
