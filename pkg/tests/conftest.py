"""Shared fixtures: the toy keys, a toy directory and small scenario configs."""

import pytest

from civic_cred.blindsig import full_domain_hash, keygen
from civic_cred.credentials import AttributeKeyDirectory, Wallet
from civic_cred.services.issuer import CitizenSession, IssuerNode
from civic_cred.services.relying_party import RelyingPartyNode
from civic_cred.services.transcript import LogicalClock
from civic_cred.utils.config import ScenarioConfig

ISSUER = "tax-office"
REGION_X = "taxpayer:region-X"
REGION_Y = "taxpayer:region-Y"


@pytest.fixture
def toy_key():
    """n=55, e=3, d=7."""
    return keygen(5, 11, 3, REGION_X)


@pytest.fixture
def toy_pub(toy_key):
    return toy_key.public_key()


@pytest.fixture
def second_key():
    """n=391 = 17 * 23, e=3."""
    return keygen(17, 23, 3, REGION_Y)


@pytest.fixture
def toy_directory(toy_key, second_key):
    directory = AttributeKeyDirectory()
    directory.publish(ISSUER, REGION_X, toy_key.public_key())
    directory.publish(ISSUER, REGION_Y, second_key.public_key())
    return directory


@pytest.fixture
def serial_m8(toy_pub):
    """A 32-byte serial whose full-domain hash under n=55 is 8."""
    for i in range(100_000):
        serial = i.to_bytes(32, "big")
        if full_domain_hash(serial, toy_pub).m == 8:
            return serial
    raise AssertionError("no serial hashes to 8")


@pytest.fixture
def wallet():
    return Wallet.from_seed(42)


@pytest.fixture
def clock():
    return LogicalClock()


@pytest.fixture
def taxpayer():
    return CitizenSession("citizen-001", frozenset({REGION_X}))


@pytest.fixture
def issuer(toy_key, second_key, clock):
    return IssuerNode(ISSUER, {REGION_X: toy_key, REGION_Y: second_key}, clock=clock)


@pytest.fixture
def make_rp(toy_directory, clock):
    def _make(name="transit-0", attributes=frozenset({REGION_X})):
        return RelyingPartyNode(
            name=name, issuer=ISSUER, directory=toy_directory, attributes=attributes, clock=clock
        )

    return _make


@pytest.fixture
def transit_config():
    return ScenarioConfig(seed=1, citizens=10, relying_parties=2, credentials_per_citizen=3)


@pytest.fixture(scope="session")
def serials_by_m():
    """One 32-byte serial per message the full-domain hash can reach under n=55."""
    pub = keygen(5, 11, 3, REGION_X).public_key()
    found = {}
    for i in range(100_000):
        serial = i.to_bytes(32, "big")
        found.setdefault(full_domain_hash(serial, pub).m, serial)
        if len(found) == 39:
            return found
    raise AssertionError("full-domain hash missed some units")
