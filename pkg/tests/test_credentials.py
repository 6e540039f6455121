import math
import random

import pytest

from civic_cred.blindsig import (BlindingFactor, PublicKey, generate_keypair,
                                sign_blinded)
from civic_cred.credentials import (AttributeKeyDirectory, Wallet,
                                    create_issue_request, directory_lookup,
                                    directory_publish, finalize_credential,
                                    generate_serial, keyring_from_records,
                                    keyring_to_records,
                                    take_for_presentation)
from civic_cred.errors import (BadIssuerSignature, CredentialAlreadyUsed,
                               NoSuchCredential, NoSuchPendingIssuance,
                               SharedModulus, UnknownAttribute)
from civic_cred.services.wire import encode, field_names, to_wire
from civic_cred.utils.serialization import int_to_hex

from .conftest import ISSUER, REGION_X, REGION_Y

UNITS_55 = [x for x in range(2, 55) if math.gcd(x, 55) == 1]


def _forced_request(wallet, directory, serial, r=2):
    return create_issue_request(
        wallet,
        REGION_X,
        directory,
        ISSUER,
        serial=serial,
        blinding_factor=BlindingFactor.from_r(r, 55),
    )


class TestSerials:
    def test_unique_and_sized(self, wallet):
        serials = [generate_serial(wallet) for _ in range(10_000)]
        assert len(set(serials)) == 10_000
        assert {len(s) for s in serials} == {32}

    def test_reproducible_under_seed(self):
        a = Wallet.from_seed(9)
        b = Wallet.from_seed(9)
        assert [generate_serial(a) for _ in range(5)] == [generate_serial(b) for _ in range(5)]


class TestIssuance:
    def test_forced_request_blinds_to_nine(self, wallet, toy_directory, serial_m8):
        request, pending = _forced_request(wallet, toy_directory, serial_m8)
        assert request.blinded_value == 9
        assert request.attribute_id == REGION_X
        assert wallet.pending[serial_m8] == pending

    def test_request_field_set(self, wallet, toy_directory):
        request, _ = create_issue_request(wallet, REGION_X, toy_directory, ISSUER)
        assert field_names(request) == ["attribute_id", "blinded_value"]

    def test_request_does_not_carry_the_serial(self, wallet, toy_directory):
        request, pending = create_issue_request(wallet, REGION_X, toy_directory, ISSUER)
        assert pending.serial.hex().encode() not in encode(to_wire(request))

    def test_unknown_attribute(self, wallet, toy_directory):
        with pytest.raises(UnknownAttribute):
            create_issue_request(wallet, "resident:city-Z", toy_directory, ISSUER)

    def test_finalize(self, wallet, toy_directory, serial_m8):
        _, pending = _forced_request(wallet, toy_directory, serial_m8)
        credential = finalize_credential(wallet, pending, 4)
        assert credential.signature == 2
        assert credential.serial == serial_m8
        assert serial_m8 in wallet.ready
        assert serial_m8 not in wallet.pending

    def test_bad_issuer_signature_keeps_pending(self, wallet, toy_directory, serial_m8):
        _, pending = _forced_request(wallet, toy_directory, serial_m8)
        with pytest.raises(BadIssuerSignature):
            finalize_credential(wallet, pending, 5)
        assert serial_m8 in wallet.pending

    def test_finalize_twice(self, wallet, toy_directory, serial_m8):
        _, pending = _forced_request(wallet, toy_directory, serial_m8)
        finalize_credential(wallet, pending, 4)
        with pytest.raises(NoSuchPendingIssuance):
            finalize_credential(wallet, pending, 4)

    def test_end_to_end_for_every_blinding_factor(self, toy_key, toy_directory, serial_m8):
        for r in UNITS_55:
            wallet = Wallet.from_seed(r)
            request, pending = _forced_request(wallet, toy_directory, serial_m8, r=r)
            credential = finalize_credential(wallet, pending, sign_blinded(request.blinded_value, toy_key))
            assert credential.signature == 2

    def test_end_to_end_for_every_message_and_blinding_factor(self, toy_key, toy_directory, serials_by_m):
        # m = 1 is never a full-domain hash output
        assert sorted(serials_by_m) == UNITS_55
        for m, serial in serials_by_m.items():
            for r in [1, *UNITS_55]:
                wallet = Wallet.from_seed(0)
                request, pending = _forced_request(wallet, toy_directory, serial, r=r)
                credential = finalize_credential(wallet, pending, sign_blinded(request.blinded_value, toy_key))
                assert credential.signature == pow(m, 7, 55)

    def test_discard_pending(self, wallet, toy_directory, serial_m8):
        _, pending = _forced_request(wallet, toy_directory, serial_m8)
        assert wallet.discard_pending(serial_m8) == pending
        assert serial_m8 not in wallet.pending
        with pytest.raises(NoSuchPendingIssuance):
            wallet.discard_pending(serial_m8)
        with pytest.raises(NoSuchPendingIssuance):
            finalize_credential(wallet, pending, 4)


class TestPresentation:
    @pytest.fixture
    def funded(self, wallet, toy_key, toy_directory):
        request, pending = create_issue_request(wallet, REGION_X, toy_directory, ISSUER)
        finalize_credential(wallet, pending, sign_blinded(request.blinded_value, toy_key))
        return wallet, pending.serial

    def test_three_fields(self, funded):
        wallet, _ = funded
        presentation = take_for_presentation(wallet, REGION_X)
        assert field_names(presentation) == ["attribute_id", "serial", "signature"]

    def test_one_shot(self, funded):
        wallet, serial = funded
        take_for_presentation(wallet, serial)
        with pytest.raises(CredentialAlreadyUsed):
            take_for_presentation(wallet, serial)
        with pytest.raises(CredentialAlreadyUsed):
            take_for_presentation(wallet, REGION_X)
        assert wallet.unused() == []

    def test_empty_wallet(self, wallet):
        with pytest.raises(NoSuchCredential):
            take_for_presentation(wallet, REGION_X)
        with pytest.raises(NoSuchCredential):
            take_for_presentation(wallet, bytes(32))


class TestDirectory:
    def test_publish_then_lookup(self, toy_pub):
        directory = directory_publish(AttributeKeyDirectory(), ISSUER, REGION_X, toy_pub)
        assert directory_lookup(directory, ISSUER, REGION_X) == toy_pub

    def test_lookup_is_read_only(self, toy_directory):
        before = dict(toy_directory.entries)
        with pytest.raises(UnknownAttribute):
            toy_directory.lookup(ISSUER, "resident:city-Z")
        toy_directory.lookup(ISSUER, REGION_X)
        assert toy_directory.entries == before

    def test_shared_modulus(self, toy_pub):
        directory = directory_publish(AttributeKeyDirectory(), ISSUER, REGION_X, toy_pub)
        with pytest.raises(SharedModulus):
            directory.publish(ISSUER, REGION_Y, PublicKey(55, 3, REGION_Y))

    def test_rotation_is_recorded(self, toy_pub, second_key):
        directory = AttributeKeyDirectory().publish(ISSUER, REGION_X, toy_pub)
        directory.publish(ISSUER, REGION_X, PublicKey(391, 3, REGION_X))
        assert directory.rotations == [
            {"issuer": ISSUER, "attribute": REGION_X, "old_n": "37", "new_n": "187"}
        ]
        assert directory.lookup(ISSUER, REGION_X).modulus_n == 391

    def test_records(self, toy_directory):
        records = toy_directory.to_records()
        assert records[0] == {"issuer": ISSUER, "attribute": REGION_X, "n": "37", "e": "3"}
        assert AttributeKeyDirectory.from_records(records).entries == toy_directory.entries

    def test_keyring_records(self, toy_key):
        records = keyring_to_records({(ISSUER, REGION_X): toy_key})
        assert records[0]["d"] == "7"
        assert keyring_from_records(records) == {(ISSUER, REGION_X): toy_key}


def test_holder_secrets_never_leave_the_wallet():
    key = generate_keypair(64, 3, REGION_X, random.Random(5))
    directory = AttributeKeyDirectory()
    directory.publish(ISSUER, REGION_X, key.public_key())
    wallet = Wallet.from_seed(11)

    requests = [create_issue_request(wallet, REGION_X, directory, ISSUER) for _ in range(5)]
    secrets = []
    for _, pending in requests:
        r = pending.blinding_factor.r
        secrets += [int_to_hex(r).encode(), r.to_bytes((r.bit_length() + 7) // 8, "big")]
    emitted = [encode(to_wire(request)) for request, _ in requests]

    for request, pending in requests[:3]:
        finalize_credential(wallet, pending, sign_blinded(request.blinded_value, key))
    emitted += [encode(to_wire(take_for_presentation(wallet, REGION_X))) for _ in range(2)]

    still_pending = [pending.serial for _, pending in requests[3:]]
    for message in emitted:
        for secret in secrets:
            assert secret not in message
        for serial in still_pending:
            assert serial.hex().encode() not in message
            assert serial not in message
    for request, _ in requests:
        message = encode(to_wire(request))
        assert all(pending.serial.hex().encode() not in message for _, pending in requests)
