import hashlib
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from SCKit.exceptions import FormatError
from SCKit.formats import (
    CiphertextFile,
    KeyFile,
    SignatureFile,
    decode_hex_bytes,
    decode_hex_int,
    encode_hex_bytes,
    encode_hex_int,
)
from SCKit.group_math import GroupParams
from SCKit.schemes import SchemeId, keygen_sender
from SCKit.schnorr import SchnorrKeyPair

TOY_PARAMS_TEXT = "SCKIT1\nrole params\nprofile paper-compat\np 2:17\nq 1:b\ng 1:2\n"


def _canonical_ct():
    return CiphertextFile(
        scheme="schnorr-sc",
        profile="paper-compat",
        r=bytes.fromhex("5e8ee6c0159fac78508eb14736962dc824c94b1a"),
        s=4,
        c=b"hello",
    ).serialize()


class TestEncoding:
    def test_integers(self):
        assert encode_hex_int(23) == "2:17"
        assert encode_hex_int(0) == "1:0"
        assert decode_hex_int("1:b", "q") == 11

    def test_bytes(self):
        assert encode_hex_bytes(b"") == "0:"
        assert encode_hex_bytes(b"\x00\xff") == "4:00ff"
        assert decode_hex_bytes("4:00ff", "c") == b"\x00\xff"

    @pytest.mark.parametrize("value", ["2:0b", "0:", "1:B", "3:17", "17", "2:1g", "02:17", "-1:1"])
    def test_non_canonical_integers(self, value):
        with pytest.raises(FormatError):
            decode_hex_int(value, "x")

    def test_odd_length_bytes(self):
        with pytest.raises(FormatError):
            decode_hex_bytes("3:abc", "c")


class TestKeyFile:
    def test_toy_params_text(self):
        key_file = KeyFile.for_params(GroupParams(p=23, q=11, g=2), "paper-compat")
        assert key_file.serialize() == TOY_PARAMS_TEXT
        assert KeyFile.parse(TOY_PARAMS_TEXT) == key_file

    def test_party_key_layout(self, toy_group):
        keys = keygen_sender(SchemeId.SCHNORR_SC, toy_group, random.Random(0), force_exponent=4)
        key_file = KeyFile.for_party(keys, SchemeId.SCHNORR_SC, toy_group, "paper-compat")
        text = key_file.serialize()
        assert text.splitlines() == [
            "SCKIT1", "role sender", "scheme schnorr-sc", "profile paper-compat",
            "p 2:17", "q 1:b", "g 1:2", "public 1:d", "private 1:4",
        ]
        assert KeyFile.parse(text).to_party_keys() == keys

    def test_public_only_has_no_private_line(self, toy_group):
        keys = keygen_sender(SchemeId.SCS1, toy_group, random.Random(0), force_exponent=4)
        public = KeyFile.for_party(keys, SchemeId.SCS1, toy_group, "paper-compat").public_only()
        assert "private" not in public.serialize()
        assert not KeyFile.parse(public.serialize()).has_private

    def test_schnorr_key(self, toy_group):
        key_file = KeyFile.for_schnorr(SchnorrKeyPair(y=16, x=4), toy_group, "modern-default")
        assert "scheme schnorr-sig\n" in key_file.serialize()
        assert KeyFile.parse(key_file.serialize()).to_schnorr_keypair() == SchnorrKeyPair(y=16, x=4)
        with pytest.raises(FormatError):
            key_file.to_party_keys()

    def test_params_with_private_line(self):
        with pytest.raises(FormatError):
            KeyFile.parse(TOY_PARAMS_TEXT + "private 1:4\n")

    def test_wrong_scheme_for_role(self):
        text = "SCKIT1\nrole sender\nscheme schnorr-sig\nprofile paper-compat\np 2:17\nq 1:b\ng 1:2\npublic 1:d\n"
        with pytest.raises(FormatError):
            KeyFile.parse(text)

    def test_field_order_is_fixed(self):
        swapped = "SCKIT1\nrole params\nprofile paper-compat\nq 1:b\np 2:17\ng 1:2\n"
        with pytest.raises(FormatError):
            KeyFile.parse(swapped)

    def test_unknown_profile(self):
        with pytest.raises(FormatError):
            KeyFile.parse(TOY_PARAMS_TEXT.replace("paper-compat", "rot13"))

    def test_non_ascii(self):
        with pytest.raises(FormatError):
            KeyFile.parse(TOY_PARAMS_TEXT.encode("ascii") + "注".encode("utf-8"))

    def test_crlf(self):
        with pytest.raises(FormatError):
            KeyFile.parse(TOY_PARAMS_TEXT.replace("\n", "\r\n"))

    def test_fingerprint(self):
        key_file = KeyFile.parse(TOY_PARAMS_TEXT)
        assert key_file.fingerprint() == hashlib.sha256(TOY_PARAMS_TEXT.encode("ascii")).hexdigest()

    def test_read_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            KeyFile.read(tmp_path / "absent.key")

    def test_write_then_read(self, tmp_path):
        path = tmp_path / "params.key"
        KeyFile.parse(TOY_PARAMS_TEXT).write(path)
        assert path.read_bytes() == TOY_PARAMS_TEXT.encode("ascii")
        assert KeyFile.read(path).params == GroupParams(p=23, q=11, g=2)


class TestCiphertextFile:
    def test_layout(self):
        assert _canonical_ct().splitlines() == [
            "SCKIT1-CT",
            "scheme schnorr-sc",
            "profile paper-compat",
            "r 40:5e8ee6c0159fac78508eb14736962dc824c94b1a",
            "s 1:4",
            "c 10:68656c6c6f",
        ]

    def test_empty_ciphertext_body(self):
        ct_file = CiphertextFile(scheme="scs1", profile="paper-compat", r=bytes(20), s=0, c=b"")
        assert "c 0:\n" in ct_file.serialize()
        assert CiphertextFile.parse(ct_file.serialize()) == ct_file

    def test_r_length_must_match_profile(self):
        with pytest.raises(FormatError):
            CiphertextFile.parse(_canonical_ct().replace("profile paper-compat", "profile modern-default"))

    def test_uppercase_hex(self):
        with pytest.raises(FormatError):
            CiphertextFile.parse(_canonical_ct().replace("68656c6c6f", "68656C6C6F"))

    def test_unknown_scheme(self):
        with pytest.raises(FormatError):
            CiphertextFile.parse(_canonical_ct().replace("schnorr-sc", "scs3"))

    def test_signcrypt_text(self):
        ct_file = CiphertextFile.parse(_canonical_ct())
        assert CiphertextFile.from_signcrypt_text(
            ct_file.signcrypt_text, SchemeId.SCHNORR_SC, "paper-compat"
        ) == ct_file

    @given(
        r=st.binary(min_size=32, max_size=32),
        s=st.integers(min_value=0, max_value=2 ** 256),
        c=st.binary(max_size=256),
        scheme=st.sampled_from([s.value for s in SchemeId]),
    )
    @settings(max_examples=1000, deadline=None)
    def test_parse_inverts_serialize(self, r, s, c, scheme):
        ct_file = CiphertextFile(scheme=scheme, profile="modern-default", r=r, s=s, c=c)
        assert CiphertextFile.parse(ct_file.serialize()) == ct_file


class TestStrictParsing:
    """规范签密文的所有单字符删除、插入与截断都必须被拒绝"""

    def test_every_deletion(self):
        text = _canonical_ct()
        for i in range(len(text)):
            with pytest.raises(FormatError):
                CiphertextFile.parse(text[:i] + text[i + 1:])

    def test_every_insertion(self):
        text = _canonical_ct()
        for i in range(len(text) + 1):
            with pytest.raises(FormatError):
                CiphertextFile.parse(text[:i] + "z" + text[i:])

    def test_every_truncation(self):
        text = _canonical_ct()
        for i in range(len(text)):
            with pytest.raises(FormatError):
                CiphertextFile.parse(text[:i])

    def test_random_bytes(self):
        rng = random.Random("fuzz-bytes")
        for _ in range(5000):
            data = rng.randbytes(rng.randrange(0, 200))
            with pytest.raises(FormatError):
                CiphertextFile.parse(data)

    def test_random_records_after_magic(self):
        rng = random.Random("fuzz-records")
        alphabet = "abcdefrsp0123456789: \n"
        for _ in range(5000):
            body = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 120)))
            with pytest.raises(FormatError):
                CiphertextFile.parse("SCKIT1-CT\n" + body)

    def test_duplicate_field(self):
        text = _canonical_ct()
        with pytest.raises(FormatError):
            CiphertextFile.parse(text + "s 1:4\n")


class TestSignatureFile:
    def test_layout(self):
        sig_file = SignatureFile(profile="modern-default", s=9, e=4)
        assert sig_file.serialize() == "SCKIT1-SIG\nprofile modern-default\ns 1:9\ne 1:4\n"
        assert SignatureFile.parse(sig_file.serialize()).signature.s == 9

    def test_wrong_magic(self):
        with pytest.raises(FormatError):
            SignatureFile.parse("SCKIT1-CT\nprofile modern-default\ns 1:9\ne 1:4\n")
