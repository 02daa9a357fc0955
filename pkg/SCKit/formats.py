"""
文件格式模块

密钥文件、签密文文件、签名文件的规范文本序列化。

格式约定：
- 首行为魔数（SCKIT1 / SCKIT1-CT / SCKIT1-SIG），其后每行一条 "键 值"，以换行结尾
- 整数与字节串一律写为小写十六进制，并加上 "<十六进制字符数>:" 前缀，如 0x17 写作 "2:17"
- 整数不带前导零，0 写作 "1:0"；空字节串写作 "0:"
- 字段顺序固定，可选字段缺省时整行省略

解析严格：任何偏离规范形式的输入都以 FormatError 拒绝，绝不进入密码运算。
"""
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Type, TypeVar, Union

from Crypto.Hash import SHA256

from .exceptions import FormatError, ParameterError
from .group_math import GroupParams
from .primitives import get_profile
from .schemes import PartyKeys, SchemeId, SigncryptText, get_scheme
from .schnorr import SchnorrKeyPair, SchnorrSignature

KEY_MAGIC = "SCKIT1"
CT_MAGIC = "SCKIT1-CT"
SIG_MAGIC = "SCKIT1-SIG"

ROLE_PARAMS = "params"
ROLE_SENDER = "sender"
ROLE_RECEIVER = "receiver"
ROLE_SCHNORR = "schnorr"
ROLES = (ROLE_PARAMS, ROLE_SENDER, ROLE_RECEIVER, ROLE_SCHNORR)
SCHNORR_SIG_SCHEME = "schnorr-sig"

_PREFIXED = re.compile(r"(0|[1-9][0-9]*):([0-9a-f]*)")

T = TypeVar("T")


def encode_hex_int(value: int) -> str:
    if value < 0:
        raise ParameterError(f"不能序列化负整数: {value}")
    digits = format(value, "x")
    return f"{len(digits)}:{digits}"


def encode_hex_bytes(data: bytes) -> str:
    digits = data.hex()
    return f"{len(digits)}:{digits}"


def _prefixed_digits(value: str, name: str) -> str:
    match = _PREFIXED.fullmatch(value)
    if match is None:
        raise FormatError(f"字段 {name} 不是长度前缀的十六进制: {value[:32]!r}")
    if int(match.group(1)) != len(match.group(2)):
        raise FormatError(f"字段 {name} 的长度前缀与内容不符")
    return match.group(2)


def decode_hex_int(value: str, name: str) -> int:
    digits = _prefixed_digits(value, name)
    if not digits or (len(digits) > 1 and digits[0] == "0"):
        raise FormatError(f"字段 {name} 不是规范整数编码")
    return int(digits, 16)


def decode_hex_bytes(value: str, name: str) -> bytes:
    digits = _prefixed_digits(value, name)
    if len(digits) % 2:
        raise FormatError(f"字段 {name} 的十六进制长度为奇数")
    return bytes.fromhex(digits)


def _render(magic: str, records: List[Tuple[str, str]]) -> str:
    return "\n".join([magic] + [f"{key} {value}" for key, value in records]) + "\n"


def _read_records(text: str, magic: str) -> Dict[str, str]:
    if not text.endswith("\n"):
        raise FormatError("文件必须以换行结尾")
    lines = text[:-1].split("\n")
    if lines[0] != magic:
        raise FormatError(f"魔数应为 {magic}")
    records: Dict[str, str] = {}
    for line in lines[1:]:
        key, sep, value = line.partition(" ")
        if not sep or not key:
            raise FormatError(f"无法解析的行: {line[:32]!r}")
        if key in records:
            raise FormatError(f"重复字段: {key}")
        records[key] = value
    return records


def _take(records: Dict[str, str], key: str) -> str:
    try:
        return records.pop(key)
    except KeyError:
        raise FormatError(f"缺少字段: {key}") from None


def _check_profile(token: str) -> str:
    try:
        return get_profile(token).name
    except ParameterError as e:
        raise FormatError(str(e)) from None


def _finish(obj: T, records: Dict[str, str], text: str) -> T:
    if records:
        raise FormatError(f"未知字段: {', '.join(records)}")
    if obj.serialize() != text:
        raise FormatError("文件不是规范形式")
    return obj


def _decode_text(data: Union[bytes, str]) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("ascii")
    except UnicodeDecodeError:
        raise FormatError("文件包含非 ASCII 字节") from None


class _TextFile:
    def serialize(self) -> str:
        raise NotImplementedError

    @classmethod
    def parse(cls: Type[T], text: Union[str, bytes]) -> T:
        raise NotImplementedError

    def fingerprint(self) -> str:
        """规范序列化的 SHA-256 指纹"""
        return SHA256.new(self.serialize().encode("ascii")).hexdigest()

    def write(self, path: Union[str, Path]) -> None:
        Path(path).write_bytes(self.serialize().encode("ascii"))

    @classmethod
    def read(cls: Type[T], path: Union[str, Path]) -> T:
        try:
            data = Path(path).read_bytes()
        except OSError as e:
            raise FormatError(f"无法读取 {path}: {e}") from None
        return cls.parse(data)


@dataclass(frozen=True)
class KeyFile(_TextFile):
    """
    密钥文件

    role 为 params 时只含群参数（无 scheme、public、private 行）；
    公钥文件省略 private 行。
    """

    role: str
    profile: str
    params: GroupParams
    scheme: Optional[str] = None
    public: Optional[int] = None
    private: Optional[int] = None

    def serialize(self) -> str:
        records = [("role", self.role)]
        if self.scheme is not None:
            records.append(("scheme", self.scheme))
        records += [
            ("profile", self.profile),
            ("p", encode_hex_int(self.params.p)),
            ("q", encode_hex_int(self.params.q)),
            ("g", encode_hex_int(self.params.g)),
        ]
        if self.public is not None:
            records.append(("public", encode_hex_int(self.public)))
        if self.private is not None:
            records.append(("private", encode_hex_int(self.private)))
        return _render(KEY_MAGIC, records)

    @classmethod
    def parse(cls, text):
        text = _decode_text(text)
        records = _read_records(text, KEY_MAGIC)
        role = _take(records, "role")
        if role not in ROLES:
            raise FormatError(f"未知角色: {role}")
        scheme = None
        if role != ROLE_PARAMS:
            scheme = _take(records, "scheme")
            expected = {SCHNORR_SIG_SCHEME} if role == ROLE_SCHNORR else {s.value for s in SchemeId}
            if scheme not in expected:
                raise FormatError(f"角色 {role} 不接受方案 {scheme}")
        profile = _check_profile(_take(records, "profile"))
        params = GroupParams(
            p=decode_hex_int(_take(records, "p"), "p"),
            q=decode_hex_int(_take(records, "q"), "q"),
            g=decode_hex_int(_take(records, "g"), "g"),
        )
        public = private = None
        if role != ROLE_PARAMS:
            public = decode_hex_int(_take(records, "public"), "public")
            if "private" in records:
                private = decode_hex_int(_take(records, "private"), "private")
        key_file = cls(role=role, profile=profile, params=params, scheme=scheme, public=public, private=private)
        return _finish(key_file, records, text)

    @property
    def has_private(self) -> bool:
        return self.private is not None

    def public_only(self) -> "KeyFile":
        return KeyFile(role=self.role, profile=self.profile, params=self.params,
                       scheme=self.scheme, public=self.public)

    def to_party_keys(self) -> PartyKeys:
        if self.role not in (ROLE_SENDER, ROLE_RECEIVER):
            raise FormatError(f"角色为 {self.role} 的文件不是签密密钥")
        return PartyKeys(
            role=self.role,
            y_pub=self.public,
            convention=get_scheme(self.scheme).convention,
            x_priv=self.private,
        )

    def to_schnorr_keypair(self) -> SchnorrKeyPair:
        if self.role != ROLE_SCHNORR:
            raise FormatError(f"角色为 {self.role} 的文件不是签名密钥")
        return SchnorrKeyPair(y=self.public, x=self.private)

    @classmethod
    def for_params(cls, params: GroupParams, profile: str) -> "KeyFile":
        return cls(role=ROLE_PARAMS, profile=profile, params=params)

    @classmethod
    def for_party(cls, keys: PartyKeys, scheme: SchemeId, params: GroupParams, profile: str) -> "KeyFile":
        return cls(role=keys.role, profile=profile, params=params, scheme=scheme.value,
                   public=keys.y_pub, private=keys.x_priv)

    @classmethod
    def for_schnorr(cls, keypair: SchnorrKeyPair, params: GroupParams, profile: str) -> "KeyFile":
        return cls(role=ROLE_SCHNORR, profile=profile, params=params, scheme=SCHNORR_SIG_SCHEME,
                   public=keypair.y, private=keypair.x)


@dataclass(frozen=True)
class CiphertextFile(_TextFile):
    """签密文文件，即传输的 (r, s, c)"""

    scheme: str
    profile: str
    r: bytes
    s: int
    c: bytes

    def serialize(self) -> str:
        return _render(CT_MAGIC, [
            ("scheme", self.scheme),
            ("profile", self.profile),
            ("r", encode_hex_bytes(self.r)),
            ("s", encode_hex_int(self.s)),
            ("c", encode_hex_bytes(self.c)),
        ])

    @classmethod
    def parse(cls, text):
        text = _decode_text(text)
        records = _read_records(text, CT_MAGIC)
        scheme = _take(records, "scheme")
        if scheme not in {s.value for s in SchemeId}:
            raise FormatError(f"未知的签密方案: {scheme}")
        profile = _check_profile(_take(records, "profile"))
        r = decode_hex_bytes(_take(records, "r"), "r")
        if len(r) != get_profile(profile).digest_length_bytes:
            raise FormatError(f"r 长度与原语组合 {profile} 不符")
        ct_file = cls(
            scheme=scheme,
            profile=profile,
            r=r,
            s=decode_hex_int(_take(records, "s"), "s"),
            c=decode_hex_bytes(_take(records, "c"), "c"),
        )
        return _finish(ct_file, records, text)

    @property
    def signcrypt_text(self) -> SigncryptText:
        return SigncryptText(r=self.r, s=self.s, c=self.c)

    @classmethod
    def from_signcrypt_text(cls, ct: SigncryptText, scheme: SchemeId, profile: str) -> "CiphertextFile":
        return cls(scheme=scheme.value, profile=profile, r=ct.r, s=ct.s, c=ct.c)


@dataclass(frozen=True)
class SignatureFile(_TextFile):
    """Schnorr 签名文件 (s, e)"""

    profile: str
    s: int
    e: int

    def serialize(self) -> str:
        return _render(SIG_MAGIC, [
            ("profile", self.profile),
            ("s", encode_hex_int(self.s)),
            ("e", encode_hex_int(self.e)),
        ])

    @classmethod
    def parse(cls, text):
        text = _decode_text(text)
        records = _read_records(text, SIG_MAGIC)
        sig_file = cls(
            profile=_check_profile(_take(records, "profile")),
            s=decode_hex_int(_take(records, "s"), "s"),
            e=decode_hex_int(_take(records, "e"), "e"),
        )
        return _finish(sig_file, records, text)

    @property
    def signature(self) -> SchnorrSignature:
        return SchnorrSignature(s=self.s, e=self.e)
