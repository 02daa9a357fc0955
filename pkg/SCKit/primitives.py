"""
密码原语模块

提供所有方案共用的原语：
- 单向哈希 hash 与带密钥哈希 KH（HMAC）
- 由 Diffie-Hellman 值派生密钥材料，并拆分为 (k1, k2)
- 对称加解密 (E, D)

原语组合由 PrimitiveProfile 描述，内置三套：
- paper-compat：SHA-1 + HMAC + 十进制字符串整数编码，r 取模 p（复现示例中的摘要）
- modern-default：SHA-256 + HMAC + 大端最小字节编码，r 取模 q
- modern-aes：同 modern-default，但对称加密使用 AES-128-CTR
"""
import struct
from dataclasses import dataclass
from typing import Dict, Union

from Crypto.Cipher import AES
from Crypto.Hash import HMAC, SHA1, SHA256
from Crypto.Util.number import bytes_to_long, long_to_bytes
from Crypto.Util.strxor import strxor

from .exceptions import ParameterError
from .utils import counted

HASHES = {
    "sha1": SHA1,
    "sha256": SHA256,
}
KEYED_HASHES = ("hmac", "prefix")
# 各对称算法的固定密文扩展字节数
CIPHER_OVERHEAD = {
    "hash-ctr": 0,
    "aes-ctr": 0,
}
INT_ENCODINGS = ("decimal", "binary")
R_REDUCTIONS = ("p", "q")

MIN_DIGEST_BYTES = 16


@dataclass(frozen=True)
class PrimitiveProfile:
    """
    原语组合

    Attributes:
        name: 序列化时使用的 ASCII 标识
        hash_id: 单向哈希
        keyed_hash_id: 带密钥哈希（hmac 或字面形式 prefix = hash(k ∥ m)）
        cipher_id: 对称加密算法
        int_encoding: 哈希前的整数编码（decimal 或 binary）
        r_reduction: 签密中 r 约简所用的模数（p 或 q）
    """

    name: str
    hash_id: str
    keyed_hash_id: str = "hmac"
    cipher_id: str = "hash-ctr"
    int_encoding: str = "binary"
    r_reduction: str = "q"

    def __post_init__(self):
        if self.hash_id not in HASHES:
            raise ParameterError(f"未注册的哈希算法: {self.hash_id}")
        if self.keyed_hash_id not in KEYED_HASHES:
            raise ParameterError(f"未注册的带密钥哈希: {self.keyed_hash_id}")
        if self.cipher_id not in CIPHER_OVERHEAD:
            raise ParameterError(f"未注册的对称算法: {self.cipher_id}")
        if self.int_encoding not in INT_ENCODINGS:
            raise ParameterError(f"未知的整数编码: {self.int_encoding}")
        if self.r_reduction not in R_REDUCTIONS:
            raise ParameterError(f"未知的 r 约简模数: {self.r_reduction}")
        if self.digest_length_bytes < MIN_DIGEST_BYTES:
            raise ParameterError(f"摘要长度不足 {MIN_DIGEST_BYTES} 字节")

    @property
    def digest_length_bytes(self) -> int:
        return HASHES[self.hash_id].digest_size

    @property
    def cipher_overhead(self) -> int:
        return CIPHER_OVERHEAD[self.cipher_id]


@dataclass(frozen=True)
class KeySplit:
    """哈希后的密钥材料拆分结果：k1 作对称密钥，k2 作标签密钥"""

    k1: bytes
    k2: bytes


PROFILES: Dict[str, PrimitiveProfile] = {
    "paper-compat": PrimitiveProfile(
        name="paper-compat", hash_id="sha1", int_encoding="decimal", r_reduction="p"
    ),
    "modern-default": PrimitiveProfile(name="modern-default", hash_id="sha256"),
    "modern-aes": PrimitiveProfile(name="modern-aes", hash_id="sha256", cipher_id="aes-ctr"),
}


def get_profile(profile: Union[str, PrimitiveProfile]) -> PrimitiveProfile:
    """
    解析原语组合标识

    Args:
        profile: 标识字符串或 PrimitiveProfile 实例

    Returns:
        PrimitiveProfile: 原语组合

    Raises:
        ParameterError: 未知标识
    """
    if isinstance(profile, PrimitiveProfile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise ParameterError(f"未知的原语组合: {profile}") from None


def _digest(data: bytes, profile: PrimitiveProfile) -> bytes:
    return HASHES[profile.hash_id].new(data).digest()


def encode_int(value: int, profile: PrimitiveProfile) -> bytes:
    """
    整数的规范编码

    decimal 对应示例程序中 BigInteger.ToString() 的十进制字符串；
    binary 为大端最小字节（0 编码为单个零字节）。
    """
    if profile.int_encoding == "decimal":
        return str(value).encode("ascii")
    return long_to_bytes(value)


@counted("hash_calls")
def derive_key_material(dh_value: int, profile: PrimitiveProfile) -> bytes:
    """
    由 Diffie-Hellman 值派生密钥材料 hash(encode(dh_value))

    Args:
        dh_value: Diffie-Hellman 值
        profile: 原语组合

    Returns:
        bytes: 长度为 digest_length_bytes 的密钥材料
    """
    if dh_value < 0:
        raise ParameterError(f"Diffie-Hellman 值不能为负: {dh_value}")
    return _digest(encode_int(dh_value, profile), profile)


def split_key(k_material: bytes) -> KeySplit:
    """
    拆分密钥材料

    k1 取前 floor(n/2) 字节，k2 取其余部分（长度为奇数时 k2 多一个字节）。

    Raises:
        ParameterError: 材料不足 2 字节
    """
    if len(k_material) < 2:
        raise ParameterError("密钥材料至少需要 2 字节")
    half = len(k_material) // 2
    return KeySplit(k1=k_material[:half], k2=k_material[half:])


@counted("hash_calls")
def keyed_hash(key: bytes, message: bytes, profile: PrimitiveProfile) -> bytes:
    """
    带密钥哈希 KH_k(m)

    Args:
        key: 标签密钥
        message: 消息
        profile: 原语组合

    Returns:
        bytes: 长度为 digest_length_bytes 的标签
    """
    if profile.keyed_hash_id == "prefix":
        return _digest(key + message, profile)
    return HMAC.new(key, msg=message, digestmod=HASHES[profile.hash_id]).digest()


def tag_to_scalar(tag: bytes, reduction_modulus: int) -> int:
    """将标签按大端无符号整数解释后对 reduction_modulus 取模"""
    if reduction_modulus < 2:
        raise ParameterError(f"约简模数必须 ≥ 2: {reduction_modulus}")
    return bytes_to_long(tag) % reduction_modulus


@counted("hash_calls")
def hash_to_scalar(data: bytes, modulus: int, profile: PrimitiveProfile) -> int:
    """H : {0,1}* → Z_modulus，普通哈希后约简"""
    return tag_to_scalar(_digest(data, profile), modulus)


def _hash_keystream(key: bytes, length: int, profile: PrimitiveProfile) -> bytes:
    # 第 i 块 = hash(key ∥ i)，i 为 8 字节大端计数器
    seed = HASHES[profile.hash_id].new(key)
    blocks = []
    produced = 0
    counter = 0
    while produced < length:
        block = seed.copy()
        block.update(struct.pack(">Q", counter))
        blocks.append(block.digest())
        produced += profile.digest_length_bytes
        counter += 1
    return b"".join(blocks)[:length]


def _apply_cipher(key: bytes, data: bytes, profile: PrimitiveProfile) -> bytes:
    if not key:
        raise ParameterError("对称密钥不能为空")
    if profile.cipher_id == "aes-ctr":
        # k1 每次签密只使用一次，固定 nonce 即可
        aes_key = SHA256.new(key).digest()[:16]
        return AES.new(aes_key, AES.MODE_CTR, nonce=bytes(8)).encrypt(data)
    if not data:
        return b""
    return strxor(data, _hash_keystream(key, len(data), profile))


def sym_encrypt(key: bytes, plaintext: bytes, profile: PrimitiveProfile) -> bytes:
    """
    对称加密 E_k1(m)

    内置算法均为流式构造，密文长度等于明文长度。
    真实性由方案中的标签 r 保证，这里不做认证。
    """
    return _apply_cipher(key, plaintext, profile)


def sym_decrypt(key: bytes, ciphertext: bytes, profile: PrimitiveProfile) -> bytes:
    """对称解密 D_k1(c)，sym_encrypt 的逆运算"""
    return _apply_cipher(key, ciphertext, profile)
