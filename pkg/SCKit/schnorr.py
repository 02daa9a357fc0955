"""
Schnorr 数字签名

作为独立原语使用，同时也是基准测试中“先签名后加密”基线的签名部分。

- 密钥：私钥 x ∈ [1, q − 1]，公钥 y = g^x mod p
- 签名：r = g^k，e = H(M ∥ r) mod q，s = (k − x·e) mod q，签名为 (s, e)
- 验证：r_v = g^s · y^e，e_v = H(M ∥ r_v)，e_v = e 时通过
"""
import struct
from dataclasses import dataclass
from typing import Dict, Optional

from .exceptions import ParameterError
from .group_math import (
    GroupParams,
    RandomScalar,
    RandomSource,
    is_group_element,
    mod_mul,
    mod_pow,
    random_scalar,
)
from .primitives import PrimitiveProfile, encode_int, hash_to_scalar


@dataclass(frozen=True)
class SchnorrKeyPair:
    """Schnorr 签名密钥对；x 为 None 表示仅含公钥"""

    y: int
    x: Optional[int] = None

    def public(self) -> "SchnorrKeyPair":
        return SchnorrKeyPair(y=self.y)


@dataclass(frozen=True)
class SchnorrSignature:
    s: int
    e: int


def _challenge_input(message: bytes, r: int, profile: PrimitiveProfile) -> bytes:
    # M ∥ r 以长度前缀拼接，避免拼接歧义
    r_bytes = encode_int(r, profile)
    return struct.pack(">Q", len(message)) + message + struct.pack(">Q", len(r_bytes)) + r_bytes


def schnorr_keygen(
    params: GroupParams,
    rng: RandomSource,
    force_exponent: Optional[int] = None
) -> SchnorrKeyPair:
    """
    生成 Schnorr 签名密钥对

    Args:
        params: 群参数
        rng: 随机源
        force_exponent: 强制私钥（测试钩子）

    Returns:
        SchnorrKeyPair: 密钥对
    """
    if force_exponent is not None:
        x = RandomScalar(force_exponent, params.q)
    else:
        x = random_scalar(params, rng)
    return SchnorrKeyPair(y=mod_pow(params.g, x, params.p), x=int(x))


def schnorr_sign(
    params: GroupParams,
    keypair: SchnorrKeyPair,
    message: bytes,
    rng: RandomSource,
    profile: PrimitiveProfile,
    force_nonce: Optional[int] = None,
    trace: Optional[Dict[str, int]] = None
) -> SchnorrSignature:
    """
    Schnorr 签名

    Args:
        params: 群参数
        keypair: 含私钥的密钥对
        message: 消息
        rng: 随机源
        profile: 原语组合
        force_nonce: 强制随机数 k（测试钩子）
        trace: 可选，记录签名方的 r

    Returns:
        SchnorrSignature: 签名 (s, e)，均已约简到 [0, q)
    """
    if keypair.x is None:
        raise ParameterError("签名需要私钥")
    p, q, g = params.p, params.q, params.g
    # random_scalar 保证 k ≠ 0 mod q
    k = RandomScalar(force_nonce, q) if force_nonce is not None else random_scalar(params, rng)
    r = mod_pow(g, k, p)
    e = hash_to_scalar(_challenge_input(message, r, profile), q, profile)
    s = (k - mod_mul(keypair.x, e, q)) % q
    if trace is not None:
        trace["r"] = r
    return SchnorrSignature(s=s, e=e)


def schnorr_verify(
    params: GroupParams,
    public_y: int,
    message: bytes,
    sig: SchnorrSignature,
    profile: PrimitiveProfile,
    trace: Optional[Dict[str, int]] = None
) -> bool:
    """
    Schnorr 验证

    任何结构问题（标量越界、公钥不是群元素）都直接返回 False。

    Args:
        params: 群参数
        public_y: 公钥 y
        message: 消息
        sig: 签名
        profile: 原语组合
        trace: 可选，记录验证方重算的 r_v

    Returns:
        bool: 签名是否有效
    """
    p, q, g = params.p, params.q, params.g
    if not (0 <= sig.s < q and 0 <= sig.e < q and is_group_element(params, public_y)):
        return False
    r_v = mod_mul(mod_pow(g, sig.s, p), mod_pow(public_y, sig.e, p), p)
    if trace is not None:
        trace["r_v"] = r_v
    e_v = hash_to_scalar(_challenge_input(message, r_v, profile), q, profile)
    return e_v == sig.e
