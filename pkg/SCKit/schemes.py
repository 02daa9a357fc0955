"""
签密方案模块

五算法接口（Setup、KeyGenS、KeyGenR、Signcrypt、Unsigncrypt）及三种实现：
- SCS1：基于 SDSS1，s = x/(r + Xa) mod q
- SCS2：基于 SDSS2，s = x/(1 + Xa·r) mod q
- SCHNORR_SC：基于 Schnorr 签名，s = x + r·Xa mod q

密钥约定：SCS1/SCS2 使用正指数 Y = g^X，SCHNORR_SC 使用负指数 Y = g^(−X)，
两种约定的密钥不可混用。
"""
import hmac
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Tuple, Union

from ErisPulse import sdk

from .exceptions import (
    MalformedSigncryptTextError,
    NotInvertibleError,
    ParameterError,
    RetryBudgetExceededError,
)
from .group_math import (
    DEFAULT_CANDIDATE_BUDGET,
    GroupParams,
    RandomScalar,
    RandomSource,
    generate_params,
    mod_inverse,
    mod_mul,
    mod_pow,
    neg_pow,
    random_scalar,
)
from .primitives import (
    KeySplit,
    PrimitiveProfile,
    derive_key_material,
    get_profile,
    keyed_hash,
    split_key,
    sym_decrypt,
    sym_encrypt,
    tag_to_scalar,
)

DEFAULT_RETRY_BUDGET = 64

logger = sdk.logger.get_child("Schemes")


class SchemeId(Enum):
    SCS1 = "scs1"
    SCS2 = "scs2"
    SCHNORR_SC = "schnorr-sc"

    @classmethod
    def from_token(cls, token: str) -> "SchemeId":
        """
        由序列化标识解析方案

        Raises:
            ParameterError: 未知标识
        """
        try:
            return cls(token)
        except ValueError:
            raise ParameterError(f"未知的签密方案: {token}") from None


class Convention(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class PartyKeys:
    """
    发送方/接收方密钥

    Attributes:
        role: sender 或 receiver
        y_pub: 公钥
        convention: 指数符号约定
        x_priv: 私钥（仅公钥时为 None）
    """

    role: str
    y_pub: int
    convention: Convention
    x_priv: Optional[int] = None

    def public(self) -> "PartyKeys":
        return PartyKeys(role=self.role, y_pub=self.y_pub, convention=self.convention)


SenderKeys = PartyKeys
ReceiverKeys = PartyKeys


@dataclass(frozen=True)
class SigncryptText:
    """传输的三元组 (r, s, c)：完整标签、签名标量、对称密文"""

    r: bytes
    s: int
    c: bytes


@dataclass(frozen=True)
class Rejected:
    """解签密失败符号 ⊥"""

    reason: str = "标签不匹配"


def reduction_modulus(params: GroupParams, profile: PrimitiveProfile) -> int:
    """r 的约简模数：paper-compat 取 p，其余取 q"""
    return params.p if profile.r_reduction == "p" else params.q


class SigncryptionScheme:
    """
    签密方案基类

    子类只需给出 s 的计算公式（compute_s）和接收方恢复 Diffie-Hellman 值的
    公式（recover_dh），签密/解签密流程在基类中统一实现。
    """

    scheme_id: SchemeId
    convention: Convention = Convention.POSITIVE

    def __init__(self, validate: bool = False):
        # 校验模式：负指数幂附带子群成员检查与交叉核对
        self.validate = validate

    def public_key(self, params: GroupParams, x_priv: int) -> int:
        if self.convention is Convention.NEGATIVE:
            return neg_pow(params, params.g, x_priv, self.validate)
        return mod_pow(params.g, x_priv, params.p)

    def compute_s(self, params: GroupParams, x: int, r_int: int, x_priv: int) -> int:
        raise NotImplementedError

    def recover_dh(
        self,
        params: GroupParams,
        s: int,
        r_int: int,
        sender_pub: int,
        receiver_priv: int
    ) -> int:
        raise NotImplementedError

    def split(self, k_material: bytes) -> KeySplit:
        return split_key(k_material)

    def _check_convention(self, keys: PartyKeys) -> None:
        if keys.convention is not self.convention:
            raise ParameterError(
                f"{self.scheme_id.value} 需要 {self.convention.value} 约定的密钥，"
                f"实际为 {keys.convention.value}"
            )

    def signcrypt(
        self,
        params: GroupParams,
        profile: PrimitiveProfile,
        sender: PartyKeys,
        receiver_pub: int,
        message: bytes,
        rng: RandomSource,
        retry_budget: int = DEFAULT_RETRY_BUDGET,
        force_nonce: Optional[int] = None,
        trace: Optional[Dict[str, int]] = None
    ) -> SigncryptText:
        """
        签密

        Args:
            params: 群参数
            profile: 原语组合
            sender: 发送方密钥（需含私钥）
            receiver_pub: 接收方公钥
            message: 消息（可为空）
            rng: 随机源
            retry_budget: 除数不可逆时的重采样上限
            force_nonce: 强制一次性随机数 x（测试钩子，禁用重采样）
            trace: 可选，记录 dh、r_int、attempts

        Returns:
            SigncryptText: (r, s, c)

        Raises:
            ParameterError: 密钥约定不符或接收方公钥越界
            NotInvertibleError: 强制随机数导致除数不可逆
            RetryBudgetExceededError: 重采样次数耗尽
        """
        if sender.x_priv is None:
            raise ParameterError("签密需要发送方私钥")
        self._check_convention(sender)
        if not 2 <= receiver_pub <= params.p - 1:
            raise ParameterError("接收方公钥不在 [2, p − 1] 范围内")

        p, q = params.p, params.q
        modulus = reduction_modulus(params, profile)
        attempts = 1 if force_nonce is not None else retry_budget
        for attempt in range(1, attempts + 1):
            if force_nonce is not None:
                x = RandomScalar(force_nonce, q)
            else:
                x = random_scalar(params, rng)
            dh = mod_pow(receiver_pub, x, p)
            keys = self.split(derive_key_material(dh, profile))
            tag = keyed_hash(keys.k2, message, profile)
            r_int = tag_to_scalar(tag, modulus)
            try:
                s = self.compute_s(params, x, r_int, sender.x_priv)
            except NotInvertibleError:
                if force_nonce is not None:
                    raise
                logger.debug(f"{self.scheme_id.value} 除数不可逆，重采样随机数（第 {attempt} 次）")
                if attempt == max(1, retry_budget // 2):
                    logger.warning(f"{self.scheme_id.value} 重采样已用去 {attempt}/{retry_budget} 次")
                continue
            if trace is not None:
                trace.update(dh=dh, r_int=r_int, attempts=attempt)
            return SigncryptText(r=tag, s=s, c=sym_encrypt(keys.k1, message, profile))

        raise RetryBudgetExceededError(f"{self.scheme_id.value} 重采样 {retry_budget} 次仍失败")

    def unsigncrypt(
        self,
        params: GroupParams,
        profile: PrimitiveProfile,
        receiver: PartyKeys,
        sender_pub: int,
        ct: SigncryptText,
        trace: Optional[Dict[str, int]] = None
    ) -> Union[bytes, Rejected]:
        """
        解签密

        Args:
            params: 群参数
            profile: 原语组合
            receiver: 接收方密钥（需含私钥）
            sender_pub: 发送方公钥
            ct: 签密文
            trace: 可选，记录恢复出的 dh

        Returns:
            Union[bytes, Rejected]: 标签校验通过时返回消息，否则返回 Rejected

        Raises:
            MalformedSigncryptTextError: s ≥ q 或 r 长度不符（与 ⊥ 区分）
            ParameterError: 密钥不合法
        """
        if receiver.x_priv is None:
            raise ParameterError("解签密需要接收方私钥")
        self._check_convention(receiver)
        if not 0 <= ct.s < params.q:
            raise MalformedSigncryptTextError("s 必须位于 [0, q)")
        if len(ct.r) != profile.digest_length_bytes:
            raise MalformedSigncryptTextError(
                f"r 长度应为 {profile.digest_length_bytes} 字节，实际 {len(ct.r)} 字节"
            )
        if not 2 <= sender_pub <= params.p - 1:
            raise ParameterError("发送方公钥不在 [2, p − 1] 范围内")

        r_int = tag_to_scalar(ct.r, reduction_modulus(params, profile))
        dh = self.recover_dh(params, ct.s, r_int, sender_pub, receiver.x_priv)
        if trace is not None:
            trace["dh"] = dh
        keys = self.split(derive_key_material(dh, profile))
        message = sym_decrypt(keys.k1, ct.c, profile)
        if not hmac.compare_digest(keyed_hash(keys.k2, message, profile), ct.r):
            logger.debug(f"{self.scheme_id.value} 解签密拒绝：标签不匹配")
            return Rejected()
        return message


class SCS1Scheme(SigncryptionScheme):
    scheme_id = SchemeId.SCS1

    def compute_s(self, params, x, r_int, x_priv):
        q = params.q
        return mod_mul(x, mod_inverse((r_int + x_priv) % q, q), q)

    def recover_dh(self, params, s, r_int, sender_pub, receiver_priv):
        p, q = params.p, params.q
        base = mod_mul(sender_pub, mod_pow(params.g, r_int, p), p)
        return mod_pow(base, mod_mul(s, receiver_priv, q), p)


class SCS2Scheme(SigncryptionScheme):
    scheme_id = SchemeId.SCS2

    def compute_s(self, params, x, r_int, x_priv):
        q = params.q
        return mod_mul(x, mod_inverse((1 + mod_mul(x_priv, r_int, q)) % q, q), q)

    def recover_dh(self, params, s, r_int, sender_pub, receiver_priv):
        p, q = params.p, params.q
        base = mod_mul(params.g, mod_pow(sender_pub, r_int, p), p)
        return mod_pow(base, mod_mul(s, receiver_priv, q), p)


class SchnorrSigncryption(SigncryptionScheme):
    scheme_id = SchemeId.SCHNORR_SC
    convention = Convention.NEGATIVE

    def compute_s(self, params, x, r_int, x_priv):
        q = params.q
        return (x + mod_mul(r_int, x_priv, q)) % q

    def recover_dh(self, params, s, r_int, sender_pub, receiver_priv):
        p = params.p
        # (g^s · Ya^r)^(−Xb) = g^(−x·Xb) = Yb^x
        base = mod_mul(mod_pow(params.g, s, p), mod_pow(sender_pub, r_int, p), p)
        return neg_pow(params, base, receiver_priv, self.validate)


SCHEMES: Dict[SchemeId, SigncryptionScheme] = {
    SchemeId.SCS1: SCS1Scheme(),
    SchemeId.SCS2: SCS2Scheme(),
    SchemeId.SCHNORR_SC: SchnorrSigncryption(),
}

SchemeLike = Union[SchemeId, str, SigncryptionScheme]


def get_scheme(scheme: SchemeLike, validate: bool = False) -> SigncryptionScheme:
    """
    获取方案实现

    Args:
        scheme: 方案标识、标识字符串或实现对象（实现对象原样返回）
        validate: 是否返回校验模式下的新实例

    Returns:
        SigncryptionScheme: 方案实现
    """
    if isinstance(scheme, SigncryptionScheme):
        return scheme
    if isinstance(scheme, str):
        scheme = SchemeId.from_token(scheme)
    if validate:
        return type(SCHEMES[scheme])(validate=True)
    return SCHEMES[scheme]


def setup(
    bit_length: int,
    q_bit_length: int,
    profile: Union[str, PrimitiveProfile],
    rng: RandomSource,
    candidate_budget: int = DEFAULT_CANDIDATE_BUDGET
) -> Tuple[GroupParams, PrimitiveProfile]:
    """
    Setup：生成公共参数 param = (GroupParams, PrimitiveProfile)

    Raises:
        ParameterError: 位长不合法或原语组合未知
        GenerationError: 参数生成失败
    """
    resolved = get_profile(profile)
    return generate_params(bit_length, q_bit_length, rng, candidate_budget), resolved


def keygen(
    scheme: SchemeLike,
    params: GroupParams,
    rng: RandomSource,
    role: str,
    force_exponent: Optional[int] = None
) -> PartyKeys:
    """
    按方案约定生成密钥

    Args:
        scheme: 方案
        params: 群参数
        rng: 随机源
        role: sender 或 receiver
        force_exponent: 强制私钥（测试钩子）

    Returns:
        PartyKeys: 密钥
    """
    impl = get_scheme(scheme)
    if force_exponent is not None:
        x = RandomScalar(force_exponent, params.q)
    else:
        x = random_scalar(params, rng)
    return PartyKeys(
        role=role,
        y_pub=impl.public_key(params, x),
        convention=impl.convention,
        x_priv=int(x),
    )


def keygen_sender(scheme: SchemeLike, params: GroupParams, rng: RandomSource,
                  force_exponent: Optional[int] = None) -> PartyKeys:
    """KeyGenS"""
    return keygen(scheme, params, rng, "sender", force_exponent)


def keygen_receiver(scheme: SchemeLike, params: GroupParams, rng: RandomSource,
                    force_exponent: Optional[int] = None) -> PartyKeys:
    """KeyGenR"""
    return keygen(scheme, params, rng, "receiver", force_exponent)


def check_keys(scheme: SchemeLike, params: GroupParams, keys: PartyKeys) -> bool:
    """
    校验密钥是否符合方案约定

    Args:
        scheme: 方案
        params: 群参数
        keys: 密钥（含私钥时同时校验 y 与 x 的对应关系）

    Returns:
        bool: 是否一致
    """
    impl = get_scheme(scheme)
    if keys.convention is not impl.convention:
        return False
    if not 2 <= keys.y_pub <= params.p - 1:
        return False
    if keys.x_priv is None:
        return pow(keys.y_pub, params.q, params.p) == 1
    if not 1 <= keys.x_priv <= params.q - 1:
        return False
    return impl.public_key(params, keys.x_priv) == keys.y_pub


def signcrypt(
    scheme: SchemeLike,
    params: GroupParams,
    profile: PrimitiveProfile,
    sender: PartyKeys,
    receiver_pub: int,
    message: bytes,
    rng: RandomSource,
    **kwargs
) -> SigncryptText:
    """Signcrypt，参数与 SigncryptionScheme.signcrypt 相同"""
    return get_scheme(scheme).signcrypt(params, profile, sender, receiver_pub, message, rng, **kwargs)


def unsigncrypt(
    scheme: SchemeLike,
    params: GroupParams,
    profile: PrimitiveProfile,
    receiver: PartyKeys,
    sender_pub: int,
    ct: SigncryptText,
    **kwargs
) -> Union[bytes, Rejected]:
    """Unsigncrypt，参数与 SigncryptionScheme.unsigncrypt 相同"""
    return get_scheme(scheme).unsigncrypt(params, profile, receiver, sender_pub, ct, **kwargs)


def overhead_bytes(params: GroupParams, profile: PrimitiveProfile) -> int:
    """无头部通信开销 |hash| + |q|"""
    return profile.digest_length_bytes + params.q_bytes + profile.cipher_overhead


def encode_binary(ct: SigncryptText, params: GroupParams) -> bytes:
    """无头部规范二进制编码：r ∥ s（定长 ceil(q_bits/8) 字节大端）∥ c"""
    return ct.r + ct.s.to_bytes(params.q_bytes, "big") + ct.c
