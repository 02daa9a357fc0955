"""
群运算模块

负责：
- 任意精度模运算（模幂、模乘、模逆、负指数幂）
- Schnorr 群参数 (p, q, g) 的生成与校验
- 所有方案共用的随机源约定

随机源统一为 random.Random 接口：测试时传入带种子的实例，
命令行默认使用 random.SystemRandom（操作系统熵）。
"""
import random
from dataclasses import dataclass, field
from typing import List, Optional, Union

from Crypto.Util.number import isPrime
from ErisPulse import sdk

from .exceptions import GenerationError, NotInvertibleError, ParameterError
from .utils import counted, describe_params

RandomSource = random.Random

# 桌面规模下限：允许 (23, 11, 2) 这类示例参数出现在测试中，生成时 p 至少 16 位
MIN_P_BITS = 16
DEFAULT_CANDIDATE_BUDGET = 10_000
# 2^-80 对应 pycryptodome 内部 40 轮 Miller-Rabin
PRIMALITY_FALSE_POSITIVE = 2.0 ** -80

logger = sdk.logger.get_child("GroupMath")


@dataclass(frozen=True)
class GroupParams:
    """
    公共群参数

    q 阶子群由 p、q、g 定义：p、q 为素数，q | p − 1，g 的阶为 q。
    构造时不做校验，需要时调用 validate_params。
    """

    p: int
    q: int
    g: int

    @property
    def bit_length(self) -> int:
        return self.p.bit_length()

    @property
    def q_bytes(self) -> int:
        """q 的定长字节数 ceil(q_bits / 8)"""
        return (self.q.bit_length() + 7) // 8

    @property
    def p_bytes(self) -> int:
        return (self.p.bit_length() + 7) // 8


class RandomScalar(int):
    """取值在 [1, q − 1] 内的标量（长期私钥和一次性随机数 x 都用它表示）"""

    def __new__(cls, value: int, q: int):
        if not 1 <= value <= q - 1:
            raise ParameterError(f"标量超出范围 [1, {q - 1}]: {value}")
        return super().__new__(cls, value)


@dataclass
class ValidationReport:
    """参数校验报告，列出所有被违反的约束"""

    violations: List[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


def make_rng(seed: Union[int, str, None] = None) -> RandomSource:
    """
    获取随机源

    Args:
        seed: 种子；None 时使用操作系统熵

    Returns:
        RandomSource: 随机源
    """
    if seed is None:
        return random.SystemRandom()
    return random.Random(seed)


def _check_modulus(modulus: int) -> None:
    if modulus < 2:
        raise ParameterError(f"模数必须 ≥ 2: {modulus}")


@counted("mod_exps")
def mod_pow(base: int, exponent: int, modulus: int) -> int:
    """
    模幂 base^exponent mod modulus

    Raises:
        ParameterError: 模数 < 2 或指数为负
    """
    _check_modulus(modulus)
    if exponent < 0:
        raise ParameterError(f"指数不能为负: {exponent}，负指数请使用 neg_pow")
    return pow(base, exponent, modulus)


@counted("mod_muls")
def mod_mul(a: int, b: int, modulus: int) -> int:
    """模乘 a·b mod modulus"""
    _check_modulus(modulus)
    return (a * b) % modulus


@counted("mod_invs")
def mod_inverse(a: int, modulus: int) -> int:
    """
    模逆

    Args:
        a: 待求逆元素
        modulus: 模数

    Returns:
        int: a⁻¹，位于 [1, modulus − 1]

    Raises:
        NotInvertibleError: gcd(a, modulus) ≠ 1，由调用方决定是否重采样
    """
    _check_modulus(modulus)
    try:
        return pow(a, -1, modulus)
    except ValueError:
        raise NotInvertibleError(f"{a} 在模 {modulus} 下不可逆") from None


def in_subgroup(params: GroupParams, element: int) -> bool:
    """element 是否属于 q 阶子群（含单位元 1）"""
    return 1 <= element <= params.p - 1 and pow(element, params.q, params.p) == 1


def is_group_element(params: GroupParams, element: int) -> bool:
    """
    公钥成员校验：2 ≤ element ≤ p − 1 且 element^q ≡ 1 (mod p)

    Args:
        params: 群参数
        element: 待校验的公钥

    Returns:
        bool: 是否为合法公钥
    """
    return 2 <= element <= params.p - 1 and pow(element, params.q, params.p) == 1


@counted("mod_exps")
def neg_pow(params: GroupParams, base: int, exponent: int, validate: bool = False) -> int:
    """
    负指数幂 base^(−exponent) mod p

    按 base^(q − exponent) mod p 计算，避免求逆；validate 为真时
    校验底数属于子群，并与求逆路径交叉核对。

    Args:
        params: 群参数
        base: 底数（应位于 q 阶子群中）
        exponent: 指数，0 ≤ exponent < q
        validate: 是否启用校验模式

    Returns:
        int: base^(−exponent) mod p

    Raises:
        ParameterError: 指数越界；校验模式下底数不在子群中或两条路径结果不一致
    """
    p, q = params.p, params.q
    if not 0 <= exponent < q:
        raise ParameterError(f"指数必须位于 [0, {q - 1}]: {exponent}")
    result = pow(base, (q - exponent) % q, p)
    if validate:
        if not in_subgroup(params, base):
            raise ParameterError(f"底数 {base} 不在 q 阶子群中")
        cross_check = pow(pow(base, exponent, p), -1, p)
        if cross_check != result:
            raise ParameterError("负指数幂两条计算路径结果不一致")
    return result


def _is_probable_prime(candidate: int, rng: Optional[RandomSource] = None) -> bool:
    randfunc = rng.randbytes if rng is not None else None
    return bool(isPrime(candidate, false_positive_prob=PRIMALITY_FALSE_POSITIVE, randfunc=randfunc))


def generate_params(
    bit_length: int,
    q_bit_length: int,
    rng: RandomSource,
    candidate_budget: int = DEFAULT_CANDIDATE_BUDGET
) -> GroupParams:
    """
    生成 Schnorr 群参数

    先取 q_bit_length 位随机素数 q，再搜索 p = k·q + 1（k 为偶数）使 p 为
    bit_length 位素数，最后取 g = h^((p−1)/q) mod p ≠ 1。

    Args:
        bit_length: p 的位长（≥ 16）
        q_bit_length: q 的位长（< bit_length）
        rng: 随机源
        candidate_budget: 素性测试候选总数上限

    Returns:
        GroupParams: 合法的群参数

    Raises:
        ParameterError: 位长不合法
        GenerationError: 候选预算耗尽仍未找到素数
    """
    if bit_length < MIN_P_BITS:
        raise ParameterError(f"p 的位长不能低于 {MIN_P_BITS}: {bit_length}")
    if not 2 <= q_bit_length < bit_length:
        raise ParameterError(f"q 的位长必须位于 [2, {bit_length - 1}]: {q_bit_length}")

    low = 1 << (bit_length - 1)
    high = (1 << bit_length) - 1
    p_attempts_per_q = 4 * bit_length
    candidates = 0

    while candidates < candidate_budget:
        q = rng.getrandbits(q_bit_length) | (1 << (q_bit_length - 1)) | 1
        candidates += 1
        if not _is_probable_prime(q, rng):
            continue

        # p = k·q + 1 ∈ [low, high]，k 取偶数保证 p 为奇数
        k_lo = (low - 1 + q - 1) // q
        k_hi = (high - 1) // q
        k_half_lo, k_half_hi = (k_lo + 1) // 2, k_hi // 2
        if k_half_lo > k_half_hi:
            continue

        for _ in range(p_attempts_per_q):
            if candidates >= candidate_budget:
                break
            k = 2 * rng.randint(k_half_lo, k_half_hi)
            p = k * q + 1
            candidates += 1
            if p < low or not _is_probable_prime(p, rng):
                continue

            exponent = (p - 1) // q
            while True:
                g = pow(rng.randint(2, p - 2), exponent, p)
                if g != 1:
                    break
            params = GroupParams(p=p, q=q, g=g)
            logger.info(f"群参数生成完成: {describe_params(params)}，共测试 {candidates} 个候选")
            return params

    raise GenerationError(f"在 {candidate_budget} 个候选内未找到满足条件的素数")


def validate_params(candidate: GroupParams) -> ValidationReport:
    """
    校验群参数

    检查 p、q 的素性（误判概率 < 2^-80）、q | p − 1、1 < g < p 以及 g 的阶为 q。

    Args:
        candidate: 待校验参数

    Returns:
        ValidationReport: 列出所有被违反的约束
    """
    p, q, g = candidate.p, candidate.q, candidate.g
    report = ValidationReport()

    if not _is_probable_prime(p):
        report.violations.append("p 不是素数")
    if not _is_probable_prime(q):
        report.violations.append("q 不是素数")
    if q == 0 or (p - 1) % q != 0:
        report.violations.append("q 不整除 p − 1")
    if g == 1:
        report.violations.append("g = 1")
    if not 1 < g < p:
        report.violations.append("g 不在 (1, p) 范围内")
    elif p >= 2 and q >= 0 and pow(g, q, p) != 1:
        report.violations.append("g 的阶不是 q")

    if report.violations:
        logger.debug(f"参数校验未通过: {'; '.join(report.violations)}")
    return report


def random_scalar(params: GroupParams, rng: RandomSource) -> RandomScalar:
    """
    在 [1, q − 1] 上均匀采样（拒绝采样，无取模偏差）

    Args:
        params: 群参数
        rng: 随机源

    Returns:
        RandomScalar: 随机标量
    """
    q = params.q
    bits = (q - 1).bit_length()
    while True:
        value = rng.getrandbits(bits)
        if 1 <= value <= q - 1:
            return RandomScalar(value, q)
