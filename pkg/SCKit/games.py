"""
安全模型模块

可执行的保密性游戏与伪造探测：
- 两用户 / 多用户设置，外部人 / 内部人位置
- 两阶段敌手接口（stage1 给出 (m0, m1)，stage2 输出猜测位）
- 预言机封装：查询预算、公钥固定或成员校验、第二阶段禁止 (pkS, C*) 查询
- 内置敌手：null、restriction-tester、sabotage-exploiter
- 外部人真实性探测、内部人不可否认性探测

敌手只能通过 PublicView 与 OracleHandles 接触挑战者，二者都不持有任何私钥。
"""
import random
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Type, Union

from Crypto.Hash import SHA256
from ErisPulse import sdk

from .exceptions import MalformedSigncryptTextError, OracleError, ParameterError
from .group_math import GroupParams, RandomSource, generate_params, is_group_element, make_rng
from .primitives import (
    KeySplit,
    PrimitiveProfile,
    derive_key_material,
    get_profile,
    split_key,
    sym_decrypt,
    sym_encrypt,
    tag_to_scalar,
)
from .schemes import (
    PartyKeys,
    Rejected,
    SchemeId,
    SigncryptText,
    SigncryptionScheme,
    check_keys,
    get_scheme,
    keygen_receiver,
    keygen_sender,
    reduction_modulus,
)
from .utils import derive_seed

DEFAULT_QUERY_BUDGET = 256

logger = sdk.logger.get_child("Games")


class Setting(Enum):
    TWO_USER = "two-user"
    MULTI_USER = "multi-user"


class Position(Enum):
    OUTSIDER = "outsider"
    INSIDER = "insider"


@dataclass(frozen=True)
class GameConfig:
    """
    游戏配置

    Attributes:
        scheme: 被测方案
        setting: 两用户或多用户
        adversary_position: 外部人或内部人
        query_budget: 每阶段的预言机查询上限
        profile: 原语组合
        p_bits / q_bits: 未给定 params 时 Setup 使用的位长
        params: 固定群参数（给定时 Setup 直接复用）
        sabotaged: 使用 k1 全零的故障方案
    """

    scheme: SchemeId
    setting: Setting = Setting.TWO_USER
    adversary_position: Position = Position.OUTSIDER
    query_budget: int = DEFAULT_QUERY_BUDGET
    profile: Union[str, PrimitiveProfile] = "modern-default"
    p_bits: int = 64
    q_bits: int = 32
    params: Optional[GroupParams] = None
    sabotaged: bool = False

    def __post_init__(self):
        if self.query_budget < 0:
            raise ParameterError(f"查询预算不能为负: {self.query_budget}")


@dataclass(frozen=True)
class QueryRecord:
    tag: str
    digest: str


@dataclass
class GameTranscript:
    queries: List[QueryRecord] = field(default_factory=list)
    challenge_bit: int = 0
    guess: Optional[int] = None
    win: bool = False
    forbidden_query_attempts: int = 0
    fault: Optional[str] = None

    def to_lines(self) -> List[str]:
        """导出为逐行结构化文本"""
        lines = [f"QUERY {q.tag} {q.digest}" for q in self.queries]
        if self.fault is not None:
            lines.append(f"FAULT {self.fault}")
        guess = "-" if self.guess is None else str(self.guess)
        lines.append(f"RESULT b={self.challenge_bit} guess={guess} win={int(self.win)}")
        return lines


@dataclass(frozen=True)
class PublicView:
    """
    敌手可见的公开输入

    sender_pub 在内部人模型下为 None（发送方密钥由敌手给出）。
    """

    scheme: SchemeId
    setting: Setting
    position: Position
    params: GroupParams
    profile: PrimitiveProfile
    receiver_pub: int
    sender_pub: Optional[int]
    query_budget: int


@dataclass
class ChallengeRequest:
    """stage1 的输出：等长消息对、敌手状态，以及内部人模型下被攻击的发送方密钥对"""

    m0: bytes
    m1: bytes
    state: Any = None
    sender_keys: Optional[PartyKeys] = None


def _query_digest(*parts: bytes) -> str:
    h = SHA256.new()
    for part in parts:
        h.update(len(part).to_bytes(8, "big"))
        h.update(part)
    return h.hexdigest()


def _int_part(value: int) -> bytes:
    return str(value).encode("ascii")


class OracleHandles:
    """
    交给敌手的预言机句柄

    签密与解签密都经由私有闭包完成，句柄本身不保存密钥。
    """

    def __init__(
        self,
        signcrypt_fn: Optional[Callable[[int, bytes], SigncryptText]],
        unsigncrypt_fn: Callable[[int, SigncryptText], Union[bytes, Rejected]],
        params: GroupParams,
        setting: Setting,
        budget: int,
        pinned_receiver: int,
        pinned_sender: Optional[int]
    ):
        self._signcrypt_fn = signcrypt_fn
        self._unsigncrypt_fn = unsigncrypt_fn
        self._params = params
        self._setting = setting
        self._budget = budget
        self._pinned_receiver = pinned_receiver
        self._pinned_sender = pinned_sender
        self._used = 0
        self._challenge: Optional[tuple] = None
        self._records: List[QueryRecord] = []
        self._forbidden = 0
        self._stage = 1

    @property
    def stage(self) -> int:
        return self._stage

    @property
    def remaining(self) -> int:
        return self._budget - self._used

    def _spend(self) -> None:
        if self._used >= self._budget:
            raise OracleError(f"第 {self._stage} 阶段查询预算 {self._budget} 已用尽")
        self._used += 1

    def _key_allowed(self, key: int, pinned: Optional[int]) -> Optional[str]:
        if self._setting is Setting.TWO_USER and pinned is not None:
            return None if key == pinned else "两用户设置下只接受固定公钥"
        if not is_group_element(self._params, key):
            return "公钥不是群元素"
        return None

    def signcrypt(self, receiver_pub: int, message: bytes) -> Union[SigncryptText, Rejected]:
        """
        发送方签密预言机

        Raises:
            OracleError: 内部人模型下不可用，或预算耗尽
        """
        if self._signcrypt_fn is None:
            raise OracleError("内部人模型不提供签密预言机")
        self._spend()
        self._records.append(QueryRecord("signcrypt", _query_digest(_int_part(receiver_pub), message)))
        problem = self._key_allowed(receiver_pub, self._pinned_receiver)
        if problem:
            return Rejected(problem)
        return self._signcrypt_fn(receiver_pub, message)

    def unsigncrypt(self, sender_pub: int, ct: SigncryptText) -> Union[bytes, Rejected]:
        """
        接收方解签密预言机

        第二阶段对 (pkS, C*) 的查询被拦截：不消耗预算、不到达预言机，计入违规次数。

        Raises:
            OracleError: 预算耗尽
        """
        digest = _query_digest(_int_part(sender_pub), ct.r, _int_part(ct.s), ct.c)
        if self._challenge is not None and self._challenge == (sender_pub, ct):
            self._forbidden += 1
            self._records.append(QueryRecord("unsigncrypt-blocked", digest))
            logger.debug("已拦截对挑战密文的解签密查询")
            return Rejected("禁止查询挑战密文")
        self._spend()
        self._records.append(QueryRecord("unsigncrypt", digest))
        problem = self._key_allowed(sender_pub, self._pinned_sender)
        if problem:
            return Rejected(problem)
        try:
            return self._unsigncrypt_fn(sender_pub, ct)
        except MalformedSigncryptTextError as e:
            return Rejected(f"签密文格式错误: {e}")

    def _enter_stage2(self, challenge_sender: int, challenge: SigncryptText) -> None:
        self._stage = 2
        self._used = 0
        self._challenge = (challenge_sender, challenge)


class Adversary(ABC):
    """
    两阶段敌手 A = (A1, A2)

    stage1 收到公开输入与预言机句柄，返回 ChallengeRequest；
    stage2 收到挑战密文、自身状态与预言机句柄，返回猜测位。
    """

    name = "adversary"

    @staticmethod
    def insider_keys(view: PublicView, rng: RandomSource) -> Optional[PartyKeys]:
        """内部人模型下生成被攻击的发送方密钥对"""
        if view.position is not Position.INSIDER:
            return None
        return keygen_sender(view.scheme, view.params, rng)

    @abstractmethod
    def stage1(self, view: PublicView, oracles: OracleHandles, rng: RandomSource) -> ChallengeRequest:
        ...

    @abstractmethod
    def stage2(self, challenge: SigncryptText, state: Any, oracles: OracleHandles, rng: RandomSource) -> int:
        ...


class NullAdversary(Adversary):
    """不查询，随机猜测"""

    name = "null"

    def stage1(self, view, oracles, rng):
        return ChallengeRequest(m0=bytes(16), m1=b"\xff" * 16, sender_keys=self.insider_keys(view, rng))

    def stage2(self, challenge, state, oracles, rng):
        return rng.getrandbits(1)


class RestrictionTester(Adversary):
    """
    第二阶段把挑战密文原样提交给解签密预言机（应被拦截），
    再换用另一个发送方公钥提交同一密文（不在限制范围内）
    """

    name = "restriction-tester"

    def stage1(self, view, oracles, rng):
        keys = self.insider_keys(view, rng)
        sender_pub = keys.y_pub if keys is not None else view.sender_pub
        return ChallengeRequest(
            m0=b"restriction-m0",
            m1=b"restriction-m1",
            state={"sender_pub": sender_pub, "view": view},
            sender_keys=keys,
        )

    def stage2(self, challenge, state, oracles, rng):
        oracles.unsigncrypt(state["sender_pub"], challenge)
        view = state["view"]
        other = keygen_sender(view.scheme, view.params, rng).y_pub
        if oracles.remaining > 0:
            oracles.unsigncrypt(other, challenge)
        return rng.getrandbits(1)


class SabotageExploiter(Adversary):
    """针对 k1 全零的故障方案：直接用全零密钥解密 c 并比较"""

    name = "sabotage-exploiter"

    def stage1(self, view, oracles, rng):
        return ChallengeRequest(
            m0=bytes(16),
            m1=b"\xff" * 16,
            state={"profile": view.profile, "m1": b"\xff" * 16},
            sender_keys=self.insider_keys(view, rng),
        )

    def stage2(self, challenge, state, oracles, rng):
        profile = state["profile"]
        zero_key = bytes(profile.digest_length_bytes // 2)
        return int(sym_decrypt(zero_key, challenge.c, profile) == state["m1"])


ADVERSARIES: Dict[str, Type[Adversary]] = {
    NullAdversary.name: NullAdversary,
    RestrictionTester.name: RestrictionTester,
    SabotageExploiter.name: SabotageExploiter,
}


def get_adversary(name: str) -> Adversary:
    try:
        return ADVERSARIES[name]()
    except KeyError:
        raise ParameterError(f"未注册的敌手: {name}") from None


class SabotagedScheme(SigncryptionScheme):
    """故障方案：k1 被置为全零字节，其余与原方案一致"""

    def __init__(self, inner: SigncryptionScheme):
        self.inner = inner
        self.validate = inner.validate
        self.scheme_id = inner.scheme_id
        self.convention = inner.convention

    def public_key(self, params, x_priv):
        return self.inner.public_key(params, x_priv)

    def compute_s(self, params, x, r_int, x_priv):
        return self.inner.compute_s(params, x, r_int, x_priv)

    def recover_dh(self, params, s, r_int, sender_pub, receiver_priv):
        return self.inner.recover_dh(params, s, r_int, sender_pub, receiver_priv)

    def split(self, k_material: bytes) -> KeySplit:
        keys = split_key(k_material)
        return KeySplit(k1=bytes(len(keys.k1)), k2=keys.k2)


def _resolve(config: GameConfig, rng: RandomSource):
    impl = get_scheme(config.scheme)
    if config.sabotaged:
        impl = SabotagedScheme(impl)
    profile = get_profile(config.profile)
    params = config.params or generate_params(config.p_bits, config.q_bits, rng)
    return impl, profile, params


def run_confidentiality_game(config: GameConfig, adversary: Adversary, rng: RandomSource) -> GameTranscript:
    """
    执行一次保密性游戏

    Setup、密钥生成 → stage1 预言机阶段 → 构造挑战 → stage2 预言机阶段 → 记录猜测。
    敌手抛出的任何异常、消息不等长、内部人密钥不合法都记为故障并判负。

    Args:
        config: 游戏配置
        adversary: 敌手
        rng: 随机源（决定整局游戏，固定种子可完全复现）

    Returns:
        GameTranscript: 游戏记录
    """
    impl, profile, params = _resolve(config, rng)
    insider = config.adversary_position is Position.INSIDER
    receiver = keygen_receiver(impl, params, rng)
    sender = None if insider else keygen_sender(impl, params, rng)
    adversary_rng = random.Random(rng.getrandbits(64))

    def signcrypt_oracle(receiver_pub: int, message: bytes) -> SigncryptText:
        return impl.signcrypt(params, profile, sender, receiver_pub, message, rng)

    def unsigncrypt_oracle(sender_pub: int, ct: SigncryptText) -> Union[bytes, Rejected]:
        return impl.unsigncrypt(params, profile, receiver, sender_pub, ct)

    oracles = OracleHandles(
        signcrypt_fn=None if insider else signcrypt_oracle,
        unsigncrypt_fn=unsigncrypt_oracle,
        params=params,
        setting=config.setting,
        budget=config.query_budget,
        pinned_receiver=receiver.y_pub,
        pinned_sender=None if insider else sender.y_pub,
    )
    view = PublicView(
        scheme=impl.scheme_id,
        setting=config.setting,
        position=config.adversary_position,
        params=params,
        profile=profile,
        receiver_pub=receiver.y_pub,
        sender_pub=None if insider else sender.y_pub,
        query_budget=config.query_budget,
    )
    transcript = GameTranscript(queries=oracles._records)

    try:
        request = adversary.stage1(view, oracles, adversary_rng)
        if len(request.m0) != len(request.m1):
            raise ParameterError("m0 与 m1 长度不一致")
        if insider:
            keys = request.sender_keys
            if keys is None or keys.x_priv is None or not check_keys(impl, params, keys):
                raise ParameterError("内部人敌手给出的发送方密钥对不合法")
            sender = keys
        transcript.challenge_bit = rng.getrandbits(1)
        message = request.m1 if transcript.challenge_bit else request.m0
        challenge = impl.signcrypt(params, profile, sender, receiver.y_pub, message, rng)
        oracles._enter_stage2(sender.y_pub, challenge)
        guess = adversary.stage2(challenge, request.state, oracles, adversary_rng)
        if guess not in (0, 1):
            raise ParameterError(f"猜测位必须为 0 或 1: {guess!r}")
        transcript.guess = int(guess)
        transcript.win = transcript.guess == transcript.challenge_bit
    except Exception as e:
        logger.warning(f"敌手 {adversary.name} 出现故障，本局判负: {e}")
        transcript.fault = f"{type(e).__name__}: {e}"
        transcript.win = False

    transcript.forbidden_query_attempts = oracles._forbidden
    return transcript


@dataclass
class GameStats:
    runs: int = 0
    wins: int = 0
    faults: int = 0
    total_queries: int = 0
    forbidden_query_attempts: int = 0

    @property
    def win_rate(self) -> float:
        return self.wins / self.runs if self.runs else 0.0

    def add(self, transcript: GameTranscript) -> None:
        self.runs += 1
        self.wins += int(transcript.win)
        self.faults += int(transcript.fault is not None)
        self.total_queries += len(transcript.queries)
        self.forbidden_query_attempts += transcript.forbidden_query_attempts


def _run_single(config: GameConfig, adversary_name: str, seed: Optional[str]) -> GameTranscript:
    return run_confidentiality_game(config, get_adversary(adversary_name), make_rng(seed))


class GameRunner:
    """
    批量运行保密性游戏

    每局使用由主种子按计数器派生的子种子，局间无共享状态，可并行执行。
    """

    def __init__(self, config=None, logger=None):
        self.config = config
        self.logger = (logger or sdk.logger).get_child("GameRunner")

    def run_many(
        self,
        config: GameConfig,
        adversary_name: str,
        runs: int,
        seed: Union[int, str, None] = None,
        workers: int = 1,
        transcripts: Optional[List[GameTranscript]] = None
    ) -> GameStats:
        """
        运行多局游戏并汇总

        Args:
            config: 游戏配置（未给定 params 时统一生成一次）
            adversary_name: 敌手名称
            runs: 局数
            seed: 主种子；None 时使用系统熵
            workers: 并行进程数
            transcripts: 可选，收集每局记录

        Returns:
            GameStats: 汇总统计
        """
        if runs < 1:
            raise ParameterError(f"局数必须 ≥ 1: {runs}")
        if workers < 1:
            raise ParameterError(f"并行数必须 ≥ 1: {workers}")
        get_adversary(adversary_name)
        if config.params is None:
            params = generate_params(config.p_bits, config.q_bits, make_rng(derive_seed(seed, "params")))
            config = replace(config, params=params)

        seeds = [derive_seed(seed, index) for index in range(runs)]
        if workers == 1:
            results = [_run_single(config, adversary_name, s) for s in seeds]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_single, [config] * runs, [adversary_name] * runs, seeds))

        stats = GameStats()
        for transcript in results:
            stats.add(transcript)
            if transcripts is not None:
                transcripts.append(transcript)
        self.logger.info(
            f"游戏完成: 方案={config.scheme.value} 敌手={adversary_name} 局数={stats.runs} "
            f"胜率={stats.win_rate:.4f} 违规查询={stats.forbidden_query_attempts} 故障={stats.faults}"
        )
        return stats


@dataclass
class ForgeryStats:
    trials: int = 0
    accepts: int = 0
    random_candidates: int = 0
    mutation_candidates: int = 0
    replay_accepted: Optional[bool] = None


def _flip_bit(ct: SigncryptText, params: GroupParams, rng: RandomSource) -> SigncryptText:
    fields = ["r", "s"] + (["c"] if ct.c else [])
    target = rng.choice(fields)
    if target == "s":
        return replace(ct, s=ct.s ^ (1 << rng.randrange(params.q.bit_length())))
    data = bytearray(getattr(ct, target))
    data[rng.randrange(len(data))] ^= 1 << rng.randrange(8)
    return replace(ct, **{target: bytes(data)})


def _accepted(result) -> bool:
    return not isinstance(result, Rejected)


def _probe_setup(config: GameConfig, rng: RandomSource):
    impl, profile, params = _resolve(config, rng)
    sender = keygen_sender(impl, params, rng)
    receiver = keygen_receiver(impl, params, rng)
    return impl, profile, params, sender, receiver


def _try_unsigncrypt(impl, params, profile, receiver, sender_pub, ct) -> bool:
    try:
        return _accepted(impl.unsigncrypt(params, profile, receiver, sender_pub, ct))
    except MalformedSigncryptTextError:
        return False


def run_outsider_authenticity_probe(config: GameConfig, rng: RandomSource, trials: int) -> ForgeryStats:
    """
    外部人真实性探测

    伪造者只持有公钥，可以让发送方签密任意消息。候选一半为随机三元组，
    一半为诚实签密文的单比特变异（排除原样重放），统计被接受次数。

    Args:
        config: 游戏配置（只使用方案、原语组合与群参数）
        rng: 随机源
        trials: 候选数量

    Returns:
        ForgeryStats: 统计；replay_accepted 记录原样重放是否被接受
    """
    if trials < 1:
        raise ParameterError(f"试验次数必须 ≥ 1: {trials}")
    impl, profile, params, sender, receiver = _probe_setup(config, rng)
    honest = [
        impl.signcrypt(params, profile, sender, receiver.y_pub, rng.randbytes(rng.randrange(1, 33)), rng)
        for _ in range(8)
    ]
    honest_set = set(honest)
    stats = ForgeryStats(trials=trials)
    stats.replay_accepted = _try_unsigncrypt(impl, params, profile, receiver, sender.y_pub, honest[0])

    for index in range(trials):
        if index % 2 == 0:
            candidate = SigncryptText(
                r=rng.randbytes(profile.digest_length_bytes),
                s=rng.randrange(params.q),
                c=rng.randbytes(rng.randrange(0, 33)),
            )
            stats.random_candidates += 1
        else:
            candidate = _flip_bit(rng.choice(honest), params, rng)
            stats.mutation_candidates += 1
        if candidate in honest_set:
            continue
        if _try_unsigncrypt(impl, params, profile, receiver, sender.y_pub, candidate):
            stats.accepts += 1

    logger.info(f"外部人真实性探测: {trials} 次候选，接受 {stats.accepts} 次")
    return stats


def run_insider_nonrepudiation_probe(
    config: GameConfig,
    rng: RandomSource,
    trials: int,
    use_sender_key: bool = False
) -> ForgeryStats:
    """
    内部人不可否认性探测

    伪造者持有接收方私钥，针对从未签密过的新消息构造候选：
    - 随机选取 (r, s)，用 skR 恢复出对应密钥并加密新消息
    - 截取一份诚实签密文，用 skR 解出密钥后把 c 换成新消息的密文

    use_sender_key 为真时伪造者改用真实的发送方私钥（对照组，应全部接受）。

    Args:
        config: 游戏配置（只使用方案、原语组合与群参数）
        rng: 随机源
        trials: 候选数量
        use_sender_key: 是否使用发送方私钥

    Returns:
        ForgeryStats: 统计
    """
    if trials < 1:
        raise ParameterError(f"试验次数必须 ≥ 1: {trials}")
    impl, profile, params, sender, receiver = _probe_setup(config, rng)
    modulus = reduction_modulus(params, profile)
    signed = {b"insider-probe-honest"}
    honest = impl.signcrypt(params, profile, sender, receiver.y_pub, b"insider-probe-honest", rng)
    stats = ForgeryStats(trials=trials)

    def receiver_keys(r: bytes, s: int) -> KeySplit:
        dh = impl.recover_dh(params, s, tag_to_scalar(r, modulus), sender.y_pub, receiver.x_priv)
        return impl.split(derive_key_material(dh, profile))

    for index in range(trials):
        message = rng.randbytes(16)
        if message in signed:
            continue
        if use_sender_key:
            candidate = impl.signcrypt(params, profile, sender, receiver.y_pub, message, rng)
            stats.random_candidates += 1
        elif index % 2 == 0:
            r = rng.randbytes(profile.digest_length_bytes)
            s = rng.randrange(params.q)
            candidate = SigncryptText(r=r, s=s, c=sym_encrypt(receiver_keys(r, s).k1, message, profile))
            stats.random_candidates += 1
        else:
            k1 = receiver_keys(honest.r, honest.s).k1
            candidate = replace(honest, c=sym_encrypt(k1, message, profile))
            stats.mutation_candidates += 1
        if _try_unsigncrypt(impl, params, profile, receiver, sender.y_pub, candidate):
            stats.accepts += 1

    logger.info(f"内部人不可否认性探测: {trials} 次候选，接受 {stats.accepts} 次")
    return stats
