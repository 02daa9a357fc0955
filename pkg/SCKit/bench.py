"""
代价评估模块

量化各方案的计算与通信代价，并与“先签名后加密”基线对比：
- 运算计数：模幂、模乘、模逆、哈希调用次数（插桩精确计数）
- 消息扩展：无头部编码下的开销字节数
- 计时：各阶段墙钟时间的中位数与四分位距

基线 = Schnorr 签名 + 一个临时群元素的哈希 ElGamal 混合加密，
签名 (s, e) 随消息一起加密。
"""
import csv
import io
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

from ErisPulse import sdk

from .exceptions import ParameterError
from .formats import CiphertextFile
from .group_math import GroupParams, RandomSource, make_rng, mod_pow, random_scalar
from .primitives import PrimitiveProfile, derive_key_material, get_profile, sym_decrypt, sym_encrypt
from .schemes import (
    Rejected,
    SchemeId,
    SchemeLike,
    encode_binary,
    get_scheme,
    keygen_receiver,
    keygen_sender,
)
from .schnorr import SchnorrKeyPair, SchnorrSignature, schnorr_keygen, schnorr_sign, schnorr_verify
from .utils import COUNTER_KEYS, op_counting

BASELINE = "sign-then-encrypt"
MIN_TIMING_TRIALS = 10

logger = sdk.logger.get_child("Bench")


@dataclass
class PhaseCounts:
    mod_exps: float = 0.0
    mod_muls: float = 0.0
    mod_invs: float = 0.0
    hash_calls: float = 0.0


@dataclass
class OpCounts:
    """
    单个方案的平均运算计数

    Attributes:
        scheme: 方案标识（基线为 sign-then-encrypt）
        sender: 签密 / 发送阶段
        receiver: 解签密 / 接收阶段
        trials: 试验次数
        exps_constant: 各次试验的模幂次数是否完全一致
    """

    scheme: str
    sender: PhaseCounts
    receiver: PhaseCounts
    trials: int
    exps_constant: bool = True


@dataclass
class ExpansionReport:
    scheme: str
    plaintext_bytes: int
    ciphertext_total_bytes: int
    overhead_bytes: int
    baseline_overhead_bytes: int
    header_bytes: int = 0


@dataclass
class TimingRow:
    scheme: str
    phase: str
    median_ms: float
    iqr_ms: float


@dataclass
class BenchReport:
    params: GroupParams
    profile: PrimitiveProfile
    counts: List[OpCounts] = field(default_factory=list)
    expansion: List[ExpansionReport] = field(default_factory=list)
    timings: List[TimingRow] = field(default_factory=list)


@dataclass(frozen=True)
class BaselineCiphertext:
    """基线密文：临时公钥 g^y 与对称密文 E_k(s ∥ e ∥ m)"""

    ephemeral: int
    c: bytes


def baseline_overhead_bytes(params: GroupParams) -> int:
    """基线无头部开销：签名 (s, e) 各 ceil(q_bits/8) 字节 + 一个群元素 ceil(p_bits/8) 字节"""
    return 2 * params.q_bytes + params.p_bytes


def baseline_encode_binary(ct: BaselineCiphertext, params: GroupParams) -> bytes:
    return ct.ephemeral.to_bytes(params.p_bytes, "big") + ct.c


def baseline_send(
    params: GroupParams,
    profile: PrimitiveProfile,
    signer: SchnorrKeyPair,
    receiver_pub: int,
    message: bytes,
    rng: RandomSource
) -> BaselineCiphertext:
    """
    先签名后加密（3 次模幂：g^k、g^y、Y^y）

    Args:
        params: 群参数
        profile: 原语组合
        signer: 发送方 Schnorr 密钥对
        receiver_pub: 接收方公钥 g^x
        message: 消息
        rng: 随机源

    Returns:
        BaselineCiphertext: 基线密文
    """
    sig = schnorr_sign(params, signer, message, rng, profile)
    y = random_scalar(params, rng)
    ephemeral = mod_pow(params.g, y, params.p)
    key = derive_key_material(mod_pow(receiver_pub, y, params.p), profile)
    width = params.q_bytes
    payload = sig.s.to_bytes(width, "big") + sig.e.to_bytes(width, "big") + message
    return BaselineCiphertext(ephemeral=ephemeral, c=sym_encrypt(key, payload, profile))


def baseline_receive(
    params: GroupParams,
    profile: PrimitiveProfile,
    receiver: SchnorrKeyPair,
    signer_pub: int,
    ct: BaselineCiphertext
) -> Union[bytes, Rejected]:
    """
    解密后验签（3 次模幂：R^x、g^s、y^e）

    Returns:
        Union[bytes, Rejected]: 验签通过时返回消息
    """
    if receiver.x is None:
        raise ParameterError("解密需要接收方私钥")
    if not 2 <= ct.ephemeral <= params.p - 1:
        return Rejected("临时公钥越界")
    key = derive_key_material(mod_pow(ct.ephemeral, receiver.x, params.p), profile)
    payload = sym_decrypt(key, ct.c, profile)
    width = params.q_bytes
    if len(payload) < 2 * width:
        return Rejected("密文过短")
    sig = SchnorrSignature(
        s=int.from_bytes(payload[:width], "big"),
        e=int.from_bytes(payload[width:2 * width], "big"),
    )
    message = payload[2 * width:]
    if not schnorr_verify(params, signer_pub, message, sig, profile):
        return Rejected("签名无效")
    return message


def _average(tallies: List[Dict[str, int]]) -> PhaseCounts:
    return PhaseCounts(**{k: sum(t[k] for t in tallies) / len(tallies) for k in COUNTER_KEYS})


def _scheme_label(scheme: SchemeLike) -> str:
    return get_scheme(scheme).scheme_id.value


def _scheme_round(scheme: SchemeLike, params: GroupParams, profile: PrimitiveProfile, rng: RandomSource):
    """返回 (send, receive) 两个闭包，密钥在计数/计时之外生成"""
    impl = get_scheme(scheme)
    sender = keygen_sender(impl, params, rng)
    receiver = keygen_receiver(impl, params, rng)

    def send(message: bytes):
        return impl.signcrypt(params, profile, sender, receiver.y_pub, message, rng)

    def receive(ct):
        return impl.unsigncrypt(params, profile, receiver, sender.y_pub, ct)

    return send, receive


def _baseline_round(params: GroupParams, profile: PrimitiveProfile, rng: RandomSource):
    signer = schnorr_keygen(params, rng)
    receiver = schnorr_keygen(params, rng)

    def send(message: bytes):
        return baseline_send(params, profile, signer, receiver.y, message, rng)

    def receive(ct):
        return baseline_receive(params, profile, receiver, signer.y, ct)

    return send, receive


def _round_for(scheme: Union[SchemeLike, str], params, profile, rng):
    if scheme == BASELINE:
        return BASELINE, _baseline_round(params, profile, rng)
    return _scheme_label(scheme), _scheme_round(scheme, params, profile, rng)


def count_ops(
    scheme: Union[SchemeLike, str],
    params: GroupParams,
    profile: PrimitiveProfile,
    trials: int,
    rng: RandomSource,
    message: bytes = b"operation count probe"
) -> OpCounts:
    """
    插桩计数

    Args:
        scheme: 方案，或 BASELINE 表示先签名后加密基线
        params: 群参数
        profile: 原语组合
        trials: 试验次数
        rng: 随机源
        message: 使用的消息

    Returns:
        OpCounts: 各阶段平均计数（计数本身为精确值）
    """
    if trials < 1:
        raise ParameterError(f"试验次数必须 ≥ 1: {trials}")
    profile = get_profile(profile)
    label, (send, receive) = _round_for(scheme, params, profile, rng)

    sender_tallies, receiver_tallies = [], []
    for _ in range(trials):
        with op_counting() as tally:
            ct = send(message)
        sender_tallies.append(tally)
        with op_counting() as tally:
            receive(ct)
        receiver_tallies.append(tally)

    constant = (
        len({t["mod_exps"] for t in sender_tallies}) == 1
        and len({t["mod_exps"] for t in receiver_tallies}) == 1
    )
    if not constant:
        logger.warning(f"{label} 的模幂次数在各次试验间不一致")
    return OpCounts(
        scheme=label,
        sender=_average(sender_tallies),
        receiver=_average(receiver_tallies),
        trials=trials,
        exps_constant=constant,
    )


def measure_expansion(
    scheme: SchemeLike,
    params: GroupParams,
    profile: PrimitiveProfile,
    message_sizes: Sequence[int],
    rng: Optional[RandomSource] = None
) -> List[ExpansionReport]:
    """
    按实际签密文测量消息扩展

    Args:
        scheme: 方案
        params: 群参数
        profile: 原语组合
        message_sizes: 明文长度列表
        rng: 随机源（默认使用系统熵）

    Returns:
        List[ExpansionReport]: 每个明文长度一条记录；overhead_bytes 按无头部编码计算，
            header_bytes 为签密文文件相对无头部编码多出的字节数
    """
    profile = get_profile(profile)
    rng = rng or make_rng()
    impl = get_scheme(scheme)
    sender = keygen_sender(impl, params, rng)
    receiver = keygen_receiver(impl, params, rng)
    baseline = baseline_overhead_bytes(params)

    reports = []
    for size in message_sizes:
        if size < 0:
            raise ParameterError(f"消息长度不能为负: {size}")
        ct = impl.signcrypt(params, profile, sender, receiver.y_pub, rng.randbytes(size), rng)
        total = len(encode_binary(ct, params))
        ct_file = CiphertextFile.from_signcrypt_text(ct, impl.scheme_id, profile.name)
        file_bytes = len(ct_file.serialize().encode("ascii"))
        reports.append(ExpansionReport(
            scheme=impl.scheme_id.value,
            plaintext_bytes=size,
            ciphertext_total_bytes=total,
            overhead_bytes=total - size,
            baseline_overhead_bytes=baseline,
            header_bytes=file_bytes - total,
        ))
    return reports


def _summarize(label: str, phase: str, samples: List[float]) -> TimingRow:
    q1, median, q3 = statistics.quantiles(samples, n=4)
    return TimingRow(scheme=label, phase=phase, median_ms=median * 1000, iqr_ms=(q3 - q1) * 1000)


def time_schemes(
    schemes: Sequence[Union[SchemeLike, str]],
    params: GroupParams,
    profile: PrimitiveProfile,
    trials: int,
    rng: RandomSource,
    message: bytes = bytes(64),
    clock: Callable[[], float] = time.perf_counter
) -> List[TimingRow]:
    """
    各阶段计时

    Args:
        schemes: 方案列表（可包含 BASELINE）
        params: 群参数
        profile: 原语组合
        trials: 每阶段计时次数（≥ 10）
        rng: 随机源
        message: 使用的消息
        clock: 计时函数

    Returns:
        List[TimingRow]: 每个 (方案, 阶段) 一行
    """
    if trials < MIN_TIMING_TRIALS:
        raise ParameterError(f"计时次数必须 ≥ {MIN_TIMING_TRIALS}: {trials}")
    profile = get_profile(profile)
    rows = []
    for scheme in schemes:
        label, (send, receive) = _round_for(scheme, params, profile, rng)
        sender_samples, receiver_samples = [], []
        for _ in range(trials):
            start = clock()
            ct = send(message)
            sender_samples.append(clock() - start)
            start = clock()
            receive(ct)
            receiver_samples.append(clock() - start)
        rows.append(_summarize(label, "sender", sender_samples))
        rows.append(_summarize(label, "receiver", receiver_samples))
    return rows


class BenchRunner:
    """
    基准测试汇总

    负责组合运算计数、消息扩展与计时三部分，生成完整报告。
    """

    def __init__(self, config=None, logger=None):
        self.config = config
        self.logger = (logger or sdk.logger).get_child("BenchRunner")

    def run(
        self,
        params: GroupParams,
        profile: Union[str, PrimitiveProfile],
        schemes: Sequence[SchemeLike] = tuple(SchemeId),
        message_sizes: Sequence[int] = (0, 64, 1024, 4096),
        trials: int = 30,
        rng: Optional[RandomSource] = None
    ) -> BenchReport:
        profile = get_profile(profile)
        rng = rng or make_rng()
        report = BenchReport(params=params, profile=profile)
        all_schemes = list(schemes) + [BASELINE]

        for scheme in all_schemes:
            report.counts.append(count_ops(scheme, params, profile, trials, rng))
        for scheme in schemes:
            report.expansion.extend(measure_expansion(scheme, params, profile, message_sizes, rng))
        report.timings = time_schemes(all_schemes, params, profile, trials, rng)

        self.logger.info(
            f"基准测试完成: {len(all_schemes)} 个方案（含基线），每项 {trials} 次试验，原语组合 {profile.name}"
        )
        return report


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:.2f}"


def format_table(report: BenchReport) -> str:
    """对齐的纯文本报告"""
    lines = [
        f"参数: p={report.params.p.bit_length()}位 q={report.params.q.bit_length()}位 原语组合={report.profile.name}",
        "",
        "[运算计数]",
        f"{'scheme':<20}{'phase':<10}{'exps':>8}{'muls':>8}{'invs':>8}{'hashes':>8}",
    ]
    for counts in report.counts:
        for phase, phase_counts in (("sender", counts.sender), ("receiver", counts.receiver)):
            lines.append(
                f"{counts.scheme:<20}{phase:<10}{_fmt(phase_counts.mod_exps):>8}{_fmt(phase_counts.mod_muls):>8}"
                f"{_fmt(phase_counts.mod_invs):>8}{_fmt(phase_counts.hash_calls):>8}"
            )

    lines += [
        "",
        "[消息扩展]",
        f"{'scheme':<20}{'plain':>8}{'total':>8}{'overhead':>10}{'baseline':>10}{'saving':>8}{'header':>8}",
    ]
    for row in report.expansion:
        saving = 1 - row.overhead_bytes / row.baseline_overhead_bytes
        lines.append(
            f"{row.scheme:<20}{row.plaintext_bytes:>8}{row.ciphertext_total_bytes:>8}"
            f"{row.overhead_bytes:>10}{row.baseline_overhead_bytes:>10}{saving:>8.0%}{row.header_bytes:>8}"
        )

    lines += ["", "[计时]", f"{'scheme':<20}{'phase':<10}{'median_ms':>12}{'iqr_ms':>10}"]
    for row in report.timings:
        lines.append(f"{row.scheme:<20}{row.phase:<10}{row.median_ms:>12.3f}{row.iqr_ms:>10.3f}")
    return "\n".join(lines) + "\n"


def format_csv(report: BenchReport) -> str:
    """逗号分隔的机器可读报告，每行首列为记录类型"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["kind", "scheme", "phase", "mod_exps", "mod_muls", "mod_invs", "hash_calls"])
    for counts in report.counts:
        for phase, phase_counts in (("sender", counts.sender), ("receiver", counts.receiver)):
            writer.writerow(["ops", counts.scheme, phase] + [_fmt(getattr(phase_counts, k)) for k in COUNTER_KEYS])
    writer.writerow(["kind", "scheme", "plaintext_bytes", "ciphertext_total_bytes", "overhead_bytes",
                     "baseline_overhead_bytes", "header_bytes"])
    for row in report.expansion:
        writer.writerow(["expansion", row.scheme, row.plaintext_bytes, row.ciphertext_total_bytes,
                         row.overhead_bytes, row.baseline_overhead_bytes, row.header_bytes])
    writer.writerow(["kind", "scheme", "phase", "median_ms", "iqr_ms"])
    for row in report.timings:
        writer.writerow(["timing", row.scheme, row.phase, f"{row.median_ms:.6f}", f"{row.iqr_ms:.6f}"])
    return buffer.getvalue()
