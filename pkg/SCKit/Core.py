"""
SCKit 主模块

文件级操作的统一入口，命令行与 ErisPulse 模块加载共用：
- 参数与密钥生成
- 签密 / 解签密文件
- Schnorr 签名 / 验证文件
- 安全游戏、伪造探测与基准测试

所有文件内容问题在进入密码运算前转换为 FormatError。
"""
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from ErisPulse import sdk
from ErisPulse.Core.Bases import BaseModule

from .bench import BenchReport, BenchRunner
from .config import SCKitConfig
from .exceptions import FormatError, ParameterError, TestHookDisabledError
from .formats import (
    ROLE_RECEIVER,
    ROLE_SCHNORR,
    ROLE_SENDER,
    CiphertextFile,
    KeyFile,
    SignatureFile,
)
from .games import (
    ForgeryStats,
    GameConfig,
    GameRunner,
    GameStats,
    GameTranscript,
    Position,
    Setting,
    run_insider_nonrepudiation_probe,
    run_outsider_authenticity_probe,
)
from .group_math import GroupParams, is_group_element, make_rng, validate_params
from .primitives import get_profile
from .schemes import Rejected, SchemeId, check_keys, get_scheme, keygen, overhead_bytes, setup
from .schnorr import schnorr_keygen, schnorr_sign, schnorr_verify
from .utils import describe_params, preview_hex

Seed = Union[int, str, None]

PROBES = {
    "outsider": run_outsider_authenticity_probe,
    "insider": run_insider_nonrepudiation_probe,
}


class Main(BaseModule):
    """
    SCKit 签密工具包主类

    核心功能：
    - 三种签密方案（SCS1、SCS2、SCHNORR_SC）的文件级签密与解签密
    - Schnorr 签名
    - 保密性游戏与代价评估
    """

    def __init__(self, config: Optional[SCKitConfig] = None):
        self.sdk = sdk
        self.logger = sdk.logger.get_child("SCKit")
        self.config = config or SCKitConfig()
        self.game_runner = GameRunner(self.config, self.logger)
        self.bench_runner = BenchRunner(self.config, self.logger)
        self.commands = None  # 在 on_load 中初始化
        self._check_config()

    @staticmethod
    def should_eager_load() -> bool:
        return False

    async def on_load(self, event: Dict[str, Any]) -> bool:
        """
        模块加载时调用，注册 /sckit 消息命令

        Args:
            event: 加载事件

        Returns:
            bool: 是否加载成功
        """
        from .commands import SCKitCommands

        try:
            self.commands = SCKitCommands(self.config, self.sdk.logger, self)
            self.commands.register_events()
            self.logger.info("SCKit 模块已加载")
            return True
        except Exception as e:
            self.logger.error(f"SCKit 模块加载失败: {e}")
            return False

    async def on_unload(self, event: Dict[str, Any]) -> bool:
        self.logger.info("SCKit 模块已卸载")
        return True

    def _check_config(self) -> None:
        """检查配置，对需要注意的组合给出提示"""
        profile = self.config.get("profile")
        try:
            get_profile(profile)
        except ParameterError:
            self.logger.error(f"配置中的原语组合 {profile} 未注册")
            return
        if profile == "paper-compat":
            self.logger.warning("当前使用 paper-compat 原语组合（SHA-1），仅用于复现示例")
        if self.config.test_hooks:
            self.logger.warning("测试钩子已启用：--force-exponent / --force-nonce 可用")

    def _require_hooks(self, **forced: Optional[int]) -> None:
        used = [name for name, value in forced.items() if value is not None]
        if used and not self.config.test_hooks:
            raise TestHookDisabledError(f"测试钩子未启用，不能使用 {', '.join(used)}")

    @property
    def validation_mode(self) -> bool:
        return bool(self.config.get("validation_mode", False))

    # ==================== 文件加载 ====================

    @staticmethod
    def _read_input(path: Union[str, Path]) -> bytes:
        try:
            return Path(path).read_bytes()
        except OSError as e:
            raise FormatError(f"无法读取 {path}: {e}") from None

    @staticmethod
    def _check_params(params: GroupParams, source: Union[str, Path]) -> None:
        report = validate_params(params)
        if not report.valid:
            raise FormatError(f"{source} 中的群参数不合法: {'; '.join(report.violations)}")

    def load_params(self, path: Union[str, Path]) -> KeyFile:
        key_file = KeyFile.read(path)
        self._check_params(key_file.params, path)
        return key_file

    def load_key(self, path: Union[str, Path], roles: Sequence[str], need_private: bool) -> KeyFile:
        """
        读取并校验密钥文件

        Args:
            path: 文件路径
            roles: 允许的角色
            need_private: 是否必须含私钥

        Returns:
            KeyFile: 密钥文件

        Raises:
            FormatError: 文件格式、角色、参数或密钥不合法
        """
        key_file = self.load_params(path)
        if key_file.role not in roles:
            raise FormatError(f"{path} 的角色为 {key_file.role}，期望 {'/'.join(roles)}")
        if need_private and not key_file.has_private:
            raise FormatError(f"{path} 不含私钥")
        params = key_file.params
        if not is_group_element(params, key_file.public):
            raise FormatError(f"{path} 中的公钥不是群元素")
        if key_file.has_private:
            if key_file.role == ROLE_SCHNORR:
                valid = 1 <= key_file.private < params.q and pow(params.g, key_file.private, params.p) == key_file.public
            else:
                valid = check_keys(key_file.scheme, params, key_file.to_party_keys())
            if not valid:
                raise FormatError(f"{path} 中的公私钥不匹配")
        return key_file

    @staticmethod
    def _check_pair(first: KeyFile, second: KeyFile, scheme: Optional[str] = None) -> None:
        if first.params != second.params:
            raise FormatError("两个密钥文件的群参数不一致")
        if first.scheme != second.scheme:
            raise FormatError(f"两个密钥文件的方案不一致: {first.scheme} / {second.scheme}")
        if first.profile != second.profile:
            raise FormatError(f"两个密钥文件的原语组合不一致: {first.profile} / {second.profile}")
        if scheme is not None and scheme != first.scheme:
            raise FormatError(f"密钥文件方案为 {first.scheme}，与指定的 {scheme} 不符")

    # ==================== 参数与密钥 ====================

    def paramgen(
        self,
        output: Union[str, Path],
        p_bits: Optional[int] = None,
        q_bits: Optional[int] = None,
        seed: Seed = None,
        profile: Optional[str] = None
    ) -> KeyFile:
        """
        生成群参数并写入参数文件

        Returns:
            KeyFile: 参数文件（role = params）

        Raises:
            ParameterError: 位长或原语组合不合法
            GenerationError: 参数生成失败
        """
        p_bits = self.config.get("params.p_bits") if p_bits is None else p_bits
        q_bits = self.config.get("params.q_bits") if q_bits is None else q_bits
        profile = get_profile(profile or self.config.get("profile")).name
        params, _ = setup(p_bits, q_bits, profile, make_rng(seed), self.config.get("params.candidate_budget"))
        key_file = KeyFile.for_params(params, profile)
        key_file.write(output)
        self.logger.info(f"参数文件已写入 {output}: {describe_params(params)}")
        return key_file

    def keygen(
        self,
        role: str,
        params_path: Union[str, Path],
        private_out: Union[str, Path],
        public_out: Union[str, Path],
        scheme: Optional[str] = None,
        seed: Seed = None,
        force_exponent: Optional[int] = None
    ) -> KeyFile:
        """
        生成密钥对，写入私钥文件与公钥文件

        Args:
            role: sender、receiver 或 schnorr
            params_path: 参数文件
            private_out: 私钥文件输出路径
            public_out: 公钥文件输出路径
            scheme: 签密方案（role 为 schnorr 时忽略）
            seed: 种子
            force_exponent: 强制私钥（测试钩子）

        Returns:
            KeyFile: 私钥文件
        """
        self._require_hooks(force_exponent=force_exponent)
        source = self.load_params(params_path)
        params, profile = source.params, source.profile
        rng = make_rng(seed)
        if role == ROLE_SCHNORR:
            key_file = KeyFile.for_schnorr(schnorr_keygen(params, rng, force_exponent), params, profile)
        elif role in (ROLE_SENDER, ROLE_RECEIVER):
            if scheme is None:
                raise ParameterError("签密密钥需要指定方案")
            scheme_id = SchemeId.from_token(scheme)
            keys = keygen(get_scheme(scheme_id, self.validation_mode), params, rng, role, force_exponent)
            key_file = KeyFile.for_party(keys, scheme_id, params, profile)
        else:
            raise ParameterError(f"未知角色: {role}")

        key_file.write(private_out)
        key_file.public_only().write(public_out)
        self.logger.info(f"{role} 密钥已生成: 私钥 {private_out}，公钥 {public_out}")
        return key_file

    # ==================== 签密 ====================

    def signcrypt(
        self,
        sender_key_path: Union[str, Path],
        receiver_pub_path: Union[str, Path],
        input_path: Union[str, Path],
        output_path: Union[str, Path],
        scheme: Optional[str] = None,
        seed: Seed = None,
        force_nonce: Optional[int] = None
    ) -> CiphertextFile:
        """
        签密文件

        Raises:
            FormatError: 文件不合法，或两个密钥文件的参数/方案不一致
            RetryBudgetExceededError: SCS1/SCS2 重采样次数耗尽
        """
        self._require_hooks(force_nonce=force_nonce)
        sender_file = self.load_key(sender_key_path, (ROLE_SENDER,), need_private=True)
        receiver_file = self.load_key(receiver_pub_path, (ROLE_RECEIVER,), need_private=False)
        self._check_pair(sender_file, receiver_file, scheme)

        scheme_id = SchemeId.from_token(sender_file.scheme)
        message = self._read_input(input_path)
        ct = get_scheme(scheme_id, self.validation_mode).signcrypt(
            sender_file.params,
            get_profile(sender_file.profile),
            sender_file.to_party_keys(),
            receiver_file.public,
            message,
            make_rng(seed),
            retry_budget=self.config.get("signcrypt.retry_budget"),
            force_nonce=force_nonce,
        )
        ct_file = CiphertextFile.from_signcrypt_text(ct, scheme_id, sender_file.profile)
        ct_file.write(output_path)
        self.logger.info(
            f"签密完成: {scheme_id.value} 明文 {len(message)} 字节，r={preview_hex(ct.r, 8)}，"
            f"开销 {overhead_bytes(sender_file.params, get_profile(sender_file.profile))} 字节"
        )
        return ct_file

    def unsigncrypt(
        self,
        receiver_key_path: Union[str, Path],
        sender_pub_path: Union[str, Path],
        input_path: Union[str, Path],
        output_path: Union[str, Path],
        scheme: Optional[str] = None
    ) -> Union[bytes, Rejected]:
        """
        解签密文件，仅在接受时写出明文

        Returns:
            Union[bytes, Rejected]: 明文或 Rejected

        Raises:
            FormatError: 文件不合法或与密钥不一致
            MalformedSigncryptTextError: s ≥ q
        """
        receiver_file = self.load_key(receiver_key_path, (ROLE_RECEIVER,), need_private=True)
        sender_file = self.load_key(sender_pub_path, (ROLE_SENDER,), need_private=False)
        self._check_pair(receiver_file, sender_file, scheme)
        ct_file = CiphertextFile.read(input_path)
        if ct_file.scheme != receiver_file.scheme or ct_file.profile != receiver_file.profile:
            raise FormatError("签密文的方案或原语组合与密钥文件不一致")

        result = get_scheme(ct_file.scheme, self.validation_mode).unsigncrypt(
            receiver_file.params,
            get_profile(ct_file.profile),
            receiver_file.to_party_keys(),
            sender_file.public,
            ct_file.signcrypt_text,
        )
        if isinstance(result, Rejected):
            self.logger.warning(f"解签密被拒绝: {result.reason}")
            return result
        Path(output_path).write_bytes(result)
        self.logger.info(f"解签密完成: 明文 {len(result)} 字节已写入 {output_path}")
        return result

    # ==================== 签名 ====================

    def sign(
        self,
        key_path: Union[str, Path],
        input_path: Union[str, Path],
        signature_path: Union[str, Path],
        seed: Seed = None,
        force_nonce: Optional[int] = None
    ) -> SignatureFile:
        self._require_hooks(force_nonce=force_nonce)
        key_file = self.load_key(key_path, (ROLE_SCHNORR,), need_private=True)
        profile = get_profile(key_file.profile)
        sig = schnorr_sign(
            key_file.params, key_file.to_schnorr_keypair(), self._read_input(input_path),
            make_rng(seed), profile, force_nonce=force_nonce,
        )
        sig_file = SignatureFile(profile=profile.name, s=sig.s, e=sig.e)
        sig_file.write(signature_path)
        self.logger.info(f"签名已写入 {signature_path}")
        return sig_file

    def verify(
        self,
        public_path: Union[str, Path],
        input_path: Union[str, Path],
        signature_path: Union[str, Path]
    ) -> bool:
        key_file = self.load_key(public_path, (ROLE_SCHNORR,), need_private=False)
        sig_file = SignatureFile.read(signature_path)
        if sig_file.profile != key_file.profile:
            raise FormatError("签名文件与公钥文件的原语组合不一致")
        valid = schnorr_verify(
            key_file.params, key_file.public, self._read_input(input_path),
            sig_file.signature, get_profile(key_file.profile),
        )
        self.logger.info(f"签名验证{'通过' if valid else '失败'}")
        return valid

    # ==================== 游戏与基准 ====================

    def game(
        self,
        scheme: str,
        adversary: str = "null",
        setting: str = Setting.TWO_USER.value,
        position: str = Position.OUTSIDER.value,
        runs: Optional[int] = None,
        seed: Seed = None,
        sabotaged: bool = False,
        workers: Optional[int] = None,
        query_budget: Optional[int] = None,
        p_bits: Optional[int] = None,
        q_bits: Optional[int] = None,
        profile: Optional[str] = None,
        transcripts: Optional[List[GameTranscript]] = None
    ) -> GameStats:
        config = GameConfig(
            scheme=SchemeId.from_token(scheme),
            setting=Setting(setting),
            adversary_position=Position(position),
            query_budget=self.config.get("game.query_budget") if query_budget is None else query_budget,
            profile=get_profile(profile or self.config.get("profile")),
            p_bits=self.config.get("game.p_bits") if p_bits is None else p_bits,
            q_bits=self.config.get("game.q_bits") if q_bits is None else q_bits,
            sabotaged=sabotaged,
        )
        return self.game_runner.run_many(
            config,
            adversary,
            self.config.get("game.runs") if runs is None else runs,
            seed=seed,
            workers=self.config.get("game.workers") if workers is None else workers,
            transcripts=transcripts,
        )

    def probe(
        self,
        scheme: str,
        kind: str = "outsider",
        trials: Optional[int] = None,
        seed: Seed = None,
        p_bits: Optional[int] = None,
        q_bits: Optional[int] = None,
        profile: Optional[str] = None
    ) -> ForgeryStats:
        """
        运行伪造探测

        Args:
            scheme: 被测方案
            kind: outsider（真实性）或 insider（不可否认性）
            trials: 候选数量（缺省取 probe.trials）

        Returns:
            ForgeryStats: 伪造统计

        Raises:
            ParameterError: 未知探测类型或次数不合法
        """
        if kind not in PROBES:
            raise ParameterError(f"未知的探测类型: {kind}")
        config = GameConfig(
            scheme=SchemeId.from_token(scheme),
            profile=get_profile(profile or self.config.get("profile")),
            p_bits=self.config.get("game.p_bits") if p_bits is None else p_bits,
            q_bits=self.config.get("game.q_bits") if q_bits is None else q_bits,
        )
        trials = self.config.get("probe.trials") if trials is None else trials
        stats = PROBES[kind](config, make_rng(seed), trials)
        if stats.accepts:
            self.logger.error(f"{kind} 探测出现 {stats.accepts} 次被接受的伪造")
        return stats

    def bench(
        self,
        schemes: Optional[Sequence[str]] = None,
        message_sizes: Optional[Sequence[int]] = None,
        trials: Optional[int] = None,
        p_bits: Optional[int] = None,
        q_bits: Optional[int] = None,
        profile: Optional[str] = None,
        seed: Seed = None,
        params_path: Optional[Union[str, Path]] = None
    ) -> BenchReport:
        profile = get_profile(profile or self.config.get("profile"))
        if params_path is not None:
            params = self.load_params(params_path).params
        else:
            params, _ = setup(
                self.config.get("bench.p_bits") if p_bits is None else p_bits,
                self.config.get("bench.q_bits") if q_bits is None else q_bits,
                profile,
                make_rng(seed),
                self.config.get("params.candidate_budget"),
            )
        scheme_ids = [SchemeId.from_token(s) for s in schemes] if schemes else list(SchemeId)
        return self.bench_runner.run(
            params,
            profile,
            schemes=scheme_ids,
            message_sizes=self.config.get("bench.message_sizes") if message_sizes is None else message_sizes,
            trials=self.config.get("bench.trials") if trials is None else trials,
            rng=make_rng(seed),
        )

