import argparse
import asyncio
import contextlib
import io
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from ErisPulse import sdk

from .bench import format_csv, format_table
from .Core import PROBES, Main
from .config import SCKitConfig
from .exceptions import (
    FormatError,
    GenerationError,
    MalformedSigncryptTextError,
    NotInvertibleError,
    ParameterError,
    RetryBudgetExceededError,
)
from .formats import ROLE_RECEIVER, ROLE_SCHNORR, ROLE_SENDER
from .games import ADVERSARIES, Position, Setting
from .primitives import PROFILES
from .schemes import Rejected, SchemeId

# 退出码约定
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GENERATION = 3
EXIT_FORMAT = 4
EXIT_RETRY = 5
EXIT_REJECTED = 6

SCHEME_CHOICES = [s.value for s in SchemeId]


class SCKitCommands:
    """
    SCKit 命令处理器

    负责注册和处理所有子命令，并把异常映射为退出码。

    命令组划分：
    - 参数与密钥: paramgen、keygen
    - 签密: signcrypt、unsigncrypt
    - 签名: sign、verify
    - 评估: game、probe、bench

    --force-exponent / --force-nonce 仅在配置 test_hooks 为真时注册。
    """

    def __init__(self, config: SCKitConfig, logger, main=None):
        self.config = config
        self.logger = logger.get_child("SCKitCommands")
        self.main = main  # 保存 Main 实例引用
        self._handlers: Dict[str, Callable[[argparse.Namespace], int]] = {}

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog="sckit", description="签密工具包：SCS1 / SCS2 / SCHNORR_SC")
        subparsers = parser.add_subparsers(dest="command", required=True)
        self.register_all(subparsers)
        return parser

    def _add_hook(self, parser: argparse.ArgumentParser, flag: str, help_text: str) -> None:
        if self.config.test_hooks:
            parser.add_argument(flag, type=int, default=None, help=f"[测试钩子] {help_text}")

    def register_all(self, subparsers) -> None:
        """注册所有子命令"""

        # ==================== 参数与密钥 ====================

        p = subparsers.add_parser("paramgen", help="生成群参数文件")
        p.add_argument("--p-bits", type=int, default=self.config.get("params.p_bits"))
        p.add_argument("--q-bits", type=int, default=self.config.get("params.q_bits"))
        p.add_argument("--profile", choices=sorted(PROFILES), default=self.config.get("profile"))
        p.add_argument("--seed", default=None, help="随机种子（缺省使用系统熵）")
        p.add_argument("-o", "--out", required=True, help="参数文件输出路径")
        self._handlers["paramgen"] = self.cmd_paramgen

        p = subparsers.add_parser("keygen", help="生成密钥对")
        p.add_argument("--role", choices=[ROLE_SENDER, ROLE_RECEIVER, ROLE_SCHNORR], required=True)
        p.add_argument("--scheme", choices=SCHEME_CHOICES, default=None, help="签密方案（schnorr 角色不需要）")
        p.add_argument("--params", required=True, help="参数文件")
        p.add_argument("--seed", default=None)
        p.add_argument("-o", "--out", required=True, help="私钥文件输出路径")
        p.add_argument("--pub-out", default=None, help="公钥文件输出路径（缺省为 <out>.pub）")
        self._add_hook(p, "--force-exponent", "强制私钥指数")
        self._handlers["keygen"] = self.cmd_keygen

        # ==================== 签密 ====================

        p = subparsers.add_parser("signcrypt", help="签密文件")
        p.add_argument("--scheme", choices=SCHEME_CHOICES, default=None)
        p.add_argument("--sender-key", required=True, help="发送方私钥文件")
        p.add_argument("--receiver-pub", required=True, help="接收方公钥文件")
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("-o", "--out", required=True)
        p.add_argument("--seed", default=None)
        self._add_hook(p, "--force-nonce", "强制一次性随机数 x")
        self._handlers["signcrypt"] = self.cmd_signcrypt

        p = subparsers.add_parser("unsigncrypt", help="解签密文件")
        p.add_argument("--scheme", choices=SCHEME_CHOICES, default=None)
        p.add_argument("--receiver-key", required=True, help="接收方私钥文件")
        p.add_argument("--sender-pub", required=True, help="发送方公钥文件")
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("-o", "--out", required=True)
        self._handlers["unsigncrypt"] = self.cmd_unsigncrypt

        # ==================== 签名 ====================

        p = subparsers.add_parser("sign", help="Schnorr 签名")
        p.add_argument("--key", required=True, help="签名私钥文件")
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--sig", required=True, help="签名文件输出路径")
        p.add_argument("--seed", default=None)
        self._add_hook(p, "--force-nonce", "强制签名随机数 k")
        self._handlers["sign"] = self.cmd_sign

        p = subparsers.add_parser("verify", help="Schnorr 验证")
        p.add_argument("--pub", required=True, help="签名公钥文件")
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--sig", required=True)
        self._handlers["verify"] = self.cmd_verify

        # ==================== 评估 ====================

        p = subparsers.add_parser("game", help="运行保密性游戏")
        p.add_argument("--scheme", choices=SCHEME_CHOICES, default=SchemeId.SCHNORR_SC.value)
        p.add_argument("--adversary", choices=sorted(ADVERSARIES), default="null")
        p.add_argument("--setting", choices=[s.value for s in Setting], default=Setting.TWO_USER.value)
        p.add_argument("--position", choices=[s.value for s in Position], default=Position.OUTSIDER.value)
        p.add_argument("--runs", type=int, default=self.config.get("game.runs"))
        p.add_argument("--seed", default=None)
        p.add_argument("--sabotaged", action="store_true", help="使用 k1 全零的故障方案")
        p.add_argument("--transcript", default=None, help="游戏记录输出路径")
        p.add_argument("--workers", type=int, default=self.config.get("game.workers"))
        p.add_argument("--query-budget", type=int, default=self.config.get("game.query_budget"))
        p.add_argument("--p-bits", type=int, default=self.config.get("game.p_bits"))
        p.add_argument("--q-bits", type=int, default=self.config.get("game.q_bits"))
        p.add_argument("--profile", choices=sorted(PROFILES), default=self.config.get("profile"))
        self._handlers["game"] = self.cmd_game

        p = subparsers.add_parser("probe", help="外部人 / 内部人伪造探测")
        p.add_argument("--scheme", choices=SCHEME_CHOICES, default=SchemeId.SCHNORR_SC.value)
        p.add_argument("--kind", choices=sorted(PROBES), default="outsider")
        p.add_argument("--trials", type=int, default=None, help="候选数量（缺省取配置 probe.trials）")
        p.add_argument("--seed", default=None)
        p.add_argument("--p-bits", type=int, default=None)
        p.add_argument("--q-bits", type=int, default=None)
        p.add_argument("--profile", choices=sorted(PROFILES), default=None)
        self._handlers["probe"] = self.cmd_probe

        p = subparsers.add_parser("bench", help="运算计数、消息扩展与计时")
        p.add_argument("--schemes", nargs="+", choices=SCHEME_CHOICES, default=SCHEME_CHOICES)
        p.add_argument("--sizes", nargs="+", type=int, default=self.config.get("bench.message_sizes"))
        p.add_argument("--trials", type=int, default=self.config.get("bench.trials"))
        p.add_argument("--p-bits", type=int, default=self.config.get("bench.p_bits"))
        p.add_argument("--q-bits", type=int, default=self.config.get("bench.q_bits"))
        p.add_argument("--params", default=None, help="复用已有参数文件")
        p.add_argument("--profile", choices=sorted(PROFILES), default=self.config.get("profile"))
        p.add_argument("--seed", default=None)
        p.add_argument("--csv", action="store_true", help="输出逗号分隔格式")
        self._handlers["bench"] = self.cmd_bench

    def dispatch(self, args: argparse.Namespace) -> int:
        """
        执行子命令并映射退出码

        Args:
            args: 解析后的参数

        Returns:
            int: 退出码
        """
        try:
            return self._handlers[args.command](args)
        except GenerationError as e:
            self.logger.error(f"参数生成失败: {e}")
            return EXIT_GENERATION
        except RetryBudgetExceededError as e:
            self.logger.error(f"签密重采样次数耗尽: {e}")
            return EXIT_RETRY
        except (FormatError, MalformedSigncryptTextError) as e:
            self.logger.error(f"文件不合法: {e}")
            return EXIT_FORMAT
        except ParameterError as e:
            self.logger.error(f"参数错误: {e}")
            return EXIT_USAGE
        except NotInvertibleError as e:
            self.logger.error(f"强制随机数不可用: {e}")
            return EXIT_USAGE
        except OSError as e:
            self.logger.error(f"无法写出文件: {e}")
            return EXIT_FORMAT

    def execute(self, argv: Optional[Sequence[str]] = None) -> int:
        """解析参数并执行，参数错误返回 EXIT_USAGE"""
        parser = self.build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
        return self.dispatch(args)

    def run_captured(self, argv: Sequence[str]) -> Tuple[int, str]:
        """
        执行子命令并收集输出（供消息命令使用）

        Args:
            argv: 参数列表

        Returns:
            Tuple[int, str]: 退出码与标准输出 / 标准错误的合并文本
        """
        buffer = io.StringIO()
        with contextlib.redirect_stdout(buffer), contextlib.redirect_stderr(buffer):
            code = self.execute(list(argv))
        return code, buffer.getvalue()

    # ==================== 消息命令 ====================

    def register_events(self) -> None:
        """把子命令注册为 ErisPulse 消息命令 /sckit <子命令> ..."""
        from ErisPulse.Core.Event import command

        @command("sckit", group="签密工具", help="签密工具包，用法同命令行 sckit")
        async def sckit_cmd(event):
            args = event.get("command", {}).get("args", [])
            self.logger.info(f"收到消息命令: sckit {' '.join(args)}")
            code, output = await asyncio.to_thread(self.run_captured, args)
            await self._send_reply(event, f"{output.rstrip()}\nexit {code}".lstrip("\n"))

    async def _send_reply(self, event: Dict[str, Any], message: str) -> None:
        """
        发送回复消息

        Args:
            event: 事件对象
            message: 回复内容
        """
        platform = event.get("platform")
        detail_type = "group" if event.get("detail_type") == "group" else "user"
        target_id = event.get("group_id") or event.get("user_id")
        adapter_instance = getattr(sdk.adapter, platform)
        await adapter_instance.Send.To(detail_type, target_id).Text(message)

    # ==================== 命令实现 ====================

    def cmd_paramgen(self, args: argparse.Namespace) -> int:
        key_file = self.main.paramgen(args.out, args.p_bits, args.q_bits, args.seed, args.profile)
        print(f"fingerprint {key_file.fingerprint()}")
        return EXIT_OK

    def cmd_keygen(self, args: argparse.Namespace) -> int:
        if args.role != ROLE_SCHNORR and args.scheme is None:
            raise ParameterError("sender / receiver 角色需要 --scheme")
        public_out = args.pub_out or f"{args.out}.pub"
        key_file = self.main.keygen(
            args.role, args.params, args.out, public_out,
            scheme=args.scheme, seed=args.seed,
            force_exponent=getattr(args, "force_exponent", None),
        )
        print(f"public {key_file.public:x}")
        print(f"fingerprint {key_file.public_only().fingerprint()}")
        return EXIT_OK

    def cmd_signcrypt(self, args: argparse.Namespace) -> int:
        ct_file = self.main.signcrypt(
            args.sender_key, args.receiver_pub, args.input, args.out,
            scheme=args.scheme, seed=args.seed,
            force_nonce=getattr(args, "force_nonce", None),
        )
        print(f"fingerprint {ct_file.fingerprint()}")
        return EXIT_OK

    def cmd_unsigncrypt(self, args: argparse.Namespace) -> int:
        result = self.main.unsigncrypt(args.receiver_key, args.sender_pub, args.input, args.out, scheme=args.scheme)
        if isinstance(result, Rejected):
            print("REJECTED")
            return EXIT_REJECTED
        print("ACCEPTED")
        return EXIT_OK

    def cmd_sign(self, args: argparse.Namespace) -> int:
        sig_file = self.main.sign(
            args.key, args.input, args.sig, seed=args.seed,
            force_nonce=getattr(args, "force_nonce", None),
        )
        print(f"fingerprint {sig_file.fingerprint()}")
        return EXIT_OK

    def cmd_verify(self, args: argparse.Namespace) -> int:
        if self.main.verify(args.pub, args.input, args.sig):
            print("VALID")
            return EXIT_OK
        print("INVALID")
        return EXIT_REJECTED

    def cmd_game(self, args: argparse.Namespace) -> int:
        transcripts = [] if args.transcript else None
        stats = self.main.game(
            args.scheme,
            adversary=args.adversary,
            setting=args.setting,
            position=args.position,
            runs=args.runs,
            seed=args.seed,
            sabotaged=args.sabotaged,
            workers=args.workers,
            query_budget=args.query_budget,
            p_bits=args.p_bits,
            q_bits=args.q_bits,
            profile=args.profile,
            transcripts=transcripts,
        )
        if transcripts is not None:
            lines: List[str] = []
            for index, transcript in enumerate(transcripts):
                lines.append(f"RUN {index}")
                lines.extend(transcript.to_lines())
            Path(args.transcript).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"runs {stats.runs}")
        print(f"wins {stats.wins}")
        print(f"win_rate {stats.win_rate:.4f}")
        print(f"queries {stats.total_queries}")
        print(f"forbidden_query_attempts {stats.forbidden_query_attempts}")
        print(f"faults {stats.faults}")
        return EXIT_OK

    def cmd_probe(self, args: argparse.Namespace) -> int:
        stats = self.main.probe(
            args.scheme,
            kind=args.kind,
            trials=args.trials,
            seed=args.seed,
            p_bits=args.p_bits,
            q_bits=args.q_bits,
            profile=args.profile,
        )
        print(f"trials {stats.trials}")
        print(f"accepts {stats.accepts}")
        if stats.replay_accepted is not None:
            print(f"replay_accepted {str(stats.replay_accepted).lower()}")
        return EXIT_OK if stats.accepts == 0 else EXIT_REJECTED

    def cmd_bench(self, args: argparse.Namespace) -> int:
        report = self.main.bench(
            schemes=args.schemes,
            message_sizes=args.sizes,
            trials=args.trials,
            p_bits=args.p_bits,
            q_bits=args.q_bits,
            profile=args.profile,
            seed=args.seed,
            params_path=args.params,
        )
        sys.stdout.write(format_csv(report) if args.csv else format_table(report))
        return EXIT_OK


def main(argv: Optional[Sequence[str]] = None, config: Optional[SCKitConfig] = None) -> int:
    """
    命令行入口

    Args:
        argv: 参数列表（缺省取 sys.argv[1:]）
        config: 配置（缺省从 ErisPulse 环境加载）

    Returns:
        int: 退出码
    """
    config = config or SCKitConfig()
    app = Main(config)
    return SCKitCommands(config, sdk.logger, app).execute(argv)
