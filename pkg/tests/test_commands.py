import asyncio

import pytest

from SCKit.commands import (
    EXIT_FORMAT,
    EXIT_GENERATION,
    EXIT_OK,
    EXIT_REJECTED,
    EXIT_RETRY,
    EXIT_USAGE,
    main,
)
from SCKit.config import SCKitConfig
from SCKit.formats import CiphertextFile, KeyFile
from SCKit.group_math import GroupParams
from SCKit.schemes import SchemeId

SCHEMES = [s.value for s in SchemeId]
OUTPUT_PREFIXES = ("fingerprint ", "public ", "ACCEPTED", "REJECTED", "VALID", "INVALID", "runs ", "wins ",
                   "win_rate ", "queries ", "forbidden_query_attempts ", "faults ", "trials ", "accepts ",
                   "replay_accepted ")


class CLI:
    """在临时目录中调用命令行入口，收集退出码与结果行"""

    def __init__(self, tmp_path, capsys, config):
        self.tmp_path = tmp_path
        self.capsys = capsys
        self.config = config

    def path(self, name):
        return str(self.tmp_path / name)

    def run(self, *argv):
        self.capsys.readouterr()
        code = main([str(a) for a in argv], self.config)
        out = self.capsys.readouterr().out
        return code, out

    def lines(self, *argv):
        code, out = self.run(*argv)
        return code, [line for line in out.splitlines() if line.startswith(OUTPUT_PREFIXES)]

    def paramgen(self, name="params.key", seed="cli-params", profile="modern-default"):
        code, _ = self.run("paramgen", "--p-bits", 64, "--q-bits", 32, "--profile", profile,
                           "--seed", seed, "-o", self.path(name))
        assert code == EXIT_OK
        return self.path(name)

    def keypair(self, role, scheme, params, seed):
        out = self.path(f"{role}-{scheme}.key")
        args = ["keygen", "--role", role, "--params", params, "--seed", seed, "-o", out]
        if scheme is not None:
            args += ["--scheme", scheme]
        code, _ = self.run(*args)
        assert code == EXIT_OK
        return out, f"{out}.pub"

    def message(self, data=b"attack at dawn", name="message.bin"):
        path = self.tmp_path / name
        path.write_bytes(data)
        return str(path)


@pytest.fixture
def cli(tmp_path, capsys, plain_config):
    return CLI(tmp_path, capsys, plain_config)


@pytest.fixture
def hooks_cli(tmp_path, capsys, hooks_config):
    return CLI(tmp_path, capsys, hooks_config)


def _setup_pair(cli, scheme, params=None):
    params = params or cli.paramgen()
    sender, sender_pub = cli.keypair("sender", scheme, params, f"{scheme}-s")
    receiver, receiver_pub = cli.keypair("receiver", scheme, params, f"{scheme}-r")
    return sender, sender_pub, receiver, receiver_pub


class TestParamgen:
    def test_deterministic_under_seed(self, cli):
        a = cli.paramgen("a.key")
        b = cli.paramgen("b.key")
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()
        params = KeyFile.read(a).params
        assert params.p.bit_length() == 64
        assert params.q.bit_length() == 32

    def test_fingerprint_line(self, cli):
        code, lines = cli.lines("paramgen", "--p-bits", 64, "--q-bits", 32, "--seed", "fp", "-o", cli.path("p.key"))
        assert code == EXIT_OK
        assert lines == [f"fingerprint {KeyFile.read(cli.path('p.key')).fingerprint()}"]

    def test_too_small(self, cli):
        code, _ = cli.run("paramgen", "--p-bits", 8, "--q-bits", 4, "-o", cli.path("small.key"))
        assert code == EXIT_USAGE

    def test_generation_budget(self, tmp_path, capsys):
        config = SCKitConfig(overrides={"params": {"candidate_budget": 1}}, persist=False)
        code, _ = CLI(tmp_path, capsys, config).run(
            "paramgen", "--p-bits", 64, "--q-bits", 32, "--seed", "x", "-o", str(tmp_path / "p.key")
        )
        assert code == EXIT_GENERATION

    def test_unknown_command(self, cli):
        assert cli.run("encrypt")[0] == EXIT_USAGE

    @pytest.mark.parametrize("flags", [("--p-bits", 0, "--q-bits", 16), ("--p-bits", 64, "--q-bits", 0)])
    def test_zero_bits_are_not_defaults(self, cli, flags):
        code, _ = cli.run("paramgen", *flags, "--seed", "zero", "-o", cli.path("zero.key"))
        assert code == EXIT_USAGE
        assert not (cli.tmp_path / "zero.key").exists()

    def test_unwritable_output(self, cli):
        code, _ = cli.run("paramgen", "--p-bits", 32, "--q-bits", 16, "--seed", "w",
                          "-o", cli.path("missing-dir/params.key"))
        assert code == EXIT_FORMAT


class TestWorkedExample:
    @pytest.fixture
    def toy_params(self, tmp_path):
        path = tmp_path / "toy.key"
        KeyFile.for_params(GroupParams(p=23, q=11, g=2), "paper-compat").write(path)
        return str(path)

    def test_forced_keys_and_nonce(self, hooks_cli, toy_params):
        code, lines = hooks_cli.lines("keygen", "--role", "sender", "--scheme", "schnorr-sc", "--params", toy_params,
                                      "--force-exponent", 4, "-o", hooks_cli.path("a.key"))
        assert code == EXIT_OK
        assert lines[0] == "public d"
        code, lines = hooks_cli.lines("keygen", "--role", "receiver", "--scheme", "schnorr-sc", "--params", toy_params,
                                      "--force-exponent", 5, "-o", hooks_cli.path("b.key"))
        assert lines[0] == "public 12"

        code, _ = hooks_cli.run("signcrypt", "--sender-key", hooks_cli.path("a.key"),
                                "--receiver-pub", hooks_cli.path("b.key.pub"), "--in", hooks_cli.message(b"hello"),
                                "-o", hooks_cli.path("ct"), "--force-nonce", 3)
        assert code == EXIT_OK
        ct_file = CiphertextFile.read(hooks_cli.path("ct"))
        assert ct_file.r.hex() == "5e8ee6c0159fac78508eb14736962dc824c94b1a"

        code, lines = hooks_cli.lines("unsigncrypt", "--receiver-key", hooks_cli.path("b.key"),
                                      "--sender-pub", hooks_cli.path("a.key.pub"), "--in", hooks_cli.path("ct"),
                                      "-o", hooks_cli.path("out"))
        assert (code, lines) == (EXIT_OK, ["ACCEPTED"])
        with open(hooks_cli.path("out"), "rb") as f:
            assert f.read() == b"hello"

    def test_non_invertible_forced_nonce(self, hooks_cli, toy_params):
        # x = 3 给出 r = 6，发送方私钥 5 使 r + Xa ≡ 0 (mod 11)
        for role in ("sender", "receiver"):
            code, _ = hooks_cli.run("keygen", "--role", role, "--scheme", "scs1", "--params", toy_params,
                                    "--force-exponent", 5, "-o", hooks_cli.path(f"{role}.key"))
            assert code == EXIT_OK
        code, _ = hooks_cli.run("signcrypt", "--sender-key", hooks_cli.path("sender.key"),
                                "--receiver-pub", hooks_cli.path("receiver.key.pub"),
                                "--in", hooks_cli.message(b"paper"), "-o", hooks_cli.path("ct"), "--force-nonce", 3)
        assert code == EXIT_USAGE
        assert not (hooks_cli.tmp_path / "ct").exists()

    def test_hooks_hidden_without_config(self, cli, toy_params):
        code, _ = cli.run("keygen", "--role", "sender", "--scheme", "schnorr-sc", "--params", toy_params,
                          "--force-exponent", 4, "-o", cli.path("a.key"))
        assert code == EXIT_USAGE


@pytest.mark.parametrize("scheme", SCHEMES)
class TestSigncryptRoundTrip:
    def test_round_trip(self, cli, scheme):
        sender, sender_pub, receiver, receiver_pub = _setup_pair(cli, scheme)
        code, _ = cli.run("signcrypt", "--scheme", scheme, "--sender-key", sender, "--receiver-pub", receiver_pub,
                          "--in", cli.message(), "-o", cli.path("ct"), "--seed", "ct")
        assert code == EXIT_OK
        code, lines = cli.lines("unsigncrypt", "--scheme", scheme, "--receiver-key", receiver,
                                "--sender-pub", sender_pub, "--in", cli.path("ct"), "-o", cli.path("out"))
        assert (code, lines) == (EXIT_OK, ["ACCEPTED"])
        with open(cli.path("out"), "rb") as f:
            assert f.read() == b"attack at dawn"

    def test_fixed_seed_is_reproducible(self, cli, scheme):
        sender, _, _, receiver_pub = _setup_pair(cli, scheme)
        for name in ("ct1", "ct2"):
            cli.run("signcrypt", "--sender-key", sender, "--receiver-pub", receiver_pub,
                    "--in", cli.message(), "-o", cli.path(name), "--seed", "same")
        with open(cli.path("ct1"), "rb") as a, open(cli.path("ct2"), "rb") as b:
            assert a.read() == b.read()

    def test_empty_message(self, cli, scheme):
        sender, sender_pub, receiver, receiver_pub = _setup_pair(cli, scheme)
        cli.run("signcrypt", "--sender-key", sender, "--receiver-pub", receiver_pub,
                "--in", cli.message(b""), "-o", cli.path("ct"))
        code, _ = cli.run("unsigncrypt", "--receiver-key", receiver, "--sender-pub", sender_pub,
                          "--in", cli.path("ct"), "-o", cli.path("out"))
        assert code == EXIT_OK


class TestSigncryptFailures:
    @pytest.fixture
    def material(self, cli):
        sender, sender_pub, receiver, receiver_pub = _setup_pair(cli, "scs1")
        cli.run("signcrypt", "--sender-key", sender, "--receiver-pub", receiver_pub,
                "--in", cli.message(), "-o", cli.path("ct"), "--seed", "fail")
        return sender, sender_pub, receiver, receiver_pub

    def _unsigncrypt(self, cli, material, ct_path):
        _, sender_pub, receiver, _ = material
        return cli.lines("unsigncrypt", "--receiver-key", receiver, "--sender-pub", sender_pub,
                         "--in", ct_path, "-o", cli.path("out"))

    def test_scheme_mismatch(self, cli, material):
        params = cli.path("params.key")
        other_receiver, other_pub = cli.keypair("receiver", "scs2", params, "other")
        sender = material[0]
        code, _ = cli.run("signcrypt", "--sender-key", sender, "--receiver-pub", other_pub,
                          "--in", cli.message(), "-o", cli.path("ct2"))
        assert code == EXIT_FORMAT

    def test_requested_scheme_mismatch(self, cli, material):
        sender, _, _, receiver_pub = material
        code, _ = cli.run("signcrypt", "--scheme", "scs2", "--sender-key", sender, "--receiver-pub", receiver_pub,
                          "--in", cli.message(), "-o", cli.path("ct2"))
        assert code == EXIT_FORMAT

    def test_flipped_ciphertext_digit(self, cli, material):
        text = (cli.tmp_path / "ct").read_text("ascii")
        head, c_value = text.rstrip("\n").rsplit(" ", 1)
        prefix, digits = c_value.split(":")
        flipped = ("1" if digits[-1] == "0" else "0")
        (cli.tmp_path / "ct").write_text(f"{head} {prefix}:{digits[:-1]}{flipped}\n", "ascii")
        code, lines = self._unsigncrypt(cli, material, cli.path("ct"))
        assert (code, lines) == (EXIT_REJECTED, ["REJECTED"])
        assert not (cli.tmp_path / "out").exists()

    def test_unwritable_plaintext_output(self, cli, material):
        _, sender_pub, receiver, _ = material
        code, _ = cli.run("unsigncrypt", "--receiver-key", receiver, "--sender-pub", sender_pub,
                          "--in", cli.path("ct"), "-o", cli.path("missing-dir/out"))
        assert code == EXIT_FORMAT

    def test_truncated(self, cli, material):
        text = (cli.tmp_path / "ct").read_text("ascii")
        (cli.tmp_path / "ct").write_text(text[:len(text) // 2], "ascii")
        assert self._unsigncrypt(cli, material, cli.path("ct"))[0] == EXIT_FORMAT

    def test_mutations_exit_with_format_error(self, cli, material):
        text = (cli.tmp_path / "ct").read_text("ascii")
        for index in range(0, len(text), 7):
            mutated = cli.tmp_path / "mutated"
            mutated.write_text(text[:index] + text[index + 1:], "ascii")
            assert self._unsigncrypt(cli, material, str(mutated))[0] == EXIT_FORMAT

    def test_scalar_out_of_range(self, cli, material):
        ct_file = CiphertextFile.read(cli.path("ct"))
        q = KeyFile.read(material[2]).params.q
        CiphertextFile(scheme=ct_file.scheme, profile=ct_file.profile, r=ct_file.r, s=q, c=ct_file.c).write(
            cli.path("bad-s")
        )
        assert self._unsigncrypt(cli, material, cli.path("bad-s"))[0] == EXIT_FORMAT

    def test_wrong_key_role(self, cli, material):
        sender, sender_pub, _, _ = material
        code, _ = cli.run("signcrypt", "--sender-key", sender, "--receiver-pub", sender_pub,
                          "--in", cli.message(), "-o", cli.path("ct2"))
        assert code == EXIT_FORMAT

    def test_missing_input(self, cli, material):
        sender, _, _, receiver_pub = material
        code, _ = cli.run("signcrypt", "--sender-key", sender, "--receiver-pub", receiver_pub,
                          "--in", cli.path("absent"), "-o", cli.path("ct2"))
        assert code == EXIT_FORMAT

    def test_retry_budget_exhausted(self, tmp_path, capsys, material):
        sender, _, _, receiver_pub = material
        config = SCKitConfig(overrides={"signcrypt": {"retry_budget": 0}}, persist=False)
        code, _ = CLI(tmp_path, capsys, config).run(
            "signcrypt", "--sender-key", sender, "--receiver-pub", receiver_pub,
            "--in", str(tmp_path / "message.bin"), "-o", str(tmp_path / "ct2"),
        )
        assert code == EXIT_RETRY

    def test_keygen_needs_scheme(self, cli):
        code, _ = cli.run("keygen", "--role", "sender", "--params", cli.paramgen(), "-o", cli.path("k"))
        assert code == EXIT_USAGE


class TestSignVerify:
    @pytest.fixture
    def signed(self, cli):
        key, pub = cli.keypair("schnorr", None, cli.paramgen(), "sig-key")
        code, _ = cli.run("sign", "--key", key, "--in", cli.message(), "--sig", cli.path("sig"), "--seed", "sig")
        assert code == EXIT_OK
        return key, pub

    def test_valid(self, cli, signed):
        _, pub = signed
        assert cli.lines("verify", "--pub", pub, "--in", cli.message(), "--sig", cli.path("sig")) == (
            EXIT_OK, ["VALID"]
        )

    def test_altered_message(self, cli, signed):
        _, pub = signed
        altered = cli.message(b"attack at dusk", "altered.bin")
        assert cli.lines("verify", "--pub", pub, "--in", altered, "--sig", cli.path("sig")) == (
            EXIT_REJECTED, ["INVALID"]
        )

    def test_deterministic(self, cli, signed):
        key, _ = signed
        cli.run("sign", "--key", key, "--in", cli.message(), "--sig", cli.path("sig2"), "--seed", "sig")
        with open(cli.path("sig"), "rb") as a, open(cli.path("sig2"), "rb") as b:
            assert a.read() == b.read()

    def test_signcrypt_key_cannot_sign(self, cli):
        sender, _, _, _ = _setup_pair(cli, "scs2")
        code, _ = cli.run("sign", "--key", sender, "--in", cli.message(), "--sig", cli.path("sig"))
        assert code == EXIT_FORMAT


class TestGameAndBench:
    def _value(self, lines, key):
        return next(line.split()[1] for line in lines if line.startswith(f"{key} "))

    def test_null_game(self, cli):
        code, lines = cli.lines("game", "--scheme", "scs2", "--adversary", "null", "--runs", 40, "--seed", "g",
                                "--p-bits", 64, "--q-bits", 32)
        assert code == EXIT_OK
        assert self._value(lines, "runs") == "40"
        assert self._value(lines, "faults") == "0"
        assert self._value(lines, "forbidden_query_attempts") == "0"

    def test_restriction_transcript(self, cli):
        transcript = cli.path("transcript.txt")
        code, lines = cli.lines("game", "--adversary", "restriction-tester", "--runs", 10, "--seed", "r",
                                "--p-bits", 64, "--q-bits", 32, "--transcript", transcript)
        assert code == EXIT_OK
        assert self._value(lines, "forbidden_query_attempts") == "10"
        with open(transcript, encoding="utf-8") as f:
            content = f.read()
        assert content.startswith("RUN 0\nQUERY unsigncrypt-blocked ")
        assert content.count("RESULT ") == 10

    def test_sabotaged_game(self, cli):
        code, lines = cli.lines("game", "--adversary", "sabotage-exploiter", "--sabotaged", "--runs", 30,
                                "--seed", "s", "--p-bits", 64, "--q-bits", 32)
        assert self._value(lines, "win_rate") == "1.0000"

    def test_bench_csv(self, cli):
        code, out = cli.run("bench", "--schemes", "schnorr-sc", "--sizes", 0, 16, "--trials", 10,
                            "--p-bits", 64, "--q-bits", 32, "--seed", "b", "--csv")
        assert code == EXIT_OK
        rows = [line for line in out.splitlines() if line.startswith(("ops,", "expansion,", "timing,"))]
        assert "ops,schnorr-sc,sender,1,1,0,2" in rows
        assert "ops,sign-then-encrypt,sender,3,1,0,2" in rows
        assert len([r for r in rows if r.startswith("expansion,")]) == 2
        assert len([r for r in rows if r.startswith("timing,")]) == 4

    def test_bench_table_with_params_file(self, cli):
        params = cli.paramgen()
        code, out = cli.run("bench", "--schemes", "scs1", "scs2", "--sizes", 8, "--trials", 10,
                            "--params", params, "--seed", "t")
        assert code == EXIT_OK
        assert "[运算计数]" in out
        assert "[计时]" in out
        assert "参数: p=64位 q=32位" in out

    @pytest.mark.parametrize("flags", [("--runs", 0), ("--workers", 0), ("--p-bits", 0)])
    def test_game_zero_flags(self, cli, flags):
        code, lines = cli.lines("game", "--runs", 5, "--seed", "z", "--p-bits", 64, "--q-bits", 32, *flags)
        assert code == EXIT_USAGE
        assert lines == []

    def test_bench_zero_trials(self, cli):
        code, _ = cli.run("bench", "--schemes", "scs1", "--sizes", 0, "--trials", 0,
                          "--p-bits", 64, "--q-bits", 32, "--seed", "b")
        assert code == EXIT_USAGE


class TestForgeryCommand:
    def _value(self, lines, key):
        return next(line.split()[1] for line in lines if line.startswith(f"{key} "))

    @pytest.mark.parametrize("kind", ["outsider", "insider"])
    def test_no_forgery_accepted(self, cli, kind):
        code, lines = cli.lines("probe", "--scheme", "scs2", "--kind", kind, "--trials", 200, "--seed", kind,
                                "--p-bits", 64, "--q-bits", 32)
        assert code == EXIT_OK
        assert self._value(lines, "trials") == "200"
        assert self._value(lines, "accepts") == "0"

    def test_outsider_replay_line(self, cli):
        _, lines = cli.lines("probe", "--kind", "outsider", "--trials", 10, "--seed", "replay",
                             "--p-bits", 64, "--q-bits", 32)
        assert self._value(lines, "replay_accepted") == "true"

    def test_trials_default_from_config(self, tmp_path, capsys):
        config = SCKitConfig(overrides={"probe": {"trials": 12}, "game": {"p_bits": 64, "q_bits": 32}}, persist=False)
        code, lines = CLI(tmp_path, capsys, config).lines("probe", "--kind", "insider", "--seed", "cfg")
        assert code == EXIT_OK
        assert self._value(lines, "trials") == "12"

    def test_zero_trials(self, cli):
        assert cli.run("probe", "--trials", 0, "--p-bits", 64, "--q-bits", 32)[0] == EXIT_USAGE


class TestMessageCommand:
    @pytest.fixture
    def registered(self, monkeypatch, plain_config):
        from ErisPulse.Core import Event

        from SCKit.Core import Main

        handlers = {}
        replies = []

        def fake_command(name, **kwargs):
            def decorator(func):
                handlers[name] = func
                return func
            return decorator

        async def fake_reply(self, event, message):
            replies.append((event.get("user_id"), message))

        monkeypatch.setattr(Event, "command", fake_command)
        monkeypatch.setattr("SCKit.commands.SCKitCommands._send_reply", fake_reply)
        app = Main(plain_config)
        assert asyncio.run(app.on_load({}))
        return handlers, replies

    def test_on_load_registers_sckit(self, registered):
        handlers, _ = registered
        assert list(handlers) == ["sckit"]

    def test_command_runs_subcommand(self, registered, tmp_path):
        handlers, replies = registered
        out = str(tmp_path / "params.key")
        event = {"user_id": "u1", "command": {"args": ["paramgen", "--p-bits", "32", "--q-bits", "16",
                                                       "--seed", "event", "-o", out]}}
        asyncio.run(handlers["sckit"](event))
        (user, message), = replies
        assert user == "u1"
        assert f"fingerprint {KeyFile.read(out).fingerprint()}" in message
        assert message.endswith("exit 0")

    def test_usage_error_reply(self, registered):
        handlers, replies = registered
        asyncio.run(handlers["sckit"]({"user_id": "u2", "command": {"args": ["encrypt"]}}))
        assert replies[0][1].endswith(f"exit {EXIT_USAGE}")
