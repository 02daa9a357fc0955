import copy
from typing import Any, Dict, Optional

from ErisPulse import sdk


class SCKitConfig:
    """
    配置管理器

    负责加载、保存和管理 SCKit 的所有配置项。
    使用 ErisPulse SDK 提供的环境配置接口持久化配置。

    配置说明：
    - 首次运行时写入默认配置，之后缺失的键自动回落到默认值
    - overrides 用于测试和嵌入调用，只在当前实例生效，不会写回
    - test_hooks 为 False 时命令行不注册 --force-exponent / --force-nonce
    """

    CONFIG_KEY = "SCKit"

    def __init__(self, overrides: Optional[Dict[str, Any]] = None, persist: bool = True):
        self.logger = sdk.logger.get_child("SCKitConfig")
        self.persist = persist
        self._stored = self._load_config() if persist else {}
        self.config = self._merge(self._get_default_config(), self._stored)
        if overrides:
            self.config = self._merge(self.config, overrides)

    def _load_config(self) -> Dict[str, Any]:
        """
        加载或创建默认配置

        Returns:
            Dict[str, Any]: 已持久化的配置字典
        """
        config = sdk.env.getConfig(self.CONFIG_KEY)
        if not config:
            default_config = self._get_default_config()
            sdk.env.setConfig(self.CONFIG_KEY, default_config)
            self.logger.info("未找到 SCKit 配置，已写入默认配置")
            return default_config
        return config

    def _get_default_config(self) -> Dict[str, Any]:
        """
        获取默认配置

        Returns:
            Dict[str, Any]: 默认配置字典
        """
        return {
            "profile": "modern-default",  # 原语组合：paper-compat / modern-default / modern-aes

            # 群参数生成
            "params": {
                "p_bits": 1024,
                "q_bits": 160,
                "candidate_budget": 10000,  # 素性测试候选总数上限
            },

            "signcrypt": {
                "retry_budget": 64,  # SCS1/SCS2 除数不可逆时的重采样上限
            },

            # 安全游戏
            "game": {
                "query_budget": 256,  # 每阶段预言机查询上限
                "runs": 2000,
                "p_bits": 64,
                "q_bits": 32,
                "workers": 1,
            },

            "probe": {
                "trials": 10000,
            },

            # 基准测试
            "bench": {
                "trials": 30,
                "message_sizes": [0, 64, 1024, 4096],
                "p_bits": 1024,
                "q_bits": 160,
            },

            "validation_mode": False,  # 负指数幂启用子群校验与交叉核对
            "test_hooks": False,  # 启用强制私钥 / 强制随机数（仅测试使用）
        }

    @staticmethod
    def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
        merged = copy.deepcopy(base)
        for key, value in update.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = SCKitConfig._merge(merged[key], value)
            else:
                merged[key] = copy.deepcopy(value)
        return merged

    def get(self, key: str, default: Any = None) -> Any:
        """
        获取配置项（支持点号分隔的嵌套键）

        Args:
            key: 配置键，如"game.query_budget"
            default: 默认值

        Returns:
            Any: 配置值或默认值
        """
        value = self.config
        for k in key.split("."):
            if isinstance(value, dict):
                value = value.get(k)
            else:
                return default
        return value if value is not None else default

    def set(self, key: str, value: Any) -> None:
        """
        设置配置项（支持点号分隔的嵌套键）

        Args:
            key: 配置键，如"bench.trials"
            value: 要设置的值
        """
        keys = key.split(".")
        for target in (self.config, self._stored):
            node = target
            for k in keys[:-1]:
                node = node.setdefault(k, {})
            node[keys[-1]] = value
        if self.persist:
            sdk.env.setConfig(self.CONFIG_KEY, self._stored)

    @property
    def test_hooks(self) -> bool:
        return bool(self.get("test_hooks", False))
