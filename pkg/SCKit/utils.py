"""
SCKit 公共工具模块

提供跨模块共享的工具函数：
- 日志用的参数描述与十六进制预览
- 运算计数插桩（仅在 op_counting() 上下文中生效）
- 按计数器派生子种子
"""
import functools
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Any, Callable, Dict, Iterator, Optional, Union

# 计数项名称
COUNTER_KEYS = ("mod_exps", "mod_muls", "mod_invs", "hash_calls")

_active_tally: ContextVar[Optional[Dict[str, int]]] = ContextVar("sckit_op_tally", default=None)


def describe_params(params: Any) -> str:
    """
    获取群参数描述字符串（用于日志记录）

    Args:
        params: GroupParams 实例

    Returns:
        str: 形如 "p=1024位 q=160位" 的描述
    """
    return f"p={params.p.bit_length()}位 q={params.q.bit_length()}位"


def preview_hex(data: bytes, max_length: int = 16) -> str:
    """
    截断字节串用于日志记录

    Args:
        data: 原始字节串
        max_length: 最多展示的字节数

    Returns:
        str: 十六进制预览
    """
    if len(data) <= max_length:
        return data.hex()
    return data[:max_length].hex() + f"...({len(data)}字节)"


def derive_seed(master: Union[int, str, None], index: int) -> Optional[str]:
    """
    按计数器从主种子派生子种子

    Args:
        master: 主种子（None 表示使用系统熵，此时也返回 None）
        index: 计数器

    Returns:
        Optional[str]: 子种子
    """
    if master is None:
        return None
    return f"{master}:{index}"


def counted(key: str) -> Callable:
    """
    运算计数装饰器

    被装饰的函数每调用一次，当前激活的计数表中 key 项加一。
    未处于 op_counting() 上下文时只多一次 ContextVar 查询。

    Args:
        key: 计数项名称（mod_exps、mod_muls、mod_invs、hash_calls）

    Returns:
        Callable: 装饰器
    """
    if key not in COUNTER_KEYS:
        raise ValueError(f"未知计数项: {key}")

    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            tally = _active_tally.get()
            if tally is not None:
                tally[key] += 1
            return func(*args, **kwargs)
        return wrapper
    return decorator


@contextmanager
def op_counting() -> Iterator[Dict[str, int]]:
    """
    开启运算计数

    Yields:
        Dict[str, int]: 本上下文内的计数表
    """
    tally = {k: 0 for k in COUNTER_KEYS}
    token = _active_tally.set(tally)
    try:
        yield tally
    finally:
        _active_tally.reset(token)
