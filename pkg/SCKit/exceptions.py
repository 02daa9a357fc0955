"""
SCKit 异常定义

所有模块抛出的异常都继承自 SCKitError，命令行层据此映射退出码。
注意：解签密失败（⊥）不是异常，而是返回 Rejected 值。
"""


class SCKitError(Exception):
    """SCKit 异常基类"""


class ParameterError(SCKitError, ValueError):
    """参数不满足前置条件（模数过小、指数为负、位长低于下限等）"""


class MalformedSigncryptTextError(ParameterError):
    """签密文结构非法：s ≥ q 或 r 长度与摘要长度不符"""


class TestHookDisabledError(ParameterError):
    """测试钩子（强制指数/强制随机数）未启用"""

    __test__ = False  # 不是 pytest 测试类


class NotInvertibleError(SCKitError, ArithmeticError):
    """模逆不存在"""


class GenerationError(SCKitError):
    """素数搜索超出候选预算"""


class RetryBudgetExceededError(SCKitError):
    """SCS1/SCS2 重采样次数耗尽"""


class FormatError(SCKitError, ValueError):
    """密钥/签密文/签名文件格式错误"""


class OracleError(SCKitError):
    """敌手对安全游戏预言机的非法使用（超出查询预算、调用不可用的预言机）"""
