"""
SCKit - 签密工具包

支持：
- SCS1 / SCS2（基于 SDSS1 / SDSS2）与 Schnorr 签密
- Schnorr 数字签名
- 保密性游戏（两用户/多用户，外部人/内部人）与伪造探测
- 运算计数、消息扩展与计时评估

模块结构：
- Main: 主模块类（继承 BaseModule），文件级操作入口
- Config: 配置管理器
- GroupMath: 群运算与参数生成
- Primitives: 哈希、带密钥哈希与对称加密
- Schnorr: Schnorr 签名
- Schemes: 签密方案
- Games: 安全游戏与伪造探测
- Bench: 代价评估
- Formats: 文件格式
- Commands: 命令行
- Utils: 工具函数与运算计数
"""

from .Core import Main

__version__ = "1.0.0"
__all__ = ["Main"]
