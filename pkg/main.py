# main.py
# SCKit 命令行启动文件
# 等价于安装后的 sckit 命令
import sys

from SCKit.commands import main

if __name__ == "__main__":
    sys.exit(main())
