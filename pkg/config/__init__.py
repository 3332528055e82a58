"""
配置模組 - 截斷拍賣識別工具組
"""

from .constants import *
from .run_config import *
