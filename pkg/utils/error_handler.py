"""
統一錯誤類別與 CLI 錯誤處理

功能：
- 工具組所有可預期的失敗都繼承 AuctionToolkitError
- 錯誤類型對應使用者友善訊息與結束代碼
- 裝飾器把例外轉成訊息與結束代碼，並寫入日誌

使用範例：
    from utils.error_handler import handle_cli_errors

    @handle_cli_errors(context="識別")
    def cmd_identify(args) -> int:
        ...
"""

from __future__ import annotations

import sys
from functools import wraps
from typing import Any, Callable, Dict

from config.constants import EXIT_CONFIG, EXIT_INCONSISTENT, EXIT_IO, EXIT_NOT_IDENTIFIED, EXIT_OK

from .logging_manager import log_event, log_exception


class AuctionToolkitError(Exception):
    """工具組錯誤基類"""
    pass


class DomainError(AuctionToolkitError, ValueError):
    """參數超出定義域（例如 α ∉ [0,1]）"""
    pass


class ConfigError(AuctionToolkitError):
    """設定檔或旗標不合法"""
    pass


class MissingObservableError(AuctionToolkitError):
    """估計器需要的觀察項目不在資料中"""
    pass


class NotIdentifiedError(AuctionToolkitError):
    """在目前資訊結構下，截斷水準無法識別"""
    pass


class InconsistentDataError(AuctionToolkitError):
    """資料與模型假設不一致"""
    pass


class RootBracketError(InconsistentDataError):
    """求根區間兩端同號，方程式無解"""
    pass


class RegularityError(AuctionToolkitError):
    """價值分佈不規則（虛擬價值非遞增）"""
    pass


class EmptySampleError(InconsistentDataError):
    """樣本為空，無法計算分位數"""
    pass


class DataIOError(AuctionToolkitError):
    """資料檔讀寫失敗"""
    pass


class ErrorHandler:
    """統一錯誤處理器"""

    # 錯誤類型對應的用戶友善訊息
    ERROR_MESSAGES: Dict[str, Dict[str, Any]] = {
        "ConfigError": {
            "icon": "⚙️",
            "title": "設定錯誤",
            "message": "設定檔或命令列參數不合法，請檢查欄位內容",
            "exit_code": EXIT_CONFIG,
        },
        "DomainError": {
            "icon": "📐",
            "title": "參數超出定義域",
            "message": "輸入值不在允許範圍內",
            "exit_code": EXIT_CONFIG,
        },
        "MissingObservableError": {
            "icon": "🔍",
            "title": "缺少觀察項目",
            "message": "所選估計器需要的欄位不在資料中",
            "exit_code": EXIT_CONFIG,
        },
        "NotIdentifiedError": {
            "icon": "🚫",
            "title": "無法識別",
            "message": "在目前的資訊結構下，截斷水準無法由資料唯一決定",
            "exit_code": EXIT_NOT_IDENTIFIED,
        },
        "InconsistentDataError": {
            "icon": "⚠️",
            "title": "資料不一致",
            "message": "資料與模型假設矛盾，請檢查資料來源",
            "exit_code": EXIT_INCONSISTENT,
        },
        "RootBracketError": {
            "icon": "🎯",
            "title": "方程式無解",
            "message": "觀察到的統計量超出理論範圍，無法反解",
            "exit_code": EXIT_INCONSISTENT,
        },
        "EmptySampleError": {
            "icon": "📭",
            "title": "樣本為空",
            "message": "沒有可用的成交紀錄",
            "exit_code": EXIT_INCONSISTENT,
        },
        "RegularityError": {
            "icon": "📉",
            "title": "分佈不規則",
            "message": "虛擬價值並非遞增，最適篩選條件不保證成立",
            "exit_code": EXIT_INCONSISTENT,
        },
        "DataIOError": {
            "icon": "💾",
            "title": "讀寫失敗",
            "message": "無法讀取或寫入資料檔",
            "exit_code": EXIT_IO,
        },
        "UnknownError": {
            "icon": "🐛",
            "title": "未預期錯誤",
            "message": "發生未知錯誤，請查看日誌",
            "exit_code": 1,
        },
    }

    @staticmethod
    def get_error_type(error: Exception) -> str:
        """
        判斷錯誤類型

        Args:
            error: 異常物件

        Returns:
            ERROR_MESSAGES 的鍵
        """
        for cls in type(error).__mro__:
            if cls.__name__ in ErrorHandler.ERROR_MESSAGES:
                return cls.__name__

        # Pydantic 驗證錯誤視為設定錯誤
        if "pydantic" in str(type(error).__module__):
            return "ConfigError"

        if isinstance(error, (OSError, UnicodeDecodeError)):
            return "DataIOError"

        return "UnknownError"

    @staticmethod
    def exit_code_for(error: Exception) -> int:
        error_type = ErrorHandler.get_error_type(error)
        return ErrorHandler.ERROR_MESSAGES[error_type]["exit_code"]

    @staticmethod
    def format_error(error: Exception, context: str = "") -> str:
        """
        組合用戶友善的錯誤訊息

        Args:
            error: 異常物件
            context: 錯誤上下文（例如：「識別時」）
        """
        error_type = ErrorHandler.get_error_type(error)
        info = ErrorHandler.ERROR_MESSAGES[error_type]
        title = f"{info['icon']} {info['title']}"
        if context:
            title = f"{title}（{context}）"
        return f"{title}\n{info['message']}\n詳細：{error}"

    @staticmethod
    def display_error(error: Exception, context: str = "") -> None:
        print(ErrorHandler.format_error(error, context), file=sys.stderr)


def handle_cli_errors(context: str = ""):
    """
    裝飾器：把子命令的例外轉成訊息與結束代碼

    被裝飾的函式回傳 int 結束代碼；發生可預期錯誤時改回傳對應代碼。

    Args:
        context: 錯誤上下文描述
    """
    def decorator(func: Callable[..., int]) -> Callable[..., int]:
        @wraps(func)
        def wrapper(*args, **kwargs) -> int:
            try:
                code = func(*args, **kwargs)
                return EXIT_OK if code is None else code
            except KeyboardInterrupt:
                raise
            except Exception as error:
                error_type = ErrorHandler.get_error_type(error)
                if error_type == "UnknownError":
                    log_exception(error, context or func.__name__)
                else:
                    log_event("cli_error", {"context": context, "type": error_type, "detail": str(error)})
                ErrorHandler.display_error(error, context=context)
                return ErrorHandler.exit_code_for(error)

        return wrapper

    return decorator


__all__ = [
    "AuctionToolkitError",
    "ConfigError",
    "DataIOError",
    "DomainError",
    "EmptySampleError",
    "ErrorHandler",
    "InconsistentDataError",
    "MissingObservableError",
    "NotIdentifiedError",
    "RegularityError",
    "RootBracketError",
    "handle_cli_errors",
]
