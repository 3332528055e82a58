"""
工具組共用的日誌設定。

所有模組都經由 `get_logger()` 取得同一個 logger：檔案輸出完整 JSON 事件，
終端機只顯示警告以上。路徑、等級與輪替大小由 `AUCTION_LOG_*` 環境變數控制；
`AUCTION_LOGFIRE=true` 時 `span()` 會轉成 logfire span。
"""

from __future__ import annotations

import json
import logging
import os
from contextlib import contextmanager, nullcontext
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

from dotenv import load_dotenv

load_dotenv()

try:
    import logfire

    LOGFIRE_AVAILABLE = True
except ImportError:
    LOGFIRE_AVAILABLE = False

LOG_FILE = os.getenv("AUCTION_LOG_FILE") or "logs/auction_id.log"
LOG_LEVEL = (os.getenv("AUCTION_LOG_LEVEL") or "INFO").upper()
LOG_MAX_BYTES = int(os.getenv("AUCTION_LOG_MAX_BYTES") or 5 * 1024 * 1024)
LOG_BACKUP_COUNT = int(os.getenv("AUCTION_LOG_BACKUP_COUNT") or 3)
LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"

_loggers: Dict[str, logging.Logger] = {}
_logfire_configured = False


def _handlers() -> List[logging.Handler]:
    """檔案（全部等級，輪替）與 stderr（警告以上，不干擾表格輸出）。"""
    Path(LOG_FILE).expanduser().parent.mkdir(parents=True, exist_ok=True)
    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")

    to_file = RotatingFileHandler(LOG_FILE, maxBytes=LOG_MAX_BYTES, backupCount=LOG_BACKUP_COUNT, encoding="utf-8")
    to_console = logging.StreamHandler()
    to_console.setLevel(logging.WARNING)
    for handler in (to_file, to_console):
        handler.setFormatter(formatter)
    return [to_file, to_console]


def get_logger(name: str = "auction_id") -> logging.Logger:
    """取得具名 logger；第一次呼叫時掛上 handler。"""
    cached = _loggers.get(name)
    if cached is not None:
        return cached
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, LOG_LEVEL, logging.INFO))
    if not logger.handlers:
        for handler in _handlers():
            logger.addHandler(handler)
    _loggers[name] = logger
    return logger


def log_event(event: str, details: Optional[Dict[str, Any]] = None, level: int = logging.INFO) -> None:
    """
    記錄一般事件。

    Args:
        event: 事件名稱
        details: 事件補充資訊
        level: logging 等級
    """
    logger = get_logger()
    payload = {"event": event, **(details or {})}
    logger.log(level, json.dumps(payload, ensure_ascii=False, default=str))


def log_warning(event: str, message: str, details: Optional[Dict[str, Any]] = None) -> str:
    """記錄估計過程中的警告，並回傳訊息以便附加到診斷資訊。"""
    log_event(event, {"message": message, **(details or {})}, level=logging.WARNING)
    return message


def log_exception(error: Exception, context: Optional[str] = None) -> None:
    """記錄例外狀況並附上堆疊。"""
    logger = get_logger()
    message = context or "Toolkit Exception"
    logger.exception("%s | %s", message, str(error))


def log_metric(name: str, value: Any, namespace: str = "auction") -> None:
    """記錄數值型指標（耗時、樣本數等）。"""
    logger = get_logger()
    payload = {
        "metric": name,
        "namespace": namespace,
        "value": value,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    logger.info(json.dumps(payload, ensure_ascii=False, default=str))


def _logfire_enabled() -> bool:
    global _logfire_configured
    if not LOGFIRE_AVAILABLE or os.getenv("AUCTION_LOGFIRE", "false").lower() != "true":
        return False
    if not _logfire_configured:
        logfire.configure(send_to_logfire="if-token-present")
        _logfire_configured = True
    return True


@contextmanager
def span(name: str, **attributes: Any) -> Iterator[None]:
    """包住一段計算；啟用 logfire 時建立 span，否則為空操作。"""
    ctx = logfire.span(name, **attributes) if _logfire_enabled() else nullcontext()
    with ctx:
        yield


__all__ = [
    "LOGFIRE_AVAILABLE",
    "get_logger",
    "log_event",
    "log_exception",
    "log_metric",
    "log_warning",
    "span",
]
