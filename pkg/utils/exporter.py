"""匯出工具：識別結果、驗收報告與表格。"""

from __future__ import annotations

import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pandas as pd

from .error_handler import DataIOError
from .logging_manager import log_event


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return None if np.isnan(value) else float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    if hasattr(value, "to_dict"):
        return value.to_dict()
    raise TypeError(f"無法序列化 {type(value).__name__}")


def _target(directory: str | Path, name: str, suffix: str, timestamped: bool) -> Path:
    folder = Path(directory).expanduser()
    folder.mkdir(parents=True, exist_ok=True)
    if timestamped:
        name = f"{name}_{datetime.utcnow().strftime('%Y%m%d_%H%M%S')}"
    return folder / f"{name}{suffix}"


def to_json_text(data: Dict[str, Any]) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2, default=_json_default)


def export_json(data: Dict[str, Any], directory: str | Path, name: str, timestamped: bool = False) -> Path:
    """
    寫出 JSON。

    Args:
        data: 內容（可含 numpy 數值與 pydantic 模型）
        directory: 輸出目錄
        name: 檔名（不含副檔名）
        timestamped: 檔名是否加上 UTC 時間戳；預設不加，同樣的輸入得到同樣的檔案

    Returns:
        檔案路徑
    """
    path = _target(directory, name, ".json", timestamped)
    try:
        path.write_text(to_json_text(data), encoding="utf-8")
    except OSError as error:
        raise DataIOError(f"無法寫入 {path}：{error}") from error
    log_event("export", {"path": str(path)})
    return path


def export_dataframe(df: pd.DataFrame, directory: str | Path, name: str, index: bool = False) -> Path:
    path = _target(directory, name, ".csv", False)
    try:
        df.to_csv(path, index=index)
    except OSError as error:
        raise DataIOError(f"無法寫入 {path}：{error}") from error
    log_event("export", {"path": str(path), "rows": len(df)})
    return path


__all__ = ["export_dataframe", "export_json", "to_json_text"]
