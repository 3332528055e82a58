"""
資料集讀寫

CSV 欄位固定為 auction_id, transaction_price, n_obs（未觀察時留空），
同名 .json 旁檔記錄 L、L_invalid、設計與資訊結構、seed 與完整設定。
旁檔不含時間戳，同一個 seed 重跑會得到位元組相同的檔案。
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd
from dotenv import load_dotenv

from config.constants import CSV_FLOAT_FORMAT, DATASET_COLUMNS, DEFAULT_OUTPUT_DIR

from .error_handler import DataIOError
from .logging_manager import log_event
from .simulator import InfoStructure, ObservedDataset

# 確保在匯入時就載入 .env 參數，便於 CLI 與測試共用
load_dotenv()


def resolve_output_dir(out_dir: str | None = None) -> Path:
    """根據參數與環境變數取得輸出目錄"""
    candidate = out_dir or os.getenv("AUCTION_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR
    path = Path(candidate).expanduser()
    path.mkdir(parents=True, exist_ok=True)
    return path


def sidecar_path(csv_path: Path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_dataset(ds: ObservedDataset, path: str | Path, config: Optional[Dict[str, Any]] = None) -> Path:
    """
    寫出資料集與旁檔。

    Args:
        ds: 觀察資料
        path: CSV 路徑
        config: 解析後的完整設定（嵌入旁檔）

    Returns:
        CSV 路徑
    """
    csv_path = Path(path).expanduser()
    try:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        ds.frame.loc[:, list(DATASET_COLUMNS)].to_csv(csv_path, index=False, float_format=CSV_FLOAT_FORMAT)
        meta = {
            "L": ds.L,
            "L_invalid": ds.L_invalid,
            "format": ds.fmt,
            "truncation_kind": ds.truncation,
            "info_structure": ds.info.to_dict(),
            "seed": ds.seed,
            "config": config if config is not None else ds.metadata.get("config"),
        }
        sidecar_path(csv_path).write_text(json.dumps(meta, ensure_ascii=False, indent=2), encoding="utf-8")
    except OSError as error:
        raise DataIOError(f"無法寫入資料集 {csv_path}：{error}") from error
    log_event("dataset_written", {"path": str(csv_path), "L": ds.L})
    return csv_path


def read_dataset(path: str | Path) -> ObservedDataset:
    """
    讀取資料集。

    沒有旁檔的外部 CSV 也可讀取：n_obs 欄有值即視為觀察到出價人數，
    格式與截斷類型則留空，由設定檔補上。
    """
    csv_path = Path(path).expanduser()
    if not csv_path.exists():
        raise DataIOError(f"找不到資料檔：{csv_path}")
    try:
        frame = pd.read_csv(csv_path, dtype={"auction_id": "int64", "transaction_price": "float64", "n_obs": "Int64"})
    except (OSError, ValueError) as error:
        raise DataIOError(f"無法讀取資料檔 {csv_path}：{error}") from error

    missing = {"auction_id", "transaction_price"} - set(frame.columns)
    if missing:
        raise DataIOError(f"資料檔缺少欄位：{sorted(missing)}")
    if "n_obs" not in frame.columns:
        frame["n_obs"] = pd.array([pd.NA] * len(frame), dtype="Int64")

    meta: Dict[str, Any] = {}
    side = sidecar_path(csv_path)
    if side.exists():
        try:
            meta = json.loads(side.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as error:
            raise DataIOError(f"無法讀取旁檔 {side}：{error}") from error

    if meta.get("info_structure"):
        info = InfoStructure(**meta["info_structure"])
    else:
        has_nobs = bool(len(frame)) and bool(frame["n_obs"].notna().all())
        info = InfoStructure(observe_nobs=has_nobs, observe_invalid_count=meta.get("L_invalid") is not None)

    return ObservedDataset(
        frame=frame.loc[:, list(DATASET_COLUMNS)],
        info=info,
        L_invalid=meta.get("L_invalid"),
        fmt=meta.get("format"),
        truncation=meta.get("truncation_kind"),
        seed=meta.get("seed"),
        metadata={"config": meta.get("config"), "path": str(csv_path)},
    )


__all__ = ["read_dataset", "resolve_output_dir", "sidecar_path", "write_dataset"]
