"""
執行設定模型

所有 CLI 子命令共用同一份 RunConfig：
- 從 JSON 檔載入（`RunConfig.from_json`）
- CLI 旗標覆蓋檔案設定（`with_overrides`）
- 完整解析後的設定會嵌入每一份輸出
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

from .constants import (
    DEFAULT_OUTPUT_DIR,
    ESTIMATOR_ALIASES,
    ESTIMATOR_LABELS,
    GRID_STEP_1D,
    GRID_STEP_2D,
    JACKKNIFE_FOLDS,
    NOISE_Z,
    SET_SLACK,
    TAIL_DELTA,
    EQUAL_CURVE_TOLERANCE,
)

load_dotenv()


class DistributionConfig(BaseModel):
    family: Literal["uniform", "shifted_uniform", "power_law", "tabulated"] = Field(
        default="uniform", description="價值分佈族"
    )
    lo: float = Field(default=0.0, description="價值下界")
    hi: float = Field(default=1.0, description="價值上界")
    exponent: Optional[float] = Field(default=None, description="power_law 的指數 k")
    alphas: Optional[List[float]] = Field(default=None, description="tabulated 分位點")
    values: Optional[List[float]] = Field(default=None, description="tabulated 對應價值")


class PreferencesConfig(BaseModel):
    utility: Literal["risk_neutral", "crra", "tabulated"] = Field(default="risk_neutral", description="賣方效用")
    rho: Optional[float] = Field(default=None, description="CRRA 參數 ρ ∈ (0,1]，U(x)=x^ρ")
    xs: Optional[List[float]] = Field(default=None, description="tabulated 效用的 x 節點")
    us: Optional[List[float]] = Field(default=None, description="tabulated 效用值")
    outside_option: float = Field(default=0.0, description="賣方保留價值 V0")


class DesignConfig(BaseModel):
    format: Literal["first_price", "second_price"] = Field(default="second_price", description="拍賣格式")
    truncation: Literal["reserve", "entry_cost"] = Field(default="reserve", description="截斷類型")
    alpha0: Optional[float] = Field(default=None, description="篩選水準（保留價對應的分位）")
    entry_cost: Optional[float] = Field(default=None, description="進場成本 F")
    optimal_screening: bool = Field(default=False, description="以賣方最適篩選水準取代 alpha0")

    @model_validator(mode="after")
    def _check_level(self) -> "DesignConfig":
        if self.truncation == "reserve":
            if not self.optimal_screening and self.alpha0 is None:
                raise ValueError("保留價設計需要 alpha0（或啟用 optimal_screening）")
            if self.alpha0 is not None and not 0.0 <= self.alpha0 < 1.0:
                raise ValueError("alpha0 必須位於 [0, 1)")
        else:
            if self.entry_cost is None or self.entry_cost <= 0:
                raise ValueError("進場成本設計需要正的 entry_cost")
        return self


class PopulationConfig(BaseModel):
    support: List[Tuple[int, float]] = Field(
        default_factory=lambda: [(2, 1.0)], description="潛在出價人數分佈 [(N, 機率)]"
    )

    @model_validator(mode="after")
    def _check_pmf(self) -> "PopulationConfig":
        if not self.support:
            raise ValueError("人數分佈不可為空")
        total = 0.0
        for n, p in self.support:
            if n < 1:
                raise ValueError("出價人數必須 ≥ 1")
            if p < 0:
                raise ValueError("機率不可為負")
            total += p
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"人數分佈機率總和須為 1（目前 {total}）")
        return self


class InfoStructureConfig(BaseModel):
    observe_price: bool = Field(default=True, description="是否觀察成交價（必須為 True）")
    observe_nobs: bool = Field(default=False, description="是否觀察有效出價人數")
    observe_invalid_count: bool = Field(default=False, description="是否觀察流標場次數")
    drop_at_reserve: bool = Field(default=False, description="只保留高於保留價的成交紀錄")

    @model_validator(mode="after")
    def _price_required(self) -> "InfoStructureConfig":
        if not self.observe_price:
            raise ValueError("observe_price 必須為 True")
        return self


class AssumptionsConfig(BaseModel):
    known_n: List[int] = Field(default_factory=list, description="分析者已知的出價人數（每組資料一個）")
    varying_n: bool = Field(default=False, description="分析者是否認定 N 會在拍賣間變動")


class TuningConfig(BaseModel):
    bandwidth: Optional[float] = Field(default=None, description="分位數導數帶寬（預設 0.5 n^{-1/5}）")
    mass_eps: float = Field(default=0.0, description="判斷點質量時的容忍度")
    grid_step_1d: float = Field(default=GRID_STEP_1D, gt=0, lt=1)
    grid_step_2d: float = Field(default=GRID_STEP_2D, gt=0, lt=1)
    set_slack: float = Field(default=SET_SLACK, ge=0, description="集合識別相對容忍度 ε")
    scale_slack: bool = Field(default=True, description="ε 是否隨樣本數以 √(L_ref/L) 縮放")
    noise_z: float = Field(default=NOISE_Z, ge=0, description="抽樣雜訊倍數 z")
    jackknife: bool = Field(default=False, description="點估計是否附上 jackknife 標準誤")
    jackknife_folds: int = Field(default=JACKKNIFE_FOLDS, ge=2)
    tail_delta: float = Field(default=TAIL_DELTA, gt=0, lt=1)
    equal_curve_tolerance: float = Field(default=EQUAL_CURVE_TOLERANCE, gt=0)
    chain_rule_slope: bool = Field(
        default=False, description="第一價格價值回推使用鏈鎖律斜率（預設沿用原始公式）"
    )
    reject_irregular: bool = Field(default=False, description="分佈不規則時直接報錯")


class OutputConfig(BaseModel):
    out_dir: str = Field(
        default_factory=lambda: os.getenv("AUCTION_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR,
        description="輸出目錄",
    )


# 各估計器需要的觀察項目
ESTIMATOR_REQUIREMENTS: Dict[str, Dict[str, Any]] = {
    "sp_fixed_price_only": {"known_n": 1},
    "fp_fixed_invalid": {"known_n": 1, "observe_invalid_count": True},
    "fixed_nobs": {"observe_nobs": True},
    "vary_known": {"known_n": 2},
    "fp_vary_unknown": {"observe_nobs": True},
    "sp_vary_invalid_set": {"observe_nobs": True, "observe_invalid_count": True},
    "entry_fixed": {"known_n": 1},
    "entry_vary_known_set": {"known_n": 2},
    "entry_vary_unknown": {"observe_nobs": True},
}


class RunConfig(BaseModel):
    distribution: DistributionConfig = Field(default_factory=DistributionConfig)
    preferences: PreferencesConfig = Field(default_factory=PreferencesConfig)
    design: DesignConfig = Field(default_factory=lambda: DesignConfig(alpha0=0.5))
    population: PopulationConfig = Field(default_factory=PopulationConfig)
    info: InfoStructureConfig = Field(default_factory=InfoStructureConfig)
    assumptions: AssumptionsConfig = Field(default_factory=AssumptionsConfig)
    L_total: int = Field(default=10_000, ge=0, description="模擬拍賣場次")
    seed: int = Field(default=0, ge=0, description="亂數種子")
    estimator: str = Field(default="auto", description="識別估計器名稱或 auto")
    tuning: TuningConfig = Field(default_factory=TuningConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator("estimator", mode="before")
    @classmethod
    def _resolve_alias(cls, value: Any) -> Any:
        return ESTIMATOR_ALIASES.get(value, value) if isinstance(value, str) else value

    @model_validator(mode="after")
    def _check_estimator(self) -> "RunConfig":
        if self.estimator == "auto":
            return self
        if self.estimator not in ESTIMATOR_LABELS:
            raise ValueError(f"未知的估計器：{self.estimator}")
        needs = ESTIMATOR_REQUIREMENTS[self.estimator]
        for flag in ("observe_nobs", "observe_invalid_count"):
            if needs.get(flag) and not getattr(self.info, flag):
                raise ValueError(f"估計器 {self.estimator} 需要資訊結構 {flag}=true")
        known = needs.get("known_n", 0)
        if known and len(self.assumptions.known_n) < known:
            raise ValueError(f"估計器 {self.estimator} 需要 {known} 個已知出價人數（assumptions.known_n）")
        return self

    # ---------- 載入 / 輸出 ----------

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        text = Path(path).expanduser().read_text(encoding="utf-8")
        return cls.model_validate_json(text)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        return cls.model_validate(data)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    def to_dict(self) -> Dict[str, Any]:
        return json.loads(self.model_dump_json())

    def with_overrides(
        self,
        *,
        seed: Optional[int] = None,
        out_dir: Optional[str] = None,
        estimator: Optional[str] = None,
        mass_eps: Optional[float] = None,
        bandwidth: Optional[float] = None,
        grid_step: Optional[float] = None,
        chain_rule_slope: Optional[bool] = None,
        known_n: Optional[List[int]] = None,
        L_total: Optional[int] = None,
    ) -> "RunConfig":
        """
        以 CLI 旗標覆蓋設定，旗標優先於檔案。

        回傳經過重新驗證的新物件，原物件不變。
        """
        data = self.to_dict()
        if seed is not None:
            data["seed"] = seed
        if L_total is not None:
            data["L_total"] = L_total
        if out_dir is not None:
            data["output"]["out_dir"] = out_dir
        if estimator is not None:
            data["estimator"] = estimator
        if known_n:
            data["assumptions"]["known_n"] = list(known_n)
        tuning = data["tuning"]
        if mass_eps is not None:
            tuning["mass_eps"] = mass_eps
        if bandwidth is not None:
            tuning["bandwidth"] = bandwidth
        if grid_step is not None:
            tuning["grid_step_1d"] = grid_step
            tuning["grid_step_2d"] = grid_step
        if chain_rule_slope:
            tuning["chain_rule_slope"] = True
        return RunConfig.model_validate(data)


__all__ = [
    "AssumptionsConfig",
    "DesignConfig",
    "DistributionConfig",
    "ESTIMATOR_REQUIREMENTS",
    "InfoStructureConfig",
    "OutputConfig",
    "PopulationConfig",
    "PreferencesConfig",
    "RunConfig",
    "TuningConfig",
]
