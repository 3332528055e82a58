"""
截斷拍賣的識別估計器

- fixed_population：固定 N（保留價質量、流標比例、出價人數、進場成本）
- varying_population：N 變動（兩組已知 N、未知 N 的第一價格、第二價格集合識別）
- entry_population：進場成本且 N 變動
- routing：依結論表自動選擇估計器
"""

from .entry_population import id_entry_vary_known_set, id_entry_vary_unknown
from .fixed_population import id_entry_fixed, id_fixed_nobs, id_fp_fixed_invalid, id_sp_fixed_price_only
from .results import AlphaEstimate, Diagnostics, IdentificationResult, monotone_rearrange
from .routing import choose_estimator, classify_information, lookup_estimator, run_estimator
from .varying_population import id_fp_vary_unknown, id_sp_vary_invalid_set, id_vary_known

__all__ = [
    "AlphaEstimate",
    "Diagnostics",
    "IdentificationResult",
    "choose_estimator",
    "classify_information",
    "id_entry_fixed",
    "id_entry_vary_known_set",
    "id_entry_vary_unknown",
    "id_fixed_nobs",
    "id_fp_fixed_invalid",
    "id_fp_vary_unknown",
    "id_sp_fixed_price_only",
    "id_sp_vary_invalid_set",
    "id_vary_known",
    "lookup_estimator",
    "monotone_rearrange",
    "run_estimator",
]
