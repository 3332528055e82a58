"""
常數定義 - 截斷拍賣識別工具組
"""

# ==================== 數值積分與求根 ====================

QUAD_EPSABS = 1e-10          # scipy.integrate.quad 絕對誤差
QUAD_LIMIT = 200             # quad 子區間上限
ROOT_XTOL = 1e-12            # 二分法容忍度
ROOT_MAXITER = 200
GAUSS_LEGENDRE_NODES = 64    # 向量化收益曲線使用的節點數

# ==================== 最適篩選 ====================

SCREENING_LOWER = 1e-9       # 判斷「不設篩選」時的左端點
SCREENING_GRID_SIZE = 10_001 # 收益曲線 argmax 網格
REGULARITY_GRID_SIZE = 1_000 # 檢查虛擬價值單調性的內點數
FOC_TOLERANCE = 1e-8

# ==================== 模擬器 ====================

SIM_BLOCK_SIZE = 65_536      # 每個 Philox 區塊的拍賣數
MASS_TOLERANCE = 1e-12       # 判斷成交價是否等於保留價 / 0 的容忍度

# ==================== 經驗分位數 ====================

BANDWIDTH_SCALE = 0.5        # h = 0.5 n^{-1/5}
BANDWIDTH_EXPONENT = -0.2
SECOND_DERIV_SCALE = 0.25    # h2 = 0.25 n^{-1/3}
SECOND_DERIV_EXPONENT = -1.0 / 3.0

# ==================== 識別估計 ====================

VALUE_GRID_POINTS = 101      # 回報 V̂ 的網格點數
MONOTONE_CHECK_POINTS = 1_000
SUPPORT_TOLERANCE = 0.01     # 兩組資料最低價差距（佔價格區間比例）
TAIL_GAP_TOLERANCE = 0.01    # 上尾支撐檢查
EQUAL_CURVE_TOLERANCE = 0.05 # 兩條價值曲線「相同」的判斷門檻
CURVE_GAP_MARGIN = 0.05      # 比較曲線時避開端點的距離
CURVE_GAP_STEP = 0.01
TAIL_DELTA = 0.02            # 有限 δ 尾端比值
MIN_CELL_ROWS = 50           # 每個 n_obs 類別建議最少筆數

# ==================== 集合識別 ====================

GRID_STEP_1D = 0.002
GRID_STEP_2D = 0.005
SET_SLACK = 0.01             # 相對容忍度 ε
SLACK_REFERENCE_SIZE = 100_000
NOISE_Z = 3.0                # 抽樣雜訊倍數
JACKKNIFE_FOLDS = 10

# ==================== 驗證 ====================

DEFAULT_VERIFY_SIZE = 1_000_000
SMALL_VERIFY_SIZE = 10_000
ROUNDTRIP_TOLERANCE = 0.05     # V̂ 在 {α*+0.05, …, 0.95} 上的最大誤差
TABLE_ALPHA_TOLERANCE = 0.05
COUNTEREXAMPLE_SIZE = 200_000
# 各估計器 α̂* 的容忍度（質量或比例反解較緊，邊界導數較鬆）
ALPHA_TOLERANCES = {
    "sp_fixed_price_only": 0.01,
    "fp_fixed_invalid": 0.01,
    "fixed_nobs": 0.01,
    "vary_known": 0.05,
    "vary_known_first_price": 0.1,
    "fp_vary_unknown": 0.05,
    "entry_fixed": 0.01,
    "entry_vary_unknown": 0.05,
}
SET_CONTAINMENT_STEPS = 2   # 集合包含真值時允許的網格步數
ENTRY_COST_TOLERANCE = 0.05  # |F̂ − F| ≤ 0.05 · V(1)
COUNTEREXAMPLE_CDF_POINTS = (0.55, 0.65, 0.75, 0.85, 0.95)
COUNTEREXAMPLE_TOLERANCE = 0.01
TWIN_GRID_POINTS = 2_001
TWIN_EMPIRICAL_GRID_POINTS = 201  # 經驗分位數的差分網格較粗
TWIN_ALPHAS = (0.2, 0.35, 0.65)
TWIN_DISTINCT_GAP = 0.05
TWIN_SLOPE_TOLERANCE = 0.05

# ==================== 結束代碼 ====================

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_IDENTIFIED = 3
EXIT_INCONSISTENT = 4
EXIT_IO = 5

# ==================== 估計器名稱 ====================

ESTIMATOR_LABELS = {
    "sp_fixed_price_only": "第二價格・固定已知 N・只看成交價（保留價質量）",
    "fp_fixed_invalid": "第一價格・固定已知 N・觀察流標數",
    "fixed_nobs": "固定未知 N・觀察出價人數",
    "vary_known": "兩組已知 N 的資料・只看高於保留價的成交價",
    "fp_vary_unknown": "第一價格・變動未知 N・觀察出價人數",
    "sp_vary_invalid_set": "第二價格・變動未知 N・觀察出價人數與流標數（集合）",
    "entry_fixed": "進場成本・固定已知 N",
    "entry_vary_known_set": "進場成本・兩組已知 N（集合）",
    "entry_vary_unknown": "進場成本・變動未知 N・觀察出價人數",
}

# 編號別名，--estimator 與設定檔都接受
ESTIMATOR_ALIASES = {
    "prop1": "sp_fixed_price_only",
    "prop2": "fp_fixed_invalid",
    "prop3": "fixed_nobs",
    "prop4": "vary_known",
    "prop5": "fp_vary_unknown",
    "prop6": "sp_vary_invalid_set",
    "prop7": "entry_fixed",
    "prop8": "fixed_nobs",
    "prop9": "entry_vary_known_set",
    "prop10": "entry_vary_unknown",
}

# 結論表：列 = 資訊情境，欄 = (格式, 截斷類型)
TABLE_COLUMNS = (
    ("first_price", "reserve"),
    ("second_price", "reserve"),
    ("first_price", "entry_cost"),
    ("second_price", "entry_cost"),
)

TABLE_ROWS = (
    "fixed_known_price",
    "fixed_known_invalid",
    "fixed_unknown_nobs",
    "varying_known_above",
    "varying_unknown_nobs",
    "varying_unknown_nobs_invalid",
)

TABLE_ROW_LABELS = {
    "fixed_known_price": "固定已知 N，只觀察成交價",
    "fixed_known_invalid": "固定已知 N，成交價 + 流標數",
    "fixed_unknown_nobs": "固定未知 N，成交價 + 出價人數",
    "varying_known_above": "N 變動且已知，只觀察高於保留價的成交價",
    "varying_unknown_nobs": "N 變動且未知，成交價 + 出價人數",
    "varying_unknown_nobs_invalid": "N 變動且未知，成交價 + 出價人數 + 流標數",
}

# (status, estimator)；status ∈ point / set / none
CONCLUSION_TABLE = {
    ("fixed_known_price", "first_price", "reserve"): ("none", None),
    ("fixed_known_price", "second_price", "reserve"): ("point", "sp_fixed_price_only"),
    ("fixed_known_price", "first_price", "entry_cost"): ("none", None),
    ("fixed_known_price", "second_price", "entry_cost"): ("point", "entry_fixed"),
    ("fixed_known_invalid", "first_price", "reserve"): ("point", "fp_fixed_invalid"),
    ("fixed_known_invalid", "second_price", "reserve"): ("point", "sp_fixed_price_only"),
    ("fixed_known_invalid", "first_price", "entry_cost"): ("point", "entry_fixed"),
    ("fixed_known_invalid", "second_price", "entry_cost"): ("point", "entry_fixed"),
    ("fixed_unknown_nobs", "first_price", "reserve"): ("point", "fixed_nobs"),
    ("fixed_unknown_nobs", "second_price", "reserve"): ("point", "fixed_nobs"),
    ("fixed_unknown_nobs", "first_price", "entry_cost"): ("point", "fixed_nobs"),
    ("fixed_unknown_nobs", "second_price", "entry_cost"): ("point", "fixed_nobs"),
    ("varying_known_above", "first_price", "reserve"): ("point", "vary_known"),
    ("varying_known_above", "second_price", "reserve"): ("point", "vary_known"),
    ("varying_known_above", "first_price", "entry_cost"): ("set", "entry_vary_known_set"),
    ("varying_known_above", "second_price", "entry_cost"): ("set", "entry_vary_known_set"),
    ("varying_unknown_nobs", "first_price", "reserve"): ("point", "fp_vary_unknown"),
    ("varying_unknown_nobs", "second_price", "reserve"): ("none", None),
    ("varying_unknown_nobs", "first_price", "entry_cost"): ("point", "entry_vary_unknown"),
    ("varying_unknown_nobs", "second_price", "entry_cost"): ("set", "entry_vary_unknown"),
    ("varying_unknown_nobs_invalid", "first_price", "reserve"): ("point", "fp_vary_unknown"),
    ("varying_unknown_nobs_invalid", "second_price", "reserve"): ("set", "sp_vary_invalid_set"),
    ("varying_unknown_nobs_invalid", "first_price", "entry_cost"): ("point", "entry_vary_unknown"),
    ("varying_unknown_nobs_invalid", "second_price", "entry_cost"): ("set", "entry_vary_unknown"),
}

# ==================== 輸出 ====================

DEFAULT_OUTPUT_DIR = "data/runs"
DATASET_COLUMNS = ("auction_id", "transaction_price", "n_obs")
CSV_FLOAT_FORMAT = "%.17g"
