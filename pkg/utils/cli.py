"""
命令列入口

子命令：
    simulate   依設定模擬並寫出 dataset.csv / dataset.json
    identify   讀取一或兩組資料，執行估計器並寫出 result.json
    verify     執行驗收測試組並寫出 verify_<suite>.json（檢查失敗仍回傳 0）
    report     把 result.json 或 verify_<suite>.json 排成表格，可另存 CSV

使用方式：
    python main.py simulate --config run.json --seed 7 --out data/runs/a
    python main.py identify data/runs/a/dataset.csv --estimator auto --known-n 2
    python main.py verify table --size 200000
    python main.py report data/runs/a/result.json --csv
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from config.constants import ESTIMATOR_ALIASES, ESTIMATOR_LABELS, EXIT_OK
from config.run_config import ESTIMATOR_REQUIREMENTS, InfoStructureConfig, RunConfig

from .data_loader import read_dataset, resolve_output_dir, write_dataset
from .distributions import (
    SellerPreferences,
    ValueDistribution,
    check_regularity,
    distribution_from_config,
    preferences_from_config,
)
from .equilibrium import AuctionDesign, optimal_screening
from .error_handler import ConfigError, DataIOError, MissingObservableError, handle_cli_errors
from .exporter import export_dataframe, export_json
from .identification import run_estimator
from .logging_manager import log_event, log_warning
from .simulator import InfoStructure, ObservedDataset, PopulationSpec, observe, raw_from_bids, simulate
from .verification import SUITE_NAMES, matrix_frame, run_suite


# ==================== 設定 ====================


def load_config(path: Optional[str], fallback: Optional[Dict[str, Any]] = None) -> RunConfig:
    """讀取設定檔；沒有指定時使用 fallback（例如資料旁檔內嵌的設定），再退回預設值。"""
    if path:
        config_path = Path(path).expanduser()
        if not config_path.exists():
            raise DataIOError(f"找不到設定檔：{config_path}")
        return RunConfig.from_json(config_path)
    if fallback:
        return RunConfig.from_dict(fallback)
    return RunConfig()


def build_primitives(
    config: RunConfig,
) -> Tuple[ValueDistribution, SellerPreferences, AuctionDesign, PopulationSpec, InfoStructure]:
    """由設定建立模擬需要的物件；optimal_screening 時以賣方最適 α* 當保留價分位。"""
    dist = distribution_from_config(config.distribution)
    prefs = preferences_from_config(config.preferences)
    population = PopulationSpec(support=tuple(tuple(pair) for pair in config.population.support))
    info = InfoStructure(**config.info.model_dump())

    regularity = check_regularity(dist)
    if not regularity.is_regular:
        log_warning("irregular_distribution", "虛擬價值非遞增", {"violations": regularity.violations[:5]})

    design_cfg = config.design
    if design_cfg.truncation == "entry_cost":
        level = float(design_cfg.entry_cost)
    elif design_cfg.optimal_screening:
        level = optimal_screening(
            dist, prefs, design_cfg.format, int(population.sizes.max()), reject_irregular=config.tuning.reject_irregular
        )
    else:
        level = float(design_cfg.alpha0)
    return dist, prefs, AuctionDesign(design_cfg.format, design_cfg.truncation, level), population, info


def check_requirements(estimator: str, datasets: Sequence[ObservedDataset], known_n: List[int]) -> None:
    """估計器需要的觀察項目必須出現在資料中。"""
    if estimator == "auto":
        return
    if estimator not in ESTIMATOR_REQUIREMENTS:
        raise ConfigError(f"未知的估計器：{estimator}（可用：auto, {', '.join(ESTIMATOR_LABELS)}）")
    needs = ESTIMATOR_REQUIREMENTS[estimator]
    label = ESTIMATOR_LABELS[estimator]
    if needs.get("observe_nobs") and not all(ds.has_nobs for ds in datasets):
        raise MissingObservableError(f"{estimator}（{label}）需要出價人數 n_obs")
    if needs.get("observe_invalid_count") and not all(ds.info.observe_invalid_count for ds in datasets):
        raise MissingObservableError(f"{estimator}（{label}）需要流標數 L_invalid")
    if len(known_n) < needs.get("known_n", 0):
        raise ConfigError(f"{estimator}（{label}）需要 {needs['known_n']} 個 --known-n")


# ==================== simulate ====================


def _replay_types_file(path: str, config: RunConfig) -> ObservedDataset:
    """以固定出價重播：{"reserve": 2.5, "bids": [[3, 4], [2, 3], [1, 2]], "format": "second_price"}。"""
    types_path = Path(path).expanduser()
    try:
        data = json.loads(types_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as error:
        raise DataIOError(f"無法讀取 types 檔 {types_path}：{error}") from error
    if "bids" not in data:
        raise ConfigError("types 檔需要 bids 欄位")
    fmt = data.get("format", config.design.format)
    batch = raw_from_bids(data["bids"], fmt, float(data.get("reserve", 0.0)), config.design.truncation)
    return observe(batch, InfoStructure(**config.info.model_dump()))


def _share_table(ds: ObservedDataset) -> pd.DataFrame:
    counts = ds.frame["n_obs"].value_counts().sort_index()
    total = ds.L + (ds.L_invalid or 0)
    table = pd.DataFrame({"n_obs": counts.index.astype(int), "count": counts.to_numpy()})
    if ds.L_invalid is not None:
        table = pd.concat([pd.DataFrame({"n_obs": [0], "count": [ds.L_invalid]}), table], ignore_index=True)
    table["share"] = table["count"] / total if total else 0.0
    return table


@handle_cli_errors(context="模擬")
def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config).with_overrides(seed=args.seed, out_dir=args.out, L_total=args.size)
    if args.types_file:
        ds = _replay_types_file(args.types_file, config)
    else:
        dist, _, design, population, info = build_primitives(config)
        batch = simulate(dist, design, population, config.L_total, config.seed)
        ds = observe(batch, info)

    if ds.L == 0:
        print(log_warning("empty_dataset", "沒有任何成交紀錄，寫出空資料集", {"L_total": config.L_total}))

    out_dir = resolve_output_dir(config.output.out_dir)
    path = write_dataset(ds, out_dir / "dataset.csv", config.to_dict())
    print(f"資料集：{path}")
    print(f"L = {ds.L}，L_invalid = {ds.L_invalid if ds.L_invalid is not None else '未觀察'}")
    if ds.has_nobs and ds.L:
        print(_share_table(ds).to_string(index=False))
    return EXIT_OK


# ==================== identify ====================


@handle_cli_errors(context="識別")
def cmd_identify(args: argparse.Namespace) -> int:
    datasets = [read_dataset(path) for path in args.datasets]
    embedded = datasets[0].metadata.get("config")
    base = load_config(args.config, fallback=embedded)
    base = base.model_copy(update={"info": InfoStructureConfig(**datasets[0].info.to_dict())})
    config = base.with_overrides(
        out_dir=args.out,
        estimator=args.estimator,
        mass_eps=args.mass_eps,
        bandwidth=args.bandwidth,
        grid_step=args.grid_step,
        chain_rule_slope=args.chain_rule_slope,
        known_n=args.known_n,
    )
    fmt = datasets[0].fmt or config.design.format
    truncation = datasets[0].truncation or config.design.truncation
    check_requirements(config.estimator, datasets, list(config.assumptions.known_n))

    result = run_estimator(config.estimator, datasets, config.assumptions, config.tuning, fmt, truncation)
    result.config = config.to_dict()
    out_dir = resolve_output_dir(config.output.out_dir if args.out else str(Path(args.datasets[0]).parent))
    path = export_json(result.model_dump(), out_dir, "result")

    estimate = result.alpha_star
    shown = f"{estimate.point:.4f}" if estimate.is_point else f"集合 {estimate.intervals}"
    print(f"估計器：{result.estimator}（{ESTIMATOR_LABELS.get(result.estimator, '')}）")
    print(f"α* = {shown}")
    if result.entry_cost is not None:
        print(f"F = {result.entry_cost:.4f}")
    for warning in result.diagnostics.warnings:
        print(f"⚠️ {warning}")
    print(f"結果：{path}")
    log_event("identify", {"estimator": result.estimator, "datasets": len(datasets)})
    return EXIT_OK


# ==================== verify / report ====================


def _print_report(payload: Dict[str, Any]) -> pd.DataFrame:
    """印出報告並回傳可存成 CSV 的表格。"""
    if "suite" in payload:
        frame = pd.DataFrame(payload.get("entries", []))
        print(f"測試組 {payload['suite']}：{'通過' if payload.get('passed') else '有失敗項目'}（失敗 {payload.get('failures', 0)} 項）")
        matrix = payload.get("summary", {}).get("matrix")
        if matrix:
            print(pd.DataFrame.from_dict(matrix, orient="index").to_string())
        elif not frame.empty:
            print(frame.loc[:, [c for c in ("name", "passed") if c in frame.columns]].to_string(index=False))
        return frame

    grid = pd.DataFrame(payload.get("v_grid", []), columns=["alpha", "value"])
    band = pd.DataFrame(payload.get("v_band", []), columns=["alpha", "lower", "upper"])
    if not band.empty:
        grid = grid.merge(band, on="alpha", how="outer").sort_values("alpha")
    estimate = payload.get("alpha_star", {})
    print(f"估計器：{payload.get('estimator')}　α*：{estimate.get('point', estimate.get('intervals'))}")
    if payload.get("entry_cost") is not None:
        print(f"F：{payload['entry_cost']}")
    return grid


@handle_cli_errors(context="驗收")
def cmd_verify(args: argparse.Namespace) -> int:
    report = run_suite(args.suite, size=args.size, seed=args.seed)
    out_dir = resolve_output_dir(args.out)
    payload = report.to_dict()
    payload["config"] = RunConfig().with_overrides(seed=args.seed, out_dir=str(out_dir)).to_dict()
    path = export_json(payload, out_dir, f"verify_{args.suite}")
    if args.suite == "table":
        print(matrix_frame(report).to_string())
    _print_report(payload)
    print(f"報告：{path}")
    return EXIT_OK


@handle_cli_errors(context="報告")
def cmd_report(args: argparse.Namespace) -> int:
    path = Path(args.path).expanduser()
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as error:
        raise DataIOError(f"無法讀取 {path}：{error}") from error
    frame = _print_report(payload)
    if args.csv:
        written = export_dataframe(frame, path.parent, path.stem)
        print(f"CSV：{written}")
    return EXIT_OK


# ==================== parser ====================


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="auction-id", description="截斷拍賣的識別工具")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="模擬並寫出資料集")
    sim.add_argument("--config", help="JSON 設定檔")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--size", type=int, help="覆蓋 L_total")
    sim.add_argument("--out", help="輸出目錄")
    sim.add_argument("--types-file", help="以固定出價重播（JSON：reserve、bids）")
    sim.set_defaults(handler=cmd_simulate)

    ident = sub.add_parser("identify", help="識別篩選水準與價值分佈")
    ident.add_argument("datasets", nargs="+", help="資料集 CSV（兩組已知 N 時依 --known-n 的順序）")
    ident.add_argument("--config", help="JSON 設定檔（預設使用資料旁檔內的設定）")
    ident.add_argument("--estimator", choices=["auto", *ESTIMATOR_LABELS, *ESTIMATOR_ALIASES])
    ident.add_argument("--known-n", type=int, action="append", help="已知出價人數，可重複")
    ident.add_argument("--mass-eps", type=float)
    ident.add_argument("--bandwidth", type=float)
    ident.add_argument("--grid-step", type=float)
    ident.add_argument(
        "--prop2-chainrule", "--chain-rule-slope", dest="chain_rule_slope", action="store_true", help="第一價格價值回推改用鏈鎖律斜率"
    )
    ident.add_argument("--out", help="輸出目錄（預設與資料集相同）")
    ident.set_defaults(handler=cmd_identify)

    ver = sub.add_parser("verify", help="執行驗收測試組")
    ver.add_argument("suite", choices=SUITE_NAMES)
    ver.add_argument("--size", type=int, help="每個模擬的場次")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--out", help="輸出目錄")
    ver.set_defaults(handler=cmd_verify)

    rep = sub.add_parser("report", help="把結果或驗收報告排成表格")
    rep.add_argument("path")
    rep.add_argument("--csv", action="store_true", help="同時寫出 CSV")
    rep.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())


__all__ = [
    "build_parser",
    "build_primitives",
    "check_requirements",
    "cmd_identify",
    "cmd_report",
    "cmd_simulate",
    "cmd_verify",
    "load_config",
    "main",
]
