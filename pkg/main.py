#!/usr/bin/env python3
"""weylforge - メインエントリーポイント"""

import argparse
import json
import logging
import sys
from pathlib import Path

# プロジェクトルートをPythonパスに追加
sys.path.insert(0, str(Path(__file__).parent))

from src.config.settings import Settings
from src.errors import InputError, WeylforgeError
from src.harness.commands import COMMANDS, RunContext, execute, exit_code
from src.harness.problem import load_problem


def setup_logging(config: Settings):
    """ロギングの設定"""
    logging.basicConfig(
        level=config.logging["level"],
        format=config.logging["format"]
    )


def parse_arguments(argv=None):
    """コマンドライン引数をパース"""
    parser = argparse.ArgumentParser(
        prog="weylforge",
        description="作用角変数チャート上のFedosovスター積の厳密計算ツール"
    )

    parser.add_argument(
        "command",
        choices=sorted(COMMANDS),
        help="実行するコマンド"
    )

    parser.add_argument(
        "--spec",
        type=str,
        required=True,
        help="問題ファイル（YAML/JSON）のパス"
    )

    parser.add_argument(
        "--out",
        type=str,
        help="レポートの出力先（省略時は標準出力）"
    )

    parser.add_argument(
        "--seed",
        type=int,
        help="接続サンプリングの seed（問題ファイルの値を上書き）"
    )

    parser.add_argument(
        "--order",
        type=int,
        help="ℏ の打ち切り次数 N"
    )

    parser.add_argument(
        "--degree",
        type=int,
        help="Weyl 次数の打ち切り D（既定は 2N）"
    )

    parser.add_argument(
        "--allow-shallow-degree",
        action="store_true",
        help="D < 2N を許可（Q_N は切り捨ての可能性ありと表示）"
    )

    parser.add_argument(
        "--format",
        choices=["text", "json"],
        default="text",
        help="レポートの形式"
    )

    parser.add_argument(
        "--save",
        type=str,
        nargs="?",
        const="",
        help="構成した状態・テーブルの保存先（パス省略時は設定ファイルの output）"
    )

    parser.add_argument(
        "--config",
        type=str,
        help="設定ファイルのパス"
    )

    parser.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="ログレベル"
    )

    return parser.parse_args(argv)


def render(report, fmt: str) -> str:
    """レポートを文字列化（同じ入力なら同じ出力）"""
    if fmt == "json":
        return json.dumps(report.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    return report.to_text() + "\n"


def main(argv=None):
    """メイン処理"""
    # 引数解析
    args = parse_arguments(argv)

    # 設定読み込み
    config = Settings(args.config)

    # ログレベルの上書き
    if args.log_level:
        config._config.setdefault("logging", {})["level"] = args.log_level

    # ロギング設定
    setup_logging(config)
    logger = logging.getLogger(__name__)

    if args.seed is not None and args.seed < 0:
        logger.error("--seed must be a non-negative integer")
        return InputError.exit_code

    save = args.save
    if save == "":
        save = config.output["table_file" if args.command == "star-table" else "state_file"]

    ctx = RunContext(
        config=config,
        order=args.order,
        degree=args.degree,
        allow_shallow=args.allow_shallow_degree,
        seed=args.seed,
        save=save,
    )

    try:
        spec = load_problem(args.spec, config)
        report = execute(spec, args.command, ctx)
    except WeylforgeError as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        if e.detail is not None:
            logger.debug(f"detail: {e.detail}")
        return e.exit_code

    output = render(report, args.format)
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(output, encoding="utf-8")
        logger.info(f"Report written to {path}")
    else:
        sys.stdout.write(output)

    code = exit_code(report)
    if code:
        logger.warning(f"{args.command}: verification failed ({', '.join(report.violations)})")
    return code


if __name__ == "__main__":
    sys.exit(main())
