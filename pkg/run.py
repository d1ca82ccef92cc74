#!/usr/bin/env python3
"""
Run Script untuk CrowdCast
Script ini digunakan untuk menyiapkan dataset, training, evaluasi, dan perbandingan model
"""

import argparse
import subprocess
import sys

from config.settings import APP_NAME, APP_VERSION, ERROR_MESSAGES
from src.commands import (
    cmd_compare, cmd_dump_scores, cmd_eval, cmd_gradcheck, cmd_prepare, cmd_train
)
from src.utils import (
    setup_logger, CheckpointError, ConfigError, CrowdcastError, DimensionError,
    EvaluationError, NonFiniteError, ParseError
)

ERROR_KEYS = [
    (ParseError, "parse"),
    (ConfigError, "config"),
    (DimensionError, "dimension"),
    (NonFiniteError, "non_finite"),
    (CheckpointError, "checkpoint"),
    (EvaluationError, "evaluation"),
]


def run_tests():
    """Run unit tests"""
    print("🧪 Running unit tests...")
    print("=" * 50)

    cmd = [sys.executable, "-m", "unittest", "discover", "tests/", "-v"]

    try:
        return subprocess.run(cmd).returncode
    except Exception as e:
        print(f"❌ Error running tests: {e}")
        return 1


def common_options() -> argparse.ArgumentParser:
    """Flag yang dipakai bersama semua subcommand"""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="File key=value RunConfig")
    parent.add_argument("--dataset", action="append",
                        help="Preset dataset (ETH, HOTEL, UNIV1, UNIV3, ZARA1, ZARA2, SYNTHETIC); compare menerima beberapa")
    parent.add_argument("--data-file", help="File anotasi custom (mengalahkan preset)")
    parent.add_argument("--mode", choices=["attention", "social"], help="Varian model")
    parent.add_argument("--attention-input", choices=["scores", "crowd"],
                        help="Input attention: vektor skor atau crowd feature")
    parent.add_argument("--epochs", type=int, help="Jumlah epoch")
    parent.add_argument("--lr", type=float, help="Learning rate RMSprop")
    parent.add_argument("--dropout", type=float, help="Dropout rate")
    parent.add_argument("--seed", type=int, help="Seed semua RNG")
    parent.add_argument("--frame-period", type=float, help="Detik antar frame anotasi")
    parent.add_argument("--stride", type=int, help="Stride window (frame)")
    parent.add_argument("--scores-file", help="CSV attention score beku")
    parent.add_argument("--out", help="Direktori output run")
    parent.add_argument("--sample", action="store_true", help="Rollout dengan sampling bivariate Gaussian")
    parent.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Level logging")
    parent.add_argument("--quiet", "-q", action="store_true", help="Matikan log ke console")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = common_options()
    parser = argparse.ArgumentParser(
        description=f"{APP_NAME} {APP_VERSION} - Trajectory forecasting dengan attention + social pooling",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run.py prepare --dataset ZARA1 --dump-maps maps.csv
  python run.py train --dataset ZARA1 --mode social --epochs 30
  python run.py train --dataset ZARA1 --mode attention --epochs 30
  python run.py eval --dataset ZARA1 --mode attention
  python run.py compare --dataset ZARA1 --dataset HOTEL
  python run.py gradcheck
  python run.py test
        """
    )
    subparsers = parser.add_subparsers(dest="command", help="Perintah")

    prepare_p = subparsers.add_parser("prepare", parents=[parent], help="Parse, normalisasi, dan split dataset")
    prepare_p.add_argument("--dump-maps", help="Tulis local map per frame ke CSV")

    subparsers.add_parser("train", parents=[parent], help="Training satu mode")

    eval_p = subparsers.add_parser("eval", parents=[parent], help="Evaluasi ADE/FDE di split test")
    eval_p.add_argument("--checkpoint", help="Path checkpoint (default: checkpoint run)")
    eval_p.add_argument("--dump-social", help="Tulis norm cell social tensor ke CSV")

    subparsers.add_parser("compare", parents=[parent], help="Bandingkan mode social vs attention")

    gradcheck_p = subparsers.add_parser("gradcheck", parents=[parent], help="Cek gradient analitik vs numerik")
    gradcheck_p.add_argument("--max-entries", type=int, default=None,
                             help="Entri per parameter (default GRADCHECK_CONFIG[\"max_entries\"])")
    gradcheck_p.add_argument("--all-entries", action="store_true", help="Cek semua entri parameter")

    scores_p = subparsers.add_parser("dump-scores", parents=[parent], help="Ekspor attention score per frame")
    scores_p.add_argument("--checkpoint", help="Checkpoint sumber parameter")
    scores_p.add_argument("--output", help="Path CSV output")

    subparsers.add_parser("test", help="Run unit tests")
    return parser


COMMANDS = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "eval": cmd_eval,
    "compare": cmd_compare,
    "gradcheck": cmd_gradcheck,
    "dump-scores": cmd_dump_scores,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return 1
    if args.command == "test":
        return run_tests()

    logger = setup_logger(level=args.log_level, console=False if args.quiet else None)
    print(f"🚀 {APP_NAME} {APP_VERSION} :: {args.command}")
    print("=" * 50)

    try:
        COMMANDS[args.command](args)
    except CrowdcastError as e:
        key = next((k for kind, k in ERROR_KEYS if isinstance(e, kind)), "unknown")
        logger.error(f"{args.command} failed: {e}")
        print(f"{ERROR_MESSAGES[key]}: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("\n\n👋 Dihentikan.")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
