"""
Implementasi subcommand CLI CrowdCast
"""

import argparse
import os
from typing import Any, Dict, List

from config.settings import APP_VERSION, GRADCHECK_CONFIG, SUCCESS_MESSAGES
from src.gradcheck import GradCheckReport, GradientChecker
from src.run_config import RunConfig
from src.trainer import Trainer, compare_runs
from src.utils import logger, ConfigError, NonFiniteError

# nama flag CLI -> field RunConfig
FLAG_FIELDS = {
    "dataset": "dataset",
    "mode": "mode",
    "epochs": "epochs",
    "lr": "learning_rate",
    "dropout": "dropout",
    "seed": "seed",
    "frame_period": "frame_period",
    "stride": "stride",
    "scores_file": "scores_file",
    "out": "out_dir",
    "data_file": "data_file",
    "attention_input": "attention_input",
    "sample": "sample",
}


def build_config(args: argparse.Namespace, **extra: Any) -> RunConfig:
    """
    RunConfig dari default -> file --config -> flag

    Args:
        args: Hasil argparse
        extra: Override tambahan

    Returns:
        RunConfig
    """
    overrides: Dict[str, Any] = {}
    for flag, field_name in FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if isinstance(value, list):
            value = value[-1] if value else None
        if flag == "sample" and not value:
            value = None
        overrides[field_name] = value
    overrides.update(extra)
    return RunConfig.load(getattr(args, "config", None), **overrides)


def cmd_prepare(args: argparse.Namespace) -> Dict[str, Any]:
    config = build_config(args)
    trainer = Trainer(config)
    trainer.prepare(dump_maps=args.dump_maps, write_outputs=True)
    stats = trainer.processor.get_stats()
    print(f"{SUCCESS_MESSAGES['prepared']}: {config.dataset}")
    for key, value in stats.items():
        print(f"   {key:12s}: {value}")
    return stats


def cmd_train(args: argparse.Namespace) -> Dict[str, Any]:
    config = build_config(args)
    result = Trainer(config).train()
    print(f"{SUCCESS_MESSAGES['trained']}: {config.dataset} [{config.mode}]")
    print(f"   checkpoint : {result.checkpoint}")
    print(f"   best epoch : {result.best_epoch}")
    if len(result.curve):
        last = result.curve.iloc[-1]
        print(f"   last epoch : train {last['train_loss']:.4f} | val {last['val_loss']:.4f}")
    return {"checkpoint": result.checkpoint, "best_epoch": result.best_epoch}


def cmd_eval(args: argparse.Namespace) -> Dict[str, Any]:
    config = build_config(args)
    result = Trainer(config).evaluate(checkpoint=args.checkpoint, dump_social=args.dump_social)
    summary = result.summary
    print(f"{SUCCESS_MESSAGES['evaluated']}: {config.dataset} [{summary['mode']}]")
    print(f"   {'ADE':4s}: {summary['ADE']:.4f}")
    print(f"   {'FDE':4s}: {summary['FDE']:.4f}")
    print(f"   samples {summary['samples']}, pedestrians {summary['pedestrians']}")
    print(f"   metrics: {result.metrics_path}")
    return summary


def cmd_compare(args: argparse.Namespace) -> Dict[str, Any]:
    datasets: List[str] = args.dataset or []
    if not datasets:
        raise ConfigError("compare needs at least one --dataset")
    config = build_config(args, dataset=None)
    header = {"version": APP_VERSION, "out_dir": config.out_dir, "datasets": ",".join(datasets)}
    report = compare_runs(config.out_dir, datasets, header=header)
    table = report.comparison_table()
    print(f"{SUCCESS_MESSAGES['compared']}")
    print(table.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    return {"ADE": report.improvement("ADE"), "FDE": report.improvement("FDE")}


def build_checker(args: argparse.Namespace) -> GradientChecker:
    """
    GradientChecker dari flag; tanpa --max-entries memakai sampel GRADCHECK_CONFIG

    Args:
        args: Hasil argparse subcommand gradcheck

    Returns:
        GradientChecker
    """
    config = build_config(args)
    if getattr(args, "all_entries", False):
        max_entries = None
    else:
        max_entries = getattr(args, "max_entries", None) or GRADCHECK_CONFIG["max_entries"]
    return GradientChecker(dims=config.model_dims(), seed=config.seed, max_entries=max_entries)


def cmd_gradcheck(args: argparse.Namespace) -> Dict[str, Any]:
    checker = build_checker(args)
    report = GradCheckReport(checker)
    print(report.generate_detailed_report())
    card = report.generate_summary_card()
    if card["status"] != "PASS":
        raise NonFiniteError(f"gradient check failed: worst relative error {card['worst_error']:.3e}")
    print(SUCCESS_MESSAGES["gradcheck"])
    return card


def cmd_dump_scores(args: argparse.Namespace) -> str:
    config = build_config(args)
    path = args.output or os.path.join(config.out_dir, config.dataset, "attention_scores.csv")
    written = Trainer(config).dump_scores(path, checkpoint=args.checkpoint)
    print(f"{SUCCESS_MESSAGES['scores']}: {written}")
    logger.info(f"Attention scores written to {written}")
    return written
