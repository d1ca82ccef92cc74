"""
Source Package untuk CrowdCast
"""

from .utils import (
    setup_logger, logger,
    CrowdcastError, DimensionError, ConfigError, ParseError, NonFiniteError,
    CheckpointError, TrainingDivergedError, EvaluationError,
    generate_hash, chunk_list, format_duration, validate_file_extension,
    parse_key_value_text, format_header_lines,
    export_to_csv, read_csv_with_header, export_to_excel
)

from .tensor_kernels import LstmState, ParamStore, lstm_cell, rmsprop_step, grad_check
from .checkpoint import save_checkpoint, load_checkpoint
from .data_processor import (
    TrackPoint, Velocity, SequenceSample, DatasetSplits, DatasetProcessor,
    parse_dataset, compute_velocity, build_sequences, split_dataset, generate_synthetic_tracks
)
from .local_map import AgentState, LocalMap, build_local_map, scene_local_maps
from .attention import AttentionScores, ScoreTable, score_neighbors, scene_attention
from .social_pooling import PoolGeometry, build_social_tensor
from .predictor import ModelDims, GaussianParams, AttentionSocialLSTM, init_params, nll_loss
from .analytics import MetricsCalculator, MetricsReport, ReportGenerator, ade, fde, improvement_percent
from .run_config import RunConfig
from .trainer import Trainer, compare_runs
from .gradcheck import GradientChecker, GradCheckReport, CheckLevel

__all__ = [
    # Utils
    'setup_logger', 'logger',
    'CrowdcastError', 'DimensionError', 'ConfigError', 'ParseError', 'NonFiniteError',
    'CheckpointError', 'TrainingDivergedError', 'EvaluationError',
    'generate_hash', 'chunk_list', 'format_duration', 'validate_file_extension',
    'parse_key_value_text', 'format_header_lines',
    'export_to_csv', 'read_csv_with_header', 'export_to_excel',
    # Tensor kernels
    'LstmState', 'ParamStore', 'lstm_cell', 'rmsprop_step', 'grad_check',
    'save_checkpoint', 'load_checkpoint',
    # Dataset
    'TrackPoint', 'Velocity', 'SequenceSample', 'DatasetSplits', 'DatasetProcessor',
    'parse_dataset', 'compute_velocity', 'build_sequences', 'split_dataset', 'generate_synthetic_tracks',
    # Model
    'AgentState', 'LocalMap', 'build_local_map', 'scene_local_maps',
    'AttentionScores', 'ScoreTable', 'score_neighbors', 'scene_attention',
    'PoolGeometry', 'build_social_tensor',
    'ModelDims', 'GaussianParams', 'AttentionSocialLSTM', 'init_params', 'nll_loss',
    # Analytics
    'MetricsCalculator', 'MetricsReport', 'ReportGenerator', 'ade', 'fde', 'improvement_percent',
    # Runs
    'RunConfig', 'Trainer', 'compare_runs',
    'GradientChecker', 'GradCheckReport', 'CheckLevel'
]
