"""
Config Package untuk CrowdCast
"""

from .settings import (
    APP_NAME, APP_VERSION, APP_AUTHOR, APP_DESCRIPTION,
    DATASET_CONFIG, MODEL_CONFIG, TRAIN_CONFIG, GRADCHECK_CONFIG,
    LOG_CONFIG, EXPORT_CONFIG, ERROR_MESSAGES, SUCCESS_MESSAGES
)

__all__ = [
    'APP_NAME', 'APP_VERSION', 'APP_AUTHOR', 'APP_DESCRIPTION',
    'DATASET_CONFIG', 'MODEL_CONFIG', 'TRAIN_CONFIG', 'GRADCHECK_CONFIG',
    'LOG_CONFIG', 'EXPORT_CONFIG', 'ERROR_MESSAGES', 'SUCCESS_MESSAGES'
]
