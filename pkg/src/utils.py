"""
Utility Functions untuk CrowdCast
Berisi logger, hierarki exception, dan helper I/O yang digunakan di seluruh aplikasi
"""

import os
import io
import logging
import hashlib
from logging.handlers import RotatingFileHandler
from typing import Dict, List, Any, Optional, Tuple, Mapping

import pandas as pd

from config.settings import LOG_CONFIG, EXPORT_CONFIG, APP_VERSION


# ==========================================
# LOGGER SETUP
# ==========================================
def setup_logger(name: str = "CROWDCAST", level: Optional[str] = None,
                 console: Optional[bool] = None) -> logging.Logger:
    """
    Setup logger dengan konfigurasi yang fleksibel

    Args:
        name: Nama logger
        level: Override level logging (default dari LOG_CONFIG)
        console: Override output ke console

    Returns:
        Logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, (level or LOG_CONFIG["log_level"]).upper()))

    # Clear existing handlers
    logger.handlers = []

    formatter = logging.Formatter(
        '%(asctime)s | %(name)s | %(levelname)s | %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    if LOG_CONFIG["enabled"]:
        log_dir = LOG_CONFIG["log_dir"]
        os.makedirs(log_dir, exist_ok=True)
        log_path = os.path.join(log_dir, LOG_CONFIG["log_file"])

        file_handler = RotatingFileHandler(
            log_path,
            maxBytes=LOG_CONFIG["max_file_size"],
            backupCount=LOG_CONFIG["backup_count"],
            encoding='utf-8'
        )
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    if LOG_CONFIG["console_output"] if console is None else console:
        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    return logger


# Global logger instance
logger = setup_logger()


# ==========================================
# EXCEPTIONS
# ==========================================
class CrowdcastError(ValueError):
    """Root semua error kontrak di CrowdCast"""


class DimensionError(CrowdcastError):
    """Shape tensor tidak sesuai kontrak"""


class ConfigError(CrowdcastError):
    """Nilai konfigurasi di luar rentang yang valid"""


class ParseError(CrowdcastError):
    """Baris input tidak bisa di-parse"""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class NonFiniteError(CrowdcastError):
    """NaN/Inf muncul di tensor, gradient, atau aktivasi"""


class CheckpointError(CrowdcastError):
    """File checkpoint rusak, versi tidak dikenal, atau shape tidak cocok"""


class TrainingDivergedError(NonFiniteError):
    """Loss training menjadi non-finite"""

    def __init__(self, epoch: int, step: int, loss: float):
        self.epoch = epoch
        self.step = step
        super().__init__(f"loss diverged at epoch {epoch}, step {step}: {loss}")


class EvaluationError(CrowdcastError):
    """Evaluasi tidak valid (split kosong atau tidak identik)"""


# ==========================================
# SECURITY / IDENTITY UTILITIES
# ==========================================
def generate_hash(data: str) -> str:
    """
    Generate hash dari string

    Args:
        data: String yang akan di-hash

    Returns:
        Hash string
    """
    return hashlib.sha256(data.encode()).hexdigest()


# ==========================================
# PERFORMANCE UTILITIES
# ==========================================
def chunk_list(lst: List, chunk_size: int) -> List[List]:
    """
    Bagi list menjadi chunk

    Args:
        lst: List yang akan di-chunk
        chunk_size: Ukuran setiap chunk

    Returns:
        List of chunks
    """
    if chunk_size <= 0:
        raise ConfigError(f"chunk_size harus positif, bukan {chunk_size}")
    return [lst[i:i + chunk_size] for i in range(0, len(lst), chunk_size)]


def format_duration(seconds: float) -> str:
    """Format durasi ke string"""
    if seconds < 60:
        return f"{seconds:.2f} detik"
    elif seconds < 3600:
        minutes = int(seconds // 60)
        secs = int(seconds % 60)
        return f"{minutes} menit {secs} detik"
    else:
        hours = int(seconds // 3600)
        minutes = int((seconds % 3600) // 60)
        return f"{hours} jam {minutes} menit"


# ==========================================
# VALIDATION UTILITIES
# ==========================================
def validate_file_extension(filename: str, allowed_extensions: List[str] = None) -> bool:
    """
    Validasi ekstensi file

    Args:
        filename: Nama file
        allowed_extensions: List ekstensi yang diizinkan

    Returns:
        True jika valid
    """
    if allowed_extensions is None:
        allowed_extensions = ['.txt', '.csv', '.tsv']

    ext = os.path.splitext(filename.lower())[1]
    return ext in allowed_extensions


# ==========================================
# KEY=VALUE UTILITIES
# ==========================================
def parse_key_value_text(text: str) -> List[Tuple[int, str, str]]:
    """
    Parse teks key=value (komentar '#' dan baris kosong diabaikan)

    Args:
        text: Isi file konfigurasi

    Returns:
        List tuple (nomor baris, key, value)
    """
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"line {line_no}: expected key=value, got {raw!r}")
        key, value = line.split('=', 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {line_no}: empty key")
        entries.append((line_no, key, value.strip()))
    return entries


def format_header_lines(header: Mapping[str, Any]) -> List[str]:
    """
    Format header audit artefak sebagai baris komentar

    Args:
        header: Mapping key -> value (urutan dipertahankan)

    Returns:
        List baris '# key=value'
    """
    lines = [f"# version={APP_VERSION}"]
    for key, value in header.items():
        if key == "version":
            continue
        lines.append(f"# {key}={value}")
    return lines


# ==========================================
# EXPORT UTILITIES
# ==========================================
def export_to_csv(df: pd.DataFrame, path: str, header: Optional[Mapping[str, Any]] = None) -> str:
    """
    Export dataframe ke CSV dengan header audit

    Args:
        df: DataFrame yang akan diexport
        path: Path file output
        header: Header audit (RunConfig + versi)

    Returns:
        Path file yang ditulis
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    buffer = io.StringIO()
    for line in format_header_lines(header or {}):
        buffer.write(line + "\n")
    df.to_csv(buffer, index=False, float_format=EXPORT_CONFIG['float_format'], lineterminator="\n")

    with open(path, "w", encoding=EXPORT_CONFIG['csv_encoding'], newline="") as handle:
        handle.write(buffer.getvalue())

    logger.info(f"Wrote {len(df)} rows to {path}")
    return path


def read_csv_with_header(path: str) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """
    Baca CSV yang ditulis export_to_csv

    Args:
        path: Path file CSV

    Returns:
        Tuple (DataFrame, header dict)
    """
    header: Dict[str, str] = {}
    with open(path, "r", encoding=EXPORT_CONFIG['csv_encoding']) as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                header[key.strip()] = value.strip()

    df = pd.read_csv(path, comment="#")
    return df, header


def export_to_excel(sheets: Mapping[str, pd.DataFrame], path: str,
                    header: Optional[Mapping[str, Any]] = None) -> str:
    """
    Export beberapa dataframe ke satu file Excel

    Args:
        sheets: Mapping nama sheet -> DataFrame
        path: Path file output
        header: Header audit, ditulis di sheet 'Run'

    Returns:
        Path file yang ditulis
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    with pd.ExcelWriter(path, engine=EXPORT_CONFIG['excel_engine']) as writer:
        for sheet_name, df in sheets.items():
            df.to_excel(writer, index=False, sheet_name=sheet_name)

            # Auto-adjust column widths
            worksheet = writer.sheets[sheet_name]
            for i, col in enumerate(df.columns):
                max_length = max(
                    df[col].astype(str).map(len).max() if len(df) else 0,
                    len(str(col))
                ) + 2
                worksheet.set_column(i, i, min(max_length, 50))

        if header is not None:
            rows = [line[2:].split("=", 1) for line in format_header_lines(header)]
            pd.DataFrame(rows, columns=["key", "value"]).to_excel(
                writer, index=False, sheet_name="Run"
            )

    logger.info(f"Wrote workbook with {len(sheets)} sheet(s) to {path}")
    return path

