"""
Konfigurasi Aplikasi CrowdCast
File ini berisi semua pengaturan default untuk ingest dataset, model,
training, gradient check, logging, dan export artefak
"""

from datetime import datetime

# ==========================================
# KONFIGURASI APLIKASI
# ==========================================
APP_NAME = "CrowdCast"
APP_VERSION = "1.0.1"
APP_AUTHOR = "CrowdCast Team"
APP_DESCRIPTION = "Prediksi trajektori pejalan kaki dengan LSTM, social pooling, dan attention"

# ==========================================
# KONFIGURASI DATASET
# ==========================================
DATASET_CONFIG = {
    "obs_len": 8,
    "pred_len": 12,
    "frame_period": 0.4,      # detik per frame anotasi (2.5 Hz)
    "frame_step": 0,          # 0 = deteksi otomatis (gcd selisih frame id)
    "stride": 10,
    "split_fractions": (0.8, 0.1, 0.1),
    "default_column_order": ("frame", "ped", "x", "y"),
    "column_presets": {
        "default": ("frame", "ped", "x", "y"),
        "swapped": ("frame", "ped", "y", "x"),
    },
    "presets": {
        "ETH": {"file": "biwi_eth.txt", "columns": "default"},
        "HOTEL": {"file": "biwi_hotel.txt", "columns": "default"},
        "UNIV1": {"file": "students001.txt", "columns": "default"},
        "UNIV3": {"file": "students003.txt", "columns": "default"},
        "ZARA1": {"file": "crowds_zara01.txt", "columns": "default"},
        "ZARA2": {"file": "crowds_zara02.txt", "columns": "default"},
        "SYNTHETIC": {"file": None, "columns": "default"},
    },
    "data_dir": "data",
    "synthetic": {
        "n_peds": 50,
        "n_frames": 3000,
        "noise": 0.01,
        "speed_range": (0.1, 0.4),   # unit per detik
        "spacing": 6.0,
        "frame_step": 10,
        "lifetime": 200,             # frame per track; masuk bergiliran (~300 window, ~3 orang per window)
    },
}

# ==========================================
# KONFIGURASI MODEL
# ==========================================
MODEL_CONFIG = {
    "embedding_dim": 64,
    "hidden_dim": 128,
    "attention_hidden_dim": 100,
    "attention_embedding_dim": 50,
    "attention_mlp_dim": 100,
    "local_map_grid": 4,
    "local_map_cell": 1.0,        # meter
    "pool_grid": 32,
    "pool_window": 8,
    "pool_region_side": 4.0,      # meter
    "attention_input": "scores",  # scores | crowd
    "rho_clamp": 0.999,
    "sigma_floor": 1e-6,
    "lstm_forget_bias": 1.0,      # bias awal gate f
    "log_sigma_max": 80.0,        # raw log sigma di-clamp sebelum exp
}

# ==========================================
# KONFIGURASI TRAINING
# ==========================================
TRAIN_CONFIG = {
    "mode": "attention",
    "epochs": 30,
    "learning_rate": 0.003,
    "rms_decay": 0.99,
    "rms_eps": 1e-8,
    "clip_norm": 10.0,
    "batch_size": 8,
    "dropout": 0.5,
    "seed": 0,
    "out_dir": "runs",
}

# ==========================================
# KONFIGURASI GRADIENT CHECK
# ==========================================
GRADCHECK_CONFIG = {
    "h": 1e-5,
    "tol": 1e-4,
    "floor": 1e-4,
    "max_entries": 12,    # entri yang dicek per parameter
    "seed": 0,
}

# ==========================================
# KONFIGURASI LOGGING
# ==========================================
LOG_CONFIG = {
    "enabled": True,
    "log_dir": "logs",
    "log_file": f"crowdcast_{datetime.now().strftime('%Y%m%d')}.log",
    "max_file_size": 10 * 1024 * 1024,  # 10 MB
    "backup_count": 5,
    "log_level": "INFO",
    "console_output": True
}

# ==========================================
# KONFIGURASI EXPORT
# ==========================================
EXPORT_CONFIG = {
    "excel_engine": "xlsxwriter",
    "csv_encoding": "utf-8",
    "float_format": "%.10g",
    "checkpoint_name": "checkpoint.bin",
    "loss_curve_name": "loss_curve.csv",
    "metrics_name": "metrics.csv",
    "predictions_name": "predictions.csv",
    "manifest_name": "split_manifest.csv",
    "normalized_name": "normalized.txt",
    "report_name": "comparison",
}

# ==========================================
# PESAN ERROR
# ==========================================
ERROR_MESSAGES = {
    "config": "❌ Konfigurasi tidak valid",
    "parse": "❌ File anotasi tidak bisa dibaca",
    "dimension": "❌ Dimensi tensor tidak cocok",
    "non_finite": "❌ Nilai NaN/Inf terdeteksi",
    "checkpoint": "❌ Checkpoint tidak valid",
    "evaluation": "❌ Evaluasi tidak bisa dijalankan",
    "unknown": "❌ Terjadi kesalahan saat menjalankan perintah",
}

# ==========================================
# PESAN SUKSES
# ==========================================
SUCCESS_MESSAGES = {
    "prepared": "✅ Dataset berhasil diproses",
    "trained": "✅ Training selesai",
    "evaluated": "✅ Evaluasi selesai",
    "compared": "✅ Perbandingan selesai",
    "gradcheck": "✅ Gradient check lulus",
    "scores": "✅ Attention scores berhasil diekspor",
}
