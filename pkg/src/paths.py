# src/paths.py
from pathlib import Path

# BASE_DIR = корень проекта (папка с requirements.txt)
BASE_DIR = Path(__file__).resolve().parent.parent

# Папка с локальными данными (кэш матриц Грама и журнал запусков)
DATA_DIR = BASE_DIR / "grf_data"

# Куда по умолчанию пишутся отчёты, если ни конфиг, ни --out не задали каталог
DEFAULT_OUTPUT_DIR = BASE_DIR / "grf_output"
