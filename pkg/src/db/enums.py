# src/db/enums.py
from __future__ import annotations

import enum


class RunStatus(str, enum.Enum):
    success = "success"
    verdict_failed = "verdict_failed"
    config_error = "config_error"
    validation_error = "validation_error"
    numerical_error = "numerical_error"
