"""Finite-key secret-key rates for decoy-state BB84 with per-basis intensities."""
from ._backend import NAME as BACKEND
from .counts import Cell, CountsError, CountsTable
from .decoy import DEFAULT_SETTINGS, LogBase, Settings, VacuumRectangle
from .keyrate import KeyRateReport, rate_3intensity, rate_at, worst_case_rate
from .model import Basis, ConfigError, ProtocolConfig, SourceId, SystemModel, Variant
from .stats import ChernoffArg, ChernoffInterval, chernoff_delta

__all__ = [
    "BACKEND", "Basis", "Cell", "ChernoffArg", "ChernoffInterval", "ConfigError", "CountsError",
    "CountsTable", "DEFAULT_SETTINGS", "KeyRateReport", "LogBase", "ProtocolConfig", "Settings",
    "SourceId", "SystemModel", "VacuumRectangle", "Variant", "chernoff_delta", "rate_3intensity",
    "rate_at", "worst_case_rate",
]
