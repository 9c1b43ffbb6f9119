"""Covert multi-modality transmission: detection error analysis and modality selection."""

from .dep import DepReport, dep_exact_known, dep_report
from .montecarlo import McConfig, McEstimate, estimate_dep, run_sweep
from .scenario import ChannelRealization, Scenario, default_scenario, realize_channels
from .selection import CsiLevel, Knowledge, SelectionOutcome, Strategy

__all__ = [
    "ChannelRealization", "CsiLevel", "DepReport", "Knowledge", "McConfig", "McEstimate",
    "Scenario", "SelectionOutcome", "Strategy", "dep_exact_known", "dep_report",
    "default_scenario", "estimate_dep", "realize_channels", "run_sweep",
]
