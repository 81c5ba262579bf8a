"""Positioning error bound and phase-schedule optimization for RIS-aided
indoor localization."""
from .baseline import ebs_schedule, quantize_schedule
from .fim import PebModel, position_fim
from .scenario import Scenario, default_scenario, load_scenario, named_preset, save_scenario
from .schedule import OptimizerReport, PhaseSchedule

__version__ = "0.1.0"
