"""Partially explicit multiscale solver for linear poroelasticity."""

from poroms._core import (
    lame_from_young,
    preset_config,
    report,
    run,
    run_preset,
    solve_fine,
    stability,
    streak_field,
)

__all__ = [
    "lame_from_young",
    "preset_config",
    "report",
    "run",
    "run_preset",
    "solve_fine",
    "stability",
    "streak_field",
]
