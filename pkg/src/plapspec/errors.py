"""Exception hierarchy shared by the library and the CLI.

Each error class carries the process exit code the CLI maps it to, so the
command layer can translate failures uniformly (see the table in README).
"""

from __future__ import annotations


class PlapspecError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(PlapspecError):
    """Unreadable, malformed, or corrupt input data (files, containers)."""

    exit_code = 2


class ParameterError(PlapspecError):
    """Invalid parameter value or inconsistent operand shapes/grids."""

    exit_code = 3


class GridError(ParameterError):
    """Grid too small or operand grids incompatible."""


class DegenerateFieldError(ParameterError):
    """Operation undefined on this field (zero field, kernel element)."""


class InstabilityError(PlapspecError):
    """Time integration diverged; a smaller dt is required."""

    exit_code = 4


class ConvergenceError(PlapspecError):
    """Iteration budget exhausted without reaching the convergence target."""

    exit_code = 5
