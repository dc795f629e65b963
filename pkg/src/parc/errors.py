"""Exception taxonomy shared across the toolkit.

Every error the library raises on bad input is a :class:`ParcError` subclass,
and each subclass carries the process exit code the CLI maps it to.
"""

from __future__ import annotations


class ParcError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(ParcError):
    """Invalid configuration: task specs, config files, CLI arguments."""

    exit_code = 2


class DataError(ParcError):
    """Malformed or inconsistent data: corpora, indices, profiles, fixtures."""

    exit_code = 3


class BackendError(ParcError):
    """Scorer backend failure: fixture miss, protocol violation, transport."""

    exit_code = 4
