"""Shared failure types that map to domain errors at the service and CLI."""

from __future__ import annotations


class DomainFailure(Exception):
    """Input is well-formed but unusable: bad config values, empty compiling
    space, or a trace the objective cannot score."""


class ConfigInvalid(DomainFailure):
    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(f"{v.name}: {v.reason}" for v in self.violations)
        super().__init__(f"invalid config: {detail}")


class EmptyCompilingSpace(DomainFailure):
    """No resource assignment fits the pipeline: the program is over-large."""


class UnusableTrace(DomainFailure):
    """The trace produced no measurements for the requested objective."""
