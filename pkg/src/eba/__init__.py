"""Simulation and verification of Eventual Byzantine Agreement under sending omissions."""
from .core import Action, FailurePattern, RunRecord, Scenario
from .protocols import get_protocol
from .simulator import enumerate_runs, generate_run

__all__ = ["Action", "FailurePattern", "RunRecord", "Scenario", "get_protocol", "enumerate_runs", "generate_run"]
