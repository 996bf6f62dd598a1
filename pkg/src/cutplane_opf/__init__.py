"""Cutting-plane outer approximation of the SOC relaxation of AC optimal power flow."""

from importlib.resources import files

from .network import NetworkCase, load_case, parse_case
from .relaxation import RelaxationOptions, build_base_model
from .driver import DriverParams, RunResult, export_cuts, import_cuts, run

__version__ = "0.1.0"


def fixture_path(name: str):
    """Path of a bundled case or primal-point file."""
    return files(__package__) / "data" / name


__all__ = ["DriverParams", "NetworkCase", "RelaxationOptions", "RunResult", "build_base_model",
           "export_cuts", "fixture_path", "import_cuts", "load_case", "parse_case", "run"]
