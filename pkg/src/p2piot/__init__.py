"""Task placement for peer-to-peer IoT networks with VM-hosting relays."""

from .model import (
    ConfigurationError,
    EnergyParams,
    Instance,
    Limits,
    Scenario,
    TaskType,
    Topology,
    build_instance,
    generate_capabilities,
    generate_requests,
    generate_topology,
)
from .power import PowerReport, power_report
from .routing import FlowSet, build_flows, check_conservation, min_hop_path
from .solution import Assignment, ViolationReport, derive_rates, validate

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "ConfigurationError",
    "EnergyParams",
    "FlowSet",
    "Instance",
    "Limits",
    "PowerReport",
    "Scenario",
    "TaskType",
    "Topology",
    "ViolationReport",
    "build_flows",
    "build_instance",
    "check_conservation",
    "derive_rates",
    "generate_capabilities",
    "generate_requests",
    "generate_topology",
    "min_hop_path",
    "power_report",
    "validate",
]
