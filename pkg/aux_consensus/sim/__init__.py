"""Deterministic network simulation, fault injection, traces and property checks."""

from .faults import FaultKind, FaultSpec, byzantine_step, parse_fault_spec
from .network import AdversaryPolicy, MessageQueue, SimEvent
from .properties import check_all
from .simulator import InstanceConfig, InstanceResult, Simulator, replay, run_instance
from .trace import Trace, TraceRecord

__all__ = [
    "AdversaryPolicy",
    "FaultKind",
    "FaultSpec",
    "InstanceConfig",
    "InstanceResult",
    "MessageQueue",
    "SimEvent",
    "Simulator",
    "Trace",
    "TraceRecord",
    "byzantine_step",
    "check_all",
    "parse_fault_spec",
    "replay",
    "run_instance",
]
