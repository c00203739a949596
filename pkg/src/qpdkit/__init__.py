"""Quantum phase discrimination: Chebyshev-angle QPD circuits, walk-based spatial search and eigenspace filtering."""

from .chebyshev import AngleSchedule, chebyshev_T, make_schedule, quasi_chebyshev, tightened_gap
from .circuit import StateVector, ancilla_response, build_qpd, closed_form_response, max_leak
from .graphs import Graph, GraphSpectrum, graph_from_spec, hitting_time, spectrum
from .phase_filter import TwoSubspaceInstance, effective_gap_check, make_instance, qpd_project
from .eigenfilter import FilterSpec, block_encode_sin, filter_poly
from .search import SearchConfig, SearchTrace, recursive_amplifier, search
from .walks import approx_reflection, ciqw, phase_oracle

__version__ = "0.1.0"

__all__ = [
    "AngleSchedule", "chebyshev_T", "make_schedule", "quasi_chebyshev", "tightened_gap",
    "StateVector", "ancilla_response", "build_qpd", "closed_form_response", "max_leak",
    "Graph", "GraphSpectrum", "graph_from_spec", "hitting_time", "spectrum",
    "TwoSubspaceInstance", "effective_gap_check", "make_instance", "qpd_project",
    "FilterSpec", "block_encode_sin", "filter_poly",
    "SearchConfig", "SearchTrace", "recursive_amplifier", "search",
    "approx_reflection", "ciqw", "phase_oracle",
]
