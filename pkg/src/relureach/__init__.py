"""Exact reachable sets and safety verification for ReLU networks."""

from .geometry import AffineRegion, Polyhedron, UnionOfPolyhedra
from .netmodel import Layer, Network, forward, load_network, random_network, save_network
from .reach import ReachSet, ReachStats, export_reach, network_reach, relu_function_reach
from .verify import SafetySpec, Verdict, unsafe_from_infinity_ball, verify_network

__version__ = "0.1.0"

__all__ = [
    "AffineRegion", "Polyhedron", "UnionOfPolyhedra", "Layer", "Network", "forward",
    "load_network", "random_network", "save_network", "ReachSet", "ReachStats",
    "export_reach", "network_reach", "relu_function_reach", "SafetySpec", "Verdict",
    "unsafe_from_infinity_ball", "verify_network",
]
