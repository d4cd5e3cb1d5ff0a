"""Downlink beamforming with redundant shaping beams that attains the SDP bound."""

from .model import BeamformingProblem, build_original_sdp, build_rotated_sdp, build_scenario
from .reelbf import ReelBfSolution, achieved_sinr, run_algorithm1, select_k
from .sdp import SdpSolution, StandardSdp, Status, solve

__version__ = "0.1.0"

__all__ = [
    "BeamformingProblem", "ReelBfSolution", "SdpSolution", "StandardSdp", "Status",
    "achieved_sinr", "build_original_sdp", "build_rotated_sdp", "build_scenario",
    "run_algorithm1", "select_k", "solve",
]
