"""Robust sparse blind source separation: GMCA, NrGMCA, rGMCA and PCP+GMCA."""
from ._kernels import BACKEND
from .datagen import OutlierSpec, SourceSpec, gen_scene
from .gmca import gmca
from .metrics import align_columns, delta_A, success
from .model import MixingScene, SeparationResult, SolverParams, assemble_scene, load_scene, save_scene
from .pcp import PcpParams, pcp, pcp_gmca
from .robust import nrgmca, rgmca

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "MixingScene",
    "OutlierSpec",
    "PcpParams",
    "SeparationResult",
    "SolverParams",
    "SourceSpec",
    "align_columns",
    "assemble_scene",
    "delta_A",
    "gen_scene",
    "gmca",
    "load_scene",
    "nrgmca",
    "pcp",
    "pcp_gmca",
    "rgmca",
    "save_scene",
    "success",
]
