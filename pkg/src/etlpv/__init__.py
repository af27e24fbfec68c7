"""Event-triggered formation control of polytopic LPV multi-agent networks.

Subpackages and modules:

* :mod:`etlpv.graph` -- communication graphs and Laplacian spectra
* :mod:`etlpv.lpv` -- polytopic LPV agent models (dynamic unicycle built in)
* :mod:`etlpv.synthesis` -- modal LMI synthesis and numerical certificate checks
* :mod:`etlpv.estimators` -- ZOH / open-loop / closed-loop output estimators
* :mod:`etlpv.sim` -- network simulation and metrics
* :mod:`etlpv.cli` -- ``etlpv`` command line
"""
from . import _kernels
from .graph import CommGraph, LaplacianSpectrum, build_laplacian, kron_expand
from .lpv import ParameterPolytope, PolytopicLpvModel, SchedulingMap, VertexMatrices, build_unicycle_lpv
from .sim import Disturbance, NetworkScenario, RunMetrics, SimulationTrace, Simulator, empirical_l2_gain, run
from .synthesis import Mode, SynthesisCertificate, SynthesisProblem, VertexControllerSet, synthesize

__version__ = "0.1.0"

__all__ = [
    "CommGraph", "LaplacianSpectrum", "build_laplacian", "kron_expand",
    "ParameterPolytope", "PolytopicLpvModel", "SchedulingMap", "VertexMatrices", "build_unicycle_lpv",
    "Disturbance", "NetworkScenario", "RunMetrics", "SimulationTrace", "Simulator", "empirical_l2_gain", "run",
    "Mode", "SynthesisCertificate", "SynthesisProblem", "VertexControllerSet", "synthesize",
]
