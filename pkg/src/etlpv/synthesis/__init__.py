"""Controller synthesis by vertex-wise modal LMIs and its numerical verification."""
from .assembly import ModeMatrices, assemble_lmi_block, assemble_mode_matrices, mode_matrices
from .backend import CvxpyBackend, SdpBackend, SolveResult
from .problem import Mode, SynthesisCertificate, SynthesisProblem, VertexControllerSet
from .solve import block_min_eigenvalues, certificate_blocks, recover_controllers, synthesize
from .verify import (
    DissipationReport,
    ModalStabilityReport,
    full_network_lmi,
    network_storage_matrix,
    verify_full_network_equivalence,
    verify_lyapunov_decrease,
    verify_modal_stability,
)

__all__ = [
    "ModeMatrices", "assemble_lmi_block", "assemble_mode_matrices", "mode_matrices",
    "CvxpyBackend", "SdpBackend", "SolveResult",
    "Mode", "SynthesisCertificate", "SynthesisProblem", "VertexControllerSet",
    "block_min_eigenvalues", "certificate_blocks", "recover_controllers", "synthesize",
    "DissipationReport", "ModalStabilityReport", "full_network_lmi", "network_storage_matrix",
    "verify_full_network_equivalence", "verify_lyapunov_decrease", "verify_modal_stability",
]
