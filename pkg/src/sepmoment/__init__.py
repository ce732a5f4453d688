"""Separability certificates for multipartite states via moment relaxations."""

from .driver import Certificate, CertifyOptions, Verdict, certify, parse_state_file, read_certificate, run_etkm_sdr, verify, write_certificate
from .tensor_core import Decomposition, HermitianTensor, PartyDims, StateEnsemble, density_to_tensor, ensemble_to_tensor

__all__ = [
    "Certificate",
    "CertifyOptions",
    "Decomposition",
    "HermitianTensor",
    "PartyDims",
    "StateEnsemble",
    "Verdict",
    "certify",
    "density_to_tensor",
    "ensemble_to_tensor",
    "parse_state_file",
    "read_certificate",
    "run_etkm_sdr",
    "verify",
    "write_certificate",
]
