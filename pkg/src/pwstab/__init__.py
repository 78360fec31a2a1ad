"""Spectral and orbital stability of periodic travelling waves of generalized KdV equations."""
from .errors import PwstabError
from .floquet import count_negative_L, eigs_on_Tk, krein_signature
from .index import index_total
from .integrals import compute_moments, gradients_fd, reconstruct_profile
from .picard_fuchs import orbit_jacobians
from .potential import Nonlinearity, PeriodicOrbit, WaveParameters, classify_swallowtail, enumerate_orbits

__version__ = "0.1.0"

__all__ = [
    "Nonlinearity", "PeriodicOrbit", "PwstabError", "WaveParameters", "classify_swallowtail", "compute_moments",
    "count_negative_L", "eigs_on_Tk", "enumerate_orbits", "gradients_fd", "index_total", "krein_signature",
    "orbit_jacobians", "reconstruct_profile",
]
