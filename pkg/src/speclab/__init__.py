"""Spectral computations for half-line discrete Schroedinger operators with
decaying potentials: Pruefer dynamics, truncated spectral measures, weighted
oscillatory sums and a multiscale scan for small-amplitude quasimomenta."""

__version__ = "0.1.0"

from .dynamics import EnergyPoint, NumericalFault, PrueferState, TransferMatrix, prufer_trace
from .potentials import Potential, cutoff, eval_potential, verify_bound
from .spectral import (complex_quasimomentum, measure_of_interval, oracle_spectral_measure,
                       spectral_density_truncated, weyl_m_truncated)

__all__ = [
    "EnergyPoint", "NumericalFault", "PrueferState", "TransferMatrix", "prufer_trace",
    "Potential", "cutoff", "eval_potential", "verify_bound",
    "complex_quasimomentum", "measure_of_interval", "oracle_spectral_measure",
    "spectral_density_truncated", "weyl_m_truncated",
]
