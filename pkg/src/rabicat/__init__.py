"""Dissipative quantum Rabi model with two-photon loss.

Mean-field phase diagram, Liouvillian parity-sector spectra, and the
cat-qubit passive error-correction benchmark for a qubit-oscillator
system whose oscillator relaxes by two-photon emission.
"""

__version__ = "0.1.0"

from ._accel import NUMBA_ENABLED

__all__ = ["NUMBA_ENABLED", "__version__"]
