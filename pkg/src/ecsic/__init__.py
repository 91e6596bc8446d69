"""Decentralized multi-player bandits without collision sensing.

Simulator and library for the error-correction-coded communication protocol:
Z-channel codecs, the per-player state machine, baseline policies, and a
reproducible Monte Carlo experiment harness.
"""

from ecsic.kernels import BACKEND, HAVE_COMPILED

__all__ = ["BACKEND", "HAVE_COMPILED"]
__version__ = "0.1.0"
