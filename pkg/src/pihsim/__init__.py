"""pihsim: dual-arm regrasp planning plus compliant peg-in-hole insertion
against a quasi-static contact simulation."""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]
