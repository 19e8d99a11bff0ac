"""Free-fermion interval entropy lab.

Finite Fourier sections of the canonical intermediate projection for interval
inclusions on the circle, plus exact finite-dimensional checks of the modular,
second-quantisation and Hankel identities it relies on.
"""

__version__ = "0.1.0"

from .errors import DiagnosticError, InputError

__all__ = ["DiagnosticError", "InputError", "__version__"]
