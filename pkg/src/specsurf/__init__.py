"""specsurf: spectral geometry of finite-area hyperbolic surfaces, at desk scale.

Library + CLI covering: upper-half-plane geometry, Fuchsian-group
enumeration (displacers, lattice counts, length spectra, systole, thin
part), Selberg transforms and the shipped test-function families, special
functions with accuracy contracts, the modular surface's Eisenstein
series/scattering machinery, the Selberg trace formula with error
budgets, the wave-kernel variance pipeline, and the small-case
Weil-Petersson systole bound.

Hot numeric kernels are numba-compiled by default; set SPECSURF_NUMBA=0
to select the pure-NumPy fallback path.
"""
from ._backend import NUMBA_ENABLED, backend_name

__version__ = "0.1.0"

__all__ = ["NUMBA_ENABLED", "backend_name", "__version__"]
