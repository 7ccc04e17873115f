"""Numerical companion for degenerate elliptic and parabolic equations on the
half line in weighted Sobolev spaces.

Modules: ``weighted_spaces`` (norms, Hardy, Muckenhoupt), ``exact1d``
(indicial roots, exact Euler solutions, Black-Scholes density),
``fdsolver`` (log-coordinate finite differences), ``verifier`` (estimate
ratios, sweeps, invariance checks), ``inkspots`` (covering lemma) and
``cli`` (batch runner).  Set ``DEGENLAB_NUMBA=0`` to use the pure numpy
kernels.
"""

from . import errors
from ._kernels import use_numba

__version__ = "0.1.0"
__all__ = ["errors", "use_numba", "__version__"]
