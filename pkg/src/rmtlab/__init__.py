"""Random-matrix and free-probability laboratory.

Submodules
----------
ensembles    seeded GUE, Ginibre, upper-triangular and diagonal samplers
spectral     eigenvalues, empirical distributions, GUE closed forms
freemoments  exact semicircular and GUE word moments, freeness checks
opval        matrix-valued Stieltjes transforms of linear GUE pencils
brown        Fuglede-Kadison determinants, Brown measures, invariant subspaces
dt           upper-triangular model of the DT operator and the F-curve
runner       config-driven experiments, reports and the ``lab`` CLI
"""

from .ensembles import EnsembleSpec, Seed
from .errors import ConvergenceError, DomainError, NumericError, UnsupportedSizeError

__version__ = "0.1.0"

__all__ = ["EnsembleSpec", "Seed", "DomainError", "NumericError", "ConvergenceError",
           "UnsupportedSizeError", "__version__"]
