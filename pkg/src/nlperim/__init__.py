"""Non-local (kernel) perimeters of convex bodies.

Evaluation of interaction energies and kernel perimeters (n <= 3), Schwartz
symmetrization, monotonicity checks for nested convex bodies, and quantitative
lower bounds on the perimeter deficit.
"""

__version__ = "0.1.0"

from . import geometry  # noqa: F401
