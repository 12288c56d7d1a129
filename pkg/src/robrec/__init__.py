"""Robust recoverable 0-1 optimization under budgeted polyhedral uncertainty.

Subpackage map:
  * :mod:`robrec.model` -- domain types, instance JSON format, validation
  * :mod:`robrec.lp_kernel` / :mod:`robrec.mip_kernel` -- simplex and
    branch-and-bound engines (compiled pivot kernel with NumPy fallback)
  * :mod:`robrec.problems` -- selection/assignment/min-knapsack builders
    and the random instance generators
  * :mod:`robrec.core_solvers` -- incremental and recoverable solves plus
    the closed-form budget adversary
  * :mod:`robrec.cut_loop` -- constraint-generation loops for evaluation
    and the adversarial lower bound
  * :mod:`robrec.bounds` -- selection/Lagrangian lower bounds, the
    two-solve upper bound, and ratio reporting
  * :mod:`robrec.oracle` -- brute-force ground truth for small instances
  * :mod:`robrec.cli` / :mod:`robrec.experiment` -- command line front end
    and the reproducible experiment pipeline
"""

from ._kernel import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
