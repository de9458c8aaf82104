"""Central numerical configuration.

Every tolerance used by the package lives in one record so that tests,
the self-test suite, and library code agree on what "equal" and
"degenerate" mean.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared across modules.

    equivalence: max-abs tolerance for route-equivalence checks
        (incremental update vs. fresh computation).
    singularity: diagonal / denominator entries at or below this are
        treated as numerically degenerate.
    tie_relative: relative tolerance for treating two risk (or score)
        values as tied during query selection.
    inverse_check: max-abs tolerance for the G @ L_uu == I debug check.
    saturation: decision values with |f| above this saturate the
        sigmoid to exactly 0 or 1.
    """

    equivalence: float = 1e-9
    singularity: float = 1e-12
    tie_relative: float = 1e-12
    inverse_check: float = 1e-8
    saturation: float = 36.0


DEFAULT_TOLERANCES = Tolerances()

#: Strength parameter folded into the Laplacian unless overridden.
DEFAULT_BETA = 1.0

#: Largest unlabeled set the exact enumeration will accept (2**cap states).
DEFAULT_ENUM_CAP = 20
