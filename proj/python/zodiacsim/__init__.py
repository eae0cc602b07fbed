"""Distributed stochastic zeroth-order optimization simulator.

Coordinate-sampling gradient estimators, a Laplacian-coupled primal-dual
method with a certified step schedule, four reference algorithms, and a
seeded experiment driver.  The heavy lifting lives in the compiled
``zodiacsim._core`` extension; this package re-exports its surface.
"""

from zodiacsim._core import (
    TRACE_HEADER,
    __version__,
    delta_at,
    laplacian,
    preset,
    preset_names,
    rate_fit,
    run,
    theorem_schedule,
    variance_bound,
)

__all__ = [
    "TRACE_HEADER",
    "__version__",
    "delta_at",
    "laplacian",
    "preset",
    "preset_names",
    "rate_fit",
    "run",
    "theorem_schedule",
    "variance_bound",
]
