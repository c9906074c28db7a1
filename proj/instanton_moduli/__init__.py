from ._instanton import (
    Field,
    broken_strata,
    families,
    incidence,
    instantons,
    integrate,
    local_model,
    morse_homology,
    rest_points,
)

__all__ = [
    "Field",
    "broken_strata",
    "families",
    "incidence",
    "instantons",
    "integrate",
    "local_model",
    "morse_homology",
    "rest_points",
]
