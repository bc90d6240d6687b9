from .shapley import (
    MAX_EXACT_GROUPS,
    coalition_weights,
    exact_shapley,
    sampled_shapley,
)
from .record_explainer import (
    Attribution,
    CoalitionEvaluator,
    Explanation,
    FeatureGroup,
    TARGETS,
    build_groups,
    explain_record,
)

__all__ = [
    "MAX_EXACT_GROUPS", "coalition_weights", "exact_shapley", "sampled_shapley",
    "Attribution", "CoalitionEvaluator", "Explanation", "FeatureGroup",
    "TARGETS", "build_groups", "explain_record",
]
