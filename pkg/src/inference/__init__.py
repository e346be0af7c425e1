from src.inference.order_statistics import (
    InferenceReport,
    OrderStatSample,
    exceedance_probability,
    one_sided_ci,
    order_statistics,
    ranked_persistences,
    sequential_test,
)

__all__ = [
    "InferenceReport",
    "OrderStatSample",
    "exceedance_probability",
    "one_sided_ci",
    "order_statistics",
    "ranked_persistences",
    "sequential_test",
]
