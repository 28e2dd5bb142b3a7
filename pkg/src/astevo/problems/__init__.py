from .base import (
    OBP_BIN,
    TSP_NEXT,
    EvalReport,
    FeatureSchema,
    InstanceResult,
    InvalidHeuristic,
    TooLarge,
    evaluate_suite,
)
from .obp import (
    ObpInstance,
    brute_force_obp,
    gen_obp_test,
    gen_obp_training,
    lower_bound_obp,
    pack,
    run_obp,
)
from .suites import PROBLEMS, make_suite, read_suite, resolve_suite, write_suite
from .tsp import (
    TspInstance,
    brute_force_tsp,
    construct_tour,
    gen_tsp_test,
    gen_tsp_training,
    run_tsp,
)

__all__ = [
    "OBP_BIN",
    "PROBLEMS",
    "TSP_NEXT",
    "EvalReport",
    "FeatureSchema",
    "InstanceResult",
    "InvalidHeuristic",
    "ObpInstance",
    "TooLarge",
    "TspInstance",
    "brute_force_obp",
    "brute_force_tsp",
    "construct_tour",
    "evaluate_suite",
    "gen_obp_test",
    "gen_obp_training",
    "gen_tsp_test",
    "gen_tsp_training",
    "lower_bound_obp",
    "make_suite",
    "pack",
    "read_suite",
    "resolve_suite",
    "run_obp",
    "run_tsp",
    "write_suite",
]
