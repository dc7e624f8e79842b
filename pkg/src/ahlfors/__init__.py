"""Discrete Ahlfors-regular spaces, maximal functions of measures and
distance-power Muckenhoupt weights."""

from .dimension import (AhlforsEstimate, CoverSum, ahlfors_fit, cover_sum, dimension_scan, doubling_estimate,
                        local_to_global_check, optimal_cover_count)
from .experiment import ExperimentConfig, ExperimentReport, emit_report, load_config, run_experiment
from .fractals import (CantorMiddleThirds, DisjointUnion, FinitePointSet, Placement, SierpinskiGasket,
                       TriangleBoundary, UnitIntervalGrid, UnitSquareGrid, gasket_boundary_pair, generate)
from .maximal import (DiscreteMeasure, dirac_maximal, domination_check, maximal_of_function, maximal_of_measure,
                      riesz_potential)
from .space import (AtomSubset, Ball, MetricMeasureSpace, PointSet, QuasiMetric, SegmentSet, ball_query,
                    distance_to_set, greedy_net, metric_dimension_probe)
from .weights import (Constant, MaximalPower, PiecewisePower, PowerDistance, TruncatedMaximalPower,
                      ap_ball_product, ap_constant_estimate, build_neighborhoods, eval_weight, kolmogorov_check,
                      range_sweep, weight_values)

__all__ = [
    "AhlforsEstimate",
    "CoverSum",
    "ahlfors_fit",
    "cover_sum",
    "dimension_scan",
    "doubling_estimate",
    "local_to_global_check",
    "optimal_cover_count",
    "ExperimentConfig",
    "ExperimentReport",
    "emit_report",
    "load_config",
    "run_experiment",
    "CantorMiddleThirds",
    "DisjointUnion",
    "FinitePointSet",
    "Placement",
    "SierpinskiGasket",
    "TriangleBoundary",
    "UnitIntervalGrid",
    "UnitSquareGrid",
    "gasket_boundary_pair",
    "generate",
    "DiscreteMeasure",
    "dirac_maximal",
    "domination_check",
    "maximal_of_function",
    "maximal_of_measure",
    "riesz_potential",
    "AtomSubset",
    "Ball",
    "MetricMeasureSpace",
    "PointSet",
    "QuasiMetric",
    "SegmentSet",
    "ball_query",
    "distance_to_set",
    "greedy_net",
    "metric_dimension_probe",
    "Constant",
    "MaximalPower",
    "PiecewisePower",
    "PowerDistance",
    "TruncatedMaximalPower",
    "ap_ball_product",
    "ap_constant_estimate",
    "build_neighborhoods",
    "eval_weight",
    "kolmogorov_check",
    "range_sweep",
    "weight_values",
]

__version__ = "0.1.0"
