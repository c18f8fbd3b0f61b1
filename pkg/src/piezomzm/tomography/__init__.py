"""Gate set tomography for the {Gx, Gy, Gi} single-qubit gate set."""
from .circuits import GATES, Circuit, format_circuit, parse_circuit
from .dataset import GstDataset, OpticalTruth, PhysicalParams, describe_truth, exact_probabilities, simulate_dataset
from .design import FIDUCIALS, GERMS, MAX_GERM_LENGTH, GstDesign, make_design
from .likelihood import loglik, neg_loglik, saturated_loglik
from .models import BlockEvaluator, GateSet, StepEvaluator, ideal_gateset, physical_gateset, target_unitaries
from .physical import PhysicalGST, fit_physical_gst
from .profile import ProfileInterval, profile_interval
from .report import FitReport, MetricRow, physical_metrics, report_metrics
from .standard import StandardGST, fit_standard_gst, gauge_optimize, lgst
from .validation import ConvergenceError, IllConditionedError

__all__ = [
    "GATES", "Circuit", "format_circuit", "parse_circuit",
    "GstDataset", "OpticalTruth", "PhysicalParams", "describe_truth", "exact_probabilities", "simulate_dataset",
    "FIDUCIALS", "GERMS", "MAX_GERM_LENGTH", "GstDesign", "make_design",
    "loglik", "neg_loglik", "saturated_loglik",
    "BlockEvaluator", "GateSet", "StepEvaluator", "ideal_gateset", "physical_gateset", "target_unitaries",
    "PhysicalGST", "fit_physical_gst", "ProfileInterval", "profile_interval",
    "FitReport", "MetricRow", "physical_metrics", "report_metrics",
    "StandardGST", "fit_standard_gst", "gauge_optimize", "lgst",
    "ConvergenceError", "IllConditionedError",
]
