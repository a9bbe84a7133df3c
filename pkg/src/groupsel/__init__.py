"""Grouped forward stepwise regression with exact selective significance tests."""

from .distributions import (TruncatedChiSpec, TruncatedFSpec, chi_sf, f_sf, screen_bound,
                            truncated_sf)
from .inference import SelectiveTestResult, test_all_active, tchi_test, tf_test
from .intervals import IntervalUnion, intersect
from .kernels import BACKEND
from .linalg import GroupedDesign, OrthoBasis, orthonormal_basis, project, residualize_group
from .stepwise import (QuadraticInequality, SelectionEvent, StepwiseConfig, StepwiseFit,
                       evaluate_inequality, forward_stepwise)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "GroupedDesign", "IntervalUnion", "OrthoBasis", "QuadraticInequality",
    "SelectionEvent", "SelectiveTestResult", "StepwiseConfig", "StepwiseFit",
    "TruncatedChiSpec", "TruncatedFSpec", "chi_sf", "evaluate_inequality", "f_sf",
    "forward_stepwise", "intersect", "orthonormal_basis", "project", "residualize_group",
    "screen_bound", "tchi_test", "test_all_active", "tf_test", "truncated_sf",
]
