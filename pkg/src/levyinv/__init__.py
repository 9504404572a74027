"""Invariant measures of Lévy-driven SDEs by decreasing-step Euler schemes."""

from .empirical import EmpiricalMeasure
from .euler import SdeSpec, run_chain, step, step_stable_ou
from .levy import BetaOverYSq, CauchyUnit, Custom, FiniteActivity, SymmetricStableLike
from .rng import RngStream, Streams
from .schedules import StepSchedule, admissibility, check_polynomial, check_scheme_c, f_ap

__version__ = "0.1.0"

__all__ = [
    "BetaOverYSq", "CauchyUnit", "Custom", "EmpiricalMeasure", "FiniteActivity", "RngStream",
    "SdeSpec", "StepSchedule", "Streams", "SymmetricStableLike", "admissibility",
    "check_polynomial", "check_scheme_c", "f_ap", "run_chain", "step", "step_stable_ou",
]
