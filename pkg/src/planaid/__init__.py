"""Facility planning over space and time, with card-ranking preference
elicitation and value-function fitting by ordinal regression."""

from .cards import CardRanking, ScoreTable, merge, score
from .fitting import FitItem, FitRequest, RegressionResult, fit, fit_choquet, fit_piecewise, fit_weighted_sum
from .lp import LinearProgram, SolveOptions, SolveReport, solve_lp, solve_milp
from .model import (
    Assignment,
    Capacity2Additive,
    ContributionVector,
    FacilitySpec,
    LocationOption,
    Plan,
    PlanningInstance,
    SynergySpec,
    choquet_value,
    choquet_value_sorted,
    contribution,
)
from .optimizer import (
    ObjectiveSpec,
    ScenarioSpec,
    assemble,
    check_feasible,
    evaluate_plan,
    optimize,
    period_breakdown,
)
from .session import GridCell, Session

__version__ = "0.1.0"
