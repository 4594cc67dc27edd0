"""Factorial-experiment error models for randomized-response polls."""

from .doe import (Design, DesignError, DesignPoint, Factor, FactorSpace, diagonal_probe,
                  full_factorial, to_actual, to_coded)
from .poll import (Alternative, PollError, PollTree, Question, ScenarioParams, build_spine_poll,
                   load_poll, save_poll, validate_poll)
from .simulator import (Population, ResponseTally, SimulationResult, assign_truth,
                        collect_responses, estimate_target, randomize_one, run_setting)
from .regression import (ExperimentTable, FittedModel, Term, all_terms, design_matrix,
                         expand_formula, fit_ols, predict, significant_terms)
from .diagnostics import (DiagnosticsReport, build_report, histogram, lowess, pareto_effects,
                          qq_normal, residuals)
from .render import render_report
from .campaign import (CampaignConfig, DEFAULT_SPACE, PAPER_FORMULA, load_fixture, refine,
                       refine_step, replicate_paper, run_campaign, sample_validation_points)

__version__ = "0.1.0"
