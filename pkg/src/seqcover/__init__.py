"""Combinatorial sequence coverage: criteria, suite generation and risk tracking."""
from .coverage import CoverageReport, RankFitness, TestSuite, coverage_ratio, covers, rank
from .criteria import (
    CriterionError, CriterionFamily, classic_tway, consecutive_window, custom_regular, exact_once,
    kuhn_higdon, load_criterion, message_order, relax, symmetry_classes, transaction_safety,
)
from .evolve import EvolutionLog, GaParams, best_of_k, evolve_suite, mutate, pmx_crossover, random_suite
from .model import (
    Alphabet, ModelError, TestModel, TestPool, WalkError, count_traces, enumerate_traces,
    generate_pool, load_model, random_walk, serialize_model,
)
from .risk import (
    BetaPrior, LossModel, RiskState, UsageProfile, bug_likelihood, expected_loss,
    max_variance_series, select_target,
)
from .sut import STANDARD_BUGS, AbpSystem, BugSpec, Verdict, catch_probability, execute, new_abp


def bundled_abp_model() -> TestModel:
    """The alternating-bit protocol model shipped with the package."""
    from importlib import resources

    return load_model(resources.files(__name__).joinpath("data/abp.json").read_text())
