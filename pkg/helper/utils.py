"""
Analysis Utilities Module
Environment-backed analysis defaults, seeded generators and the trace, lasso
and machine samplers shared by classification, decomposition and tests.
"""

import itertools
import logging
import os
from typing import Iterator, List, Optional, Sequence

import numpy as np

from constants.constants import (
    DEFAULT_BUDGET,
    DEFAULT_LOG_LEVEL,
    DEFAULT_MAX_CLASSES,
    DEFAULT_MAX_DEPTH,
    DEFAULT_RANDOM_SAMPLES,
    DEFAULT_SAMPLE_CAP,
    DEFAULT_SEED,
    ENV_BUDGET,
    ENV_LOG_LEVEL,
    ENV_MAX_CLASSES,
    ENV_MAX_DEPTH,
    ENV_SAMPLE_CAP,
    ENV_SAMPLES,
    ENV_SEED,
)
from helper.domains import ValueDomain, Value
from helper.errors import BadParams
from helper.machines import FinitaryMachine
from helper.traces import Alphabet, FiniteTrace, Lasso, normalize

logger = logging.getLogger(__name__)


class AnalysisConfig:
    """Defaults for sampling, unfolding and logging, overridable from the environment"""

    SEED = DEFAULT_SEED
    BUDGET = DEFAULT_BUDGET
    MAX_DEPTH = DEFAULT_MAX_DEPTH
    SAMPLES = DEFAULT_RANDOM_SAMPLES
    SAMPLE_CAP = DEFAULT_SAMPLE_CAP
    MAX_CLASSES = DEFAULT_MAX_CLASSES
    LOG_LEVEL = DEFAULT_LOG_LEVEL

    @staticmethod
    def _get_int(key: str, default: int) -> int:
        raw = os.environ.get(key)
        if raw is None or raw.strip() == "":
            return default
        try:
            value = int(raw)
        except ValueError:
            raise BadParams(f"{key} must be an integer, got {raw!r}")
        if value < 0:
            raise BadParams(f"{key} must not be negative, got {value}")
        return value

    @staticmethod
    def get_seed() -> int:
        return AnalysisConfig._get_int(ENV_SEED, AnalysisConfig.SEED)

    @staticmethod
    def get_budget() -> int:
        """Stem/cycle length bound for bounded checks"""
        return AnalysisConfig._get_int(ENV_BUDGET, AnalysisConfig.BUDGET)

    @staticmethod
    def get_max_depth() -> int:
        return AnalysisConfig._get_int(ENV_MAX_DEPTH, AnalysisConfig.MAX_DEPTH)

    @staticmethod
    def get_samples() -> int:
        return AnalysisConfig._get_int(ENV_SAMPLES, AnalysisConfig.SAMPLES)

    @staticmethod
    def get_sample_cap() -> int:
        return AnalysisConfig._get_int(ENV_SAMPLE_CAP, AnalysisConfig.SAMPLE_CAP)

    @staticmethod
    def get_max_classes() -> int:
        return AnalysisConfig._get_int(ENV_MAX_CLASSES, AnalysisConfig.MAX_CLASSES)

    @staticmethod
    def get_log_level() -> str:
        return os.environ.get(ENV_LOG_LEVEL, AnalysisConfig.LOG_LEVEL).upper()


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    return np.random.default_rng(AnalysisConfig.get_seed() if seed is None else seed)


# ============= TRACES AND LASSOS =============

def random_finite_trace(alphabet: Alphabet, rng: np.random.Generator, max_len: int) -> FiniteTrace:
    length = int(rng.integers(0, max_len + 1))
    return FiniteTrace(alphabet, tuple(int(a) for a in rng.integers(0, len(alphabet), size=length)))


def random_lasso(alphabet: Alphabet, rng: np.random.Generator, max_stem: int, max_cycle: int) -> Lasso:
    """A normalized lasso with stem length <= max_stem and cycle length in [1, max_cycle]."""
    stem_len = int(rng.integers(0, max_stem + 1))
    cycle_len = int(rng.integers(1, max(max_cycle, 1) + 1))
    stem = tuple(int(a) for a in rng.integers(0, len(alphabet), size=stem_len))
    cycle = tuple(int(a) for a in rng.integers(0, len(alphabet), size=cycle_len))
    return normalize(Lasso(alphabet, stem, cycle))


def enumerate_finite_traces(alphabet: Alphabet, max_len: int) -> Iterator[FiniteTrace]:
    """All traces up to max_len, shortest first, then in alphabet order."""
    for length in range(max_len + 1):
        for symbols in itertools.product(range(len(alphabet)), repeat=length):
            yield FiniteTrace(alphabet, symbols)


def enumerate_lassos(alphabet: Alphabet, max_stem: int, max_cycle: int) -> List[Lasso]:
    """
    Every normalized lasso with bounded stem and cycle, ordered by cycle
    length, cycle, stem length, stem.
    """
    n = len(alphabet)
    result = []
    for cycle_len in range(1, max_cycle + 1):
        for cycle in itertools.product(range(n), repeat=cycle_len):
            for stem_len in range(max_stem + 1):
                for stem in itertools.product(range(n), repeat=stem_len):
                    lasso = Lasso(alphabet, stem, cycle)
                    if normalize(lasso) == lasso:
                        result.append(lasso)
    return result


def _raw_lasso_count(n: int, length: int) -> int:
    stems = sum(n ** i for i in range(length + 1))
    cycles = sum(n ** j for j in range(1, length + 1))
    return stems * cycles


def lasso_sample(
    alphabet: Alphabet,
    budget: int,
    cap: int,
    samples: int,
    rng: np.random.Generator,
) -> List[Lasso]:
    """
    Exhaustive normalized lassos up to the largest length L <= budget whose
    enumeration stays under cap, followed by `samples` random lassos with
    stem and cycle up to budget. Duplicates are dropped, order is kept.
    """
    budget = max(budget, 1)
    exhaustive = 1
    while exhaustive < budget and _raw_lasso_count(len(alphabet), exhaustive + 1) <= cap:
        exhaustive += 1
    seen = set()
    result = []
    for lasso in enumerate_lassos(alphabet, exhaustive, exhaustive):
        seen.add(lasso)
        result.append(lasso)
    for _ in range(samples):
        lasso = random_lasso(alphabet, rng, budget, budget)
        if lasso not in seen:
            seen.add(lasso)
            result.append(lasso)
    logger.debug(f"Sampled {len(result)} lassos (exhaustive up to length {exhaustive})")
    return result


# ============= MACHINES =============

def random_machine(
    rng: np.random.Generator,
    domain: ValueDomain,
    alphabet: Alphabet,
    n_states: int,
    values: Optional[Sequence[Value]] = None,
) -> FinitaryMachine:
    """Random complete machine; outputs drawn from `values` when given, else from the domain."""
    if values is not None:
        outputs = [values[int(rng.integers(0, len(values)))] for _ in range(n_states)]
    else:
        outputs = [domain.sample(rng) for _ in range(n_states)]
    delta = [[int(rng.integers(0, n_states)) for _ in range(len(alphabet))] for _ in range(n_states)]
    return FinitaryMachine(alphabet, domain, outputs, delta, 0)
