import os

import pytest

from helper.builtins import builtin
from helper.domains import ExtendedNatDomain, FiniteOrderDomain
from helper.traces import Alphabet
from helper.utils import make_rng, random_machine

SAMPLES_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "samples")

AB = Alphabet(("a", "b"))
ABC = Alphabet(("a", "b", "c"))


@pytest.fixture
def rng():
    return make_rng(7)


@pytest.fixture
def samples_dir():
    return SAMPLES_DIR


@pytest.fixture(scope="session")
def min_response():
    return builtin("min_response", cap=8)


@pytest.fixture(scope="session")
def max_response():
    return builtin("max_response", cap=8)


@pytest.fixture(scope="session")
def avg_response():
    return builtin("avg_response")


@pytest.fixture(scope="session")
def discounted():
    return builtin("discounted_safety", {"alphabet": ["a", "b"], "never": "b"})


@pytest.fixture(scope="session")
def gf_a():
    return builtin("gf_a")


@pytest.fixture(scope="session")
def fg_b():
    return builtin("fg_b")


def corpus_machines(count: int, seed: int = 11, max_states: int = 5):
    """Small random machines over {a,b} or {a,b,c} with a handful of output levels."""
    rng = make_rng(seed)
    domains = [ExtendedNatDomain(4), FiniteOrderDomain(("lo", "mid", "hi"))]
    machines = []
    for i in range(count):
        domain = domains[i % len(domains)]
        alphabet = AB if i % 3 else ABC
        n_states = int(rng.integers(1, max_states + 1))
        values = [0, 1, 2, 4] if isinstance(domain, ExtendedNatDomain) else [0, 1, 2]
        machines.append(random_machine(rng, domain, alphabet, n_states, values))
    return machines
