"""
Shared fixtures: built-in models and their T-junction bases
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from core.anyon_algebra import builtin_model, regauge_model  # noqa: E402
from core.fusion_space import enumerate_basis  # noqa: E402

NON_ABELIAN = [('Fibonacci', 'tau'), ('Ising', 'sigma')]
ALL_MODELS = NON_ABELIAN + [('SU2_3', '1/2'), ('AbelianZ2', 'psi')]


@pytest.fixture
def fibonacci():
    return builtin_model('Fibonacci')


@pytest.fixture
def ising():
    return builtin_model('Ising')


@pytest.fixture
def z2():
    return builtin_model('AbelianZ2')


@pytest.fixture
def fib_basis(fibonacci):
    return enumerate_basis(fibonacci, 'tau')


@pytest.fixture
def ising_basis(ising):
    return enumerate_basis(ising, 'sigma')


@pytest.fixture(params=NON_ABELIAN, ids=[name for name, _ in NON_ABELIAN])
def non_abelian_basis(request):
    name, t = request.param
    return enumerate_basis(builtin_model(name), t)


@pytest.fixture(params=[False, True], ids=['stored-gauge', 'regauged'])
def gauge_variant(request):
    """Callable mapping a model to itself or to a seeded regauged copy."""
    if request.param:
        return lambda model: regauge_model(model, seed=1234)
    return lambda model: model
