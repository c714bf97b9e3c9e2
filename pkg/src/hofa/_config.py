"""Shared errors, enumeration budgets and seeded random generators."""

import math
import os

import numpy as np

DEFAULT_BUDGET = 10**8


class HofaError(Exception):
    """Base class for every error raised by the library."""

    exit_code = 1


class StructuralError(HofaError, ValueError):
    """Inputs do not fit together (mismatched groups, dimensions, ranges)."""

    exit_code = 2


class BudgetExceeded(HofaError):
    """An exhaustive computation would enumerate more items than allowed."""

    exit_code = 3


class InvariantFailure(HofaError):
    """A mathematical invariant that must hold was observed to fail."""

    exit_code = 4


def budget_cap(budget=None):
    if budget is not None:
        return int(budget)
    env = os.environ.get("HOFA_BUDGET")
    if env:
        return int(float(env))
    return DEFAULT_BUDGET


def check_budget(count, budget=None, what="enumeration"):
    cap = budget_cap(budget)
    if count > cap:
        raise BudgetExceeded(f"{what} needs {count} items, budget is {cap}")
    return count


def make_rng(seed=0):
    """Counter-based generator (Philox 4x64, numpy's published constants).

    Accepts an int seed or an existing Generator, which is passed through.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def fsum_complex(values):
    """Correctly rounded sum of a complex array (real and imaginary parts separately)."""
    values = np.asarray(values).ravel()
    return complex(math.fsum(values.real), math.fsum(values.imag))
