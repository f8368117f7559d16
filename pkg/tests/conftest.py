import sys

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("repo", max_examples=40, deadline=None)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hermitian(rng, n):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (X + X.conj().T) / 2


def random_hpd(rng, n, rank=None):
    rank = n if rank is None else rank
    A = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return A @ A.conj().T / rank + 1e-3 * np.eye(n)


def random_unit(rng, n, M):
    Z = rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M))
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "_results", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n].line())
