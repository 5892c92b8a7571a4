import random

import pytest

from attlat.dynamics import MultivaluedMap


@pytest.fixture
def g1():
    """Three vertices: 0 <-> 1 two-cycle, 2 -> {0, 2} self-loop feeding in."""
    return MultivaluedMap(3, [[1], [0], [0, 2]])


def random_digraph(rng: random.Random, n: int, left_total: bool = True) -> MultivaluedMap:
    forward = []
    for _ in range(n):
        lo = 1 if left_total else 0
        k = rng.randint(lo, n)
        forward.append(sorted(rng.sample(range(n), k)) if k else [])
    return MultivaluedMap(n, forward)
