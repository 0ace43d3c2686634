import sys
from pathlib import Path

from numpy.random import Generator, Philox

sys.path.insert(0, str(Path(__file__).parent))

from matsec.harness import random_matroid


def make_rng(seed, stream=0):
    return Generator(Philox(key=[seed, stream]))


def random_loopless_matroid(rng, max_n=10):
    """Rejection-sample until every singleton has rank 1 (curves reject loops)."""
    while True:
        m = random_matroid(rng, max_n)
        if all(m.rank(1 << e) == 1 for e in range(m.ground_size)):
            return m
