from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from tbeuler.model import example_model, load_model, make_model

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


def unit(v):
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    return v if v[0] >= 0 else -v


def scalar_tb_model(q_zz, q_zw, q_ww, a1z, a1w, a2z, a2w):
    """z' = z - w + quadratic terms; the only scalar linear part with a TB point."""
    terms = [(1, 1, (1, 0, 0, 0)), (1, -1, (0, 1, 0, 0))]
    for c, e in ((q_zz, (2, 0, 0, 0)), (q_zw, (1, 1, 0, 0)), (q_ww, (0, 2, 0, 0)),
                 (a1z, (1, 0, 1, 0)), (a1w, (0, 1, 1, 0)), (a2z, (1, 0, 0, 1)), (a2w, (0, 1, 0, 1))):
        if c != 0:
            terms.append((1, Fraction(c), e))
    return make_model(1, terms)


@pytest.fixture(scope="session")
def example():
    return example_model()


@pytest.fixture(scope="session")
def synth_a():
    return load_model(DATA / "synthetic_a.model")


@pytest.fixture(scope="session")
def synth_b():
    return load_model(DATA / "synthetic_b.model")
