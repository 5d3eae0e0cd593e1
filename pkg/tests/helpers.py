"""Builders shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from framemult.frames import ClassTags, SequenceFamily, Symbol


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def onb(d, scale=1.0, label="(e_n)"):
    return SequenceFamily(scale * np.eye(d, dtype=complex), ClassTags(is_riesz=True), label)


def e(j, d, c=1.0):
    """``c`` times the ``j``-th unit vector (1-based)."""
    v = np.zeros(d, dtype=complex)
    v[j - 1] = c
    return v


def e1_dup(d):
    """``(e1, e1, e2, ..., e_d)``: the frame with bounds 1 and 2."""
    return SequenceFamily(np.array([e(1, d)] + [e(j, d) for j in range(1, d + 1)]), label="(e1,e1,e2,...)")


def random_family(rng, d, n, label="rand"):
    return SequenceFamily(crandn(rng, n, d), label=label)


def random_symbol(rng, n, lo=0.5, hi=2.0):
    mag = rng.uniform(lo, hi, n)
    return Symbol(mag * np.exp(1j * rng.uniform(0, 2 * np.pi, n)))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=2, max_value=8)
