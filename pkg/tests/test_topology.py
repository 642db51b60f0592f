import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdcsim.topology import (
    Device,
    MdcComposition,
    device_potential,
    mdc_potential,
    potential_from_counts,
    total_resource,
)


def dev(i, r=1.0, s=0, n=0):
    return Device(f"d{i}", r, [i], requests_received=n, requests_serviced=s)


def test_total_resource_examples():
    assert total_resource(MdcComposition([dev(0, 1), dev(1, 2), dev(2, 3)])) == 6
    assert total_resource(MdcComposition([])) == 0
    assert total_resource(MdcComposition([dev(0, 5)])) == 5


@pytest.mark.parametrize("s,n,p", [(63, 100, 0.63), (0, 10, 0.0), (0, 0, 1.0)])
def test_device_potential_examples(s, n, p):
    assert device_potential(s, n) == pytest.approx(p)


def test_device_potential_rejects_overcount():
    with pytest.raises(ValueError):
        device_potential(3, 2)


def test_mdc_potential_examples():
    assert mdc_potential(MdcComposition([dev(0, s=5, n=10), dev(1, s=10, n=10)])) == pytest.approx(0.75)
    assert mdc_potential(MdcComposition([dev(0, s=4, n=4), dev(1, s=7, n=7)])) == 1.0


def test_composition_requires_unique_ids():
    with pytest.raises(ValueError):
        MdcComposition([dev(0), dev(0)])


def test_device_validation():
    with pytest.raises(ValueError):
        Device("x", -1.0, [0])
    with pytest.raises(ValueError):
        Device("x", 1.0, [])


counts = st.lists(st.tuples(st.integers(0, 500), st.integers(0, 500)).map(lambda t: (min(t), max(t))), max_size=12)


@settings(max_examples=300)
@given(counts)
def test_potential_bounds_and_weighted_mean(pairs):
    comp = MdcComposition([dev(i, s=s, n=n) for i, (s, n) in enumerate(pairs)])
    p = mdc_potential(comp)
    assert 0.0 <= p <= 1.0
    total = sum(n for _, n in pairs)
    if total:
        weighted = sum(n / total * device_potential(s, n) for s, n in pairs)
        assert p == pytest.approx(weighted, rel=1e-12, abs=1e-12)


@settings(max_examples=300)
@given(counts, st.randoms(use_true_random=False))
def test_potential_permutation_invariant(pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    assert potential_from_counts(pairs) == potential_from_counts(shuffled)


@given(st.lists(st.floats(0, 1e6), max_size=6), st.lists(st.floats(0, 1e6), max_size=6))
def test_total_resource_additive_under_union(ra, rb):
    a = MdcComposition([dev(i, r) for i, r in enumerate(ra)])
    b = MdcComposition([dev(100 + i, r) for i, r in enumerate(rb)])
    assert total_resource(a.union(b)) == pytest.approx(total_resource(a) + total_resource(b))
