import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mdcsim.workload import MB, Request, WorkloadParams, generate_request, packetize, poisson_arrivals


def test_poisson_mean_and_variance():
    rng = np.random.default_rng(11)
    draws = np.array([poisson_arrivals(rng, 4.0) for _ in range(1_000_000)])
    assert draws.mean() == pytest.approx(4.0, abs=0.01)
    assert draws.var() == pytest.approx(4.0, abs=0.05)


def test_poisson_tiny_lambda():
    assert poisson_arrivals(np.random.default_rng(0), 1e-4) == 0


def test_poisson_deterministic():
    a = [poisson_arrivals(np.random.default_rng(5), 2.0) for _ in range(5)]
    rng1, rng2 = np.random.default_rng(9), np.random.default_rng(9)
    assert [poisson_arrivals(rng1, 2.0) for _ in range(50)] == [poisson_arrivals(rng2, 2.0) for _ in range(50)]
    assert len(a) == 5


def test_poisson_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        poisson_arrivals(np.random.default_rng(0), 0.0)


def test_disjoint_windows_independent():
    # counts in consecutive slot pairs, bucketed, chi-square contingency test
    rng = np.random.default_rng(2024)
    x = np.array([poisson_arrivals(rng, 2.0) for _ in range(200_000)]).reshape(-1, 2)
    a, b = np.minimum(x[:, 0], 4), np.minimum(x[:, 1], 4)
    table = np.zeros((5, 5))
    np.add.at(table, (a, b), 1)
    assert stats.chi2_contingency(table).pvalue > 0.01


def test_sizes_above_1mb():
    rng = np.random.default_rng(1)
    params = WorkloadParams()
    assert all(generate_request(rng, params, i).size >= MB for i in range(2000))


def test_degenerate_size_bounds():
    params = WorkloadParams(size_min=2 * MB, size_max=2 * MB)
    assert generate_request(np.random.default_rng(0), params).size == 2 * MB


def test_no_unregistered_when_fraction_zero():
    rng = np.random.default_rng(4)
    params = WorkloadParams(unregistered_fraction=0.0, consumers=3)
    assert {generate_request(rng, params, i).consumer_id for i in range(500)} <= {"c0", "c1", "c2"}


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10_000), st.integers(0, 10_000), st.integers(1, 50), st.integers(0, 100))
def test_generated_values_within_bounds(seed, lo, span, dlo, dspan):
    params = WorkloadParams(size_min=lo, size_max=lo + span, deadline_min=dlo, deadline_max=dlo + dspan)
    req = generate_request(np.random.default_rng(seed), params, 3, 17)
    assert lo <= req.size <= lo + span
    assert dlo <= req.deadline_slots <= dlo + dspan
    assert req.arrival_slot == 17 and req.request_id == 3


@pytest.mark.parametrize("size,n", [(3000, 2), (3001, 3), (1, 1)])
def test_packetize_examples(size, n):
    assert len(packetize(Request(0, "c0", size, 0, 10), 1500)) == n


@given(st.integers(1, 4 * MB), st.integers(512, 70_000))
def test_packet_sizes_reconstruct_request(size, unit):
    pkts = packetize(Request(1, "c0", size, 5, 10, unit))
    assert sum(p.size for p in pkts) == size
    assert all(p.size == unit for p in pkts[:-1]) and 0 < pkts[-1].size <= unit
    assert [p.sequence_index for p in pkts] == list(range(len(pkts)))


def test_params_validate():
    with pytest.raises(ValueError):
        WorkloadParams(size_min=5, size_max=4).validate()
    WorkloadParams().validate()
