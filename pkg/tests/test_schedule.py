import math

import numpy as np
import pytest

from conftest import unit_instance
from patrolgame.errors import DomainError, UnsupportedError, ValidationError
from patrolgame.instance import PolyUtility
from patrolgame.schedule import (
    CyclicGenerator,
    ScheduleGenerator,
    ScheduleTrace,
    derive_seed,
    emr_estimate,
    entropy_rate_estimate,
    max_return_time,
    sample_trace,
    shannon_entropy,
)
from patrolgame.schedulers import tspb_generator
from patrolgame.tours import tsp_tour

UNIT2 = np.array([[0, 1], [1, 0]])
ONE = PolyUtility.constant(1.0)


class UniformGenerator(ScheduleGenerator):
    """i.i.d. uniform next site, staying put allowed."""

    def _next_site(self):
        return int(self.rng.integers(self.n))

    def next_distribution(self):
        return np.full(self.n, 1.0 / self.n)


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert len({derive_seed(1, a, b) for a in range(5) for b in range(5)}) == 25


def test_alternation_trace():
    tr = sample_trace(CyclicGenerator(UNIT2, [0, 1]), 6)
    assert tr.times.tolist() == list(range(7))
    assert tr.sites.tolist() == [0, 1, 0, 1, 0, 1, 0]
    assert max_return_time(tr, 0) == max_return_time(tr, 1) == 2


def test_same_seed_same_trace():
    inst = unit_instance(5)
    g = tspb_generator(inst, 0.4, seed=3)
    a = sample_trace(g, 200, 11)
    b = sample_trace(g, 200, 11)
    assert a.events == b.events
    assert sample_trace(g, 200, 12).events != a.events


def test_tspb_alpha_one_repeats_tour():
    inst = unit_instance(4)
    tour = tsp_tour(inst).order
    tr = sample_trace(tspb_generator(inst, 1.0), 20)
    assert tr.sites.tolist() == [tour[k % 4] for k in range(len(tr))]


def test_max_return_time_gaps():
    tr = ScheduleTrace.from_events([(0, 0), (1, 1), (1, 2), (0, 3), (0, 5)], 5)
    assert max_return_time(tr, 0) == 3
    assert max_return_time(ScheduleTrace.from_events([(0, 0)], 3), 0) is None


def test_trace_validation_and_csv():
    with pytest.raises(ValidationError):
        ScheduleTrace.from_events([(0, 0), (1, 0)], 3)
    tr = ScheduleTrace.from_events([(0, 0), (1, 2)], 3)
    assert tr.to_csv() == "t,site\n0,0\n2,1\n"
    with pytest.raises(DomainError):
        sample_trace(CyclicGenerator(UNIT2, [0, 1]), 0)


def test_emr_alternation():
    g = CyclicGenerator(UNIT2, [0, 1])
    r = emr_estimate(g, [ONE, ONE], 5, 50)
    assert r.emr == 2.0 and r.samples == 1
    assert not r.lower_bound
    assert emr_estimate(g, [ONE, ONE], 10, 50).emr == r.emr


def test_emr_lower_bound_flag():
    g = CyclicGenerator(np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]]), [0, 1])
    r = emr_estimate(g, [ONE, ONE, PolyUtility.constant(5.0)], 1, 20)
    assert r.site == 2 and r.lower_bound
    assert r.emr == 100.0


def test_emr_tspb_alpha_one_equals_tour():
    inst = unit_instance(5)
    cyc = CyclicGenerator(inst.travel, tsp_tour(inst).order)
    H = inst.utilities
    assert emr_estimate(tspb_generator(inst, 1.0), H, 3, 100).emr == emr_estimate(cyc, H, 1, 100).emr


def test_entropy_rates():
    assert entropy_rate_estimate(CyclicGenerator(UNIT2, [0, 1]), 10).rate == 0.0
    g = UniformGenerator(np.ones((4, 4)) - np.eye(4), seed=0)
    r = entropy_rate_estimate(g, 50, samples=2)
    assert r.rate == pytest.approx(math.log(4))
    assert entropy_rate_estimate(g, 10, base=2).rate == pytest.approx(2.0)
    with pytest.raises(UnsupportedError):
        entropy_rate_estimate(type("G", (ScheduleGenerator,), {"_next_site": lambda s: 0})(UNIT2), 3)


def test_shannon_entropy():
    assert shannon_entropy([1, 0, 0]) == 0.0
    assert shannon_entropy([0.5, 0.5], base=2) == pytest.approx(1.0)


def test_generator_start_validation():
    with pytest.raises(ValidationError):
        UniformGenerator(UNIT2, start=5)
