import numpy as np
import pytest

from conftest import unit_instance
from oracles import exhaustive_periodic_optimum, periodic_bottleneck
from patrolgame.errors import DomainError, NoFeasibleScheduleError, ResourceLimitError, ValidationError
from patrolgame.instance import PolyUtility, generate_random_instance
from patrolgame.schedule import emr_estimate, sample_trace
from patrolgame.schedulers import (
    minimax_closure,
    sg_build,
    sg_optimal_deterministic,
    sg_random_generator,
)

LIN = PolyUtility((0.0, 1.0))


def test_two_site_closure_count():
    sg = sg_build(unit_instance(2), cap=3)
    assert sg.size == 4
    assert {n.position for n in sg.nodes} == {0, 1}


def test_single_site():
    sg = sg_build(unit_instance(1), cap=1)
    assert sg.size == 1 and len(sg.arcs_weight) == 0
    with pytest.raises(NoFeasibleScheduleError):
        sg_optimal_deterministic(sg)


def test_cap_below_optimum_has_no_cycle():
    sg = sg_build(unit_instance(2), cap=1.5)
    with pytest.raises(NoFeasibleScheduleError, match="raise the cap"):
        sg_optimal_deterministic(sg)


def test_cap_domain_and_resource_limit():
    with pytest.raises(DomainError):
        sg_build(unit_instance(2), cap=0)
    with pytest.raises(ResourceLimitError) as e:
        sg_build(unit_instance(4), cap=50, max_states=20)
    assert e.value.count == 21


@pytest.mark.parametrize(
    "n, utilities, bottleneck",
    [(2, None, 2.0), (3, None, 3.0), (2, [PolyUtility.constant(1.0), LIN], 3.0)],
)
def test_optimal_examples(n, utilities, bottleneck):
    inst = unit_instance(n, utilities)
    sched = sg_optimal_deterministic(sg_build(inst))
    assert sched.bottleneck == bottleneck
    coeffs = [u.coefficients for u in inst.utilities]
    assert periodic_bottleneck(list(sched.sites), inst.travel, coeffs) == bottleneck
    assert sorted(set(sched.sites)) == list(range(n))


def test_schedule_emr_equals_bottleneck():
    inst = unit_instance(3, [PolyUtility.constant(2.0), LIN, PolyUtility.constant(1.0)])
    sched = sg_optimal_deterministic(sg_build(inst))
    g = sched.generator(inst.travel)
    assert emr_estimate(g, inst.utilities, 1, 200).emr == pytest.approx(sched.bottleneck)
    assert sched.bottleneck == exhaustive_periodic_optimum(inst.travel, [u.coefficients for u in inst.utilities], 6)


def test_bisection_matches_minimax_closure():
    inst = unit_instance(3, [PolyUtility.constant(1.0), LIN, PolyUtility.constant(3.0)])
    sg = sg_build(inst)
    D = minimax_closure(sg.weight_matrix())
    assert sg_optimal_deterministic(sg).bottleneck == pytest.approx(np.diag(D).min())


def test_minimax_closure_small():
    inf = np.inf
    W = np.array([[inf, 5, 1], [inf, inf, inf], [inf, 2, inf]])
    D = minimax_closure(W)
    assert D[0, 1] == 2
    assert D[1, 0] == inf


def test_random_walk_alpha_zero_is_uniform():
    g = sg_random_generator(unit_instance(4), 0.0, seed=0)
    assert np.allclose(g.next_distribution(), [0, 1 / 3, 1 / 3, 1 / 3])


def test_random_walk_prefers_lighter_successor():
    inst = unit_instance(3, [PolyUtility.constant(1.0), PolyUtility.constant(1.0), PolyUtility.constant(5.0)])
    # from the start state at site 0: going to 1 leaves the heavy site waiting (max 5),
    # going to 2 resets it (max 1)
    sites, _, p0 = sg_random_generator(inst, 0.0, seed=0).successors()
    assert sites.tolist() == [1, 2] and np.allclose(p0, 0.5)
    _, _, p = sg_random_generator(inst, 1.0, seed=0).successors()
    assert np.allclose(p, [1 / 6, 5 / 6])
    _, _, p8 = sg_random_generator(inst, 8.0, seed=0).successors()
    assert p8[1] > p[1]


def test_random_walk_converges_to_rotation():
    inst = unit_instance(3)
    g = sg_random_generator(inst, 80.0, seed=1)
    tr = sample_trace(g, 10_000, 1)
    s = tr.sites
    # on the rotation cycle each move goes to the site not visited for longest
    on_cycle = np.mean(s[2:] != s[:-2])
    assert on_cycle >= 0.95


def test_random_walk_from_graph_reuses_cap():
    sg = sg_build(unit_instance(3), cap=3)
    g = sg_random_generator(sg, 2.0, seed=0)
    assert g.cap == 3
    with pytest.raises(DomainError):
        sg_random_generator(sg, -1.0)
    with pytest.raises(ValidationError):
        sg_random_generator(unit_instance(1), 1.0)


def test_random_walk_deterministic_under_seed():
    inst = generate_random_instance(5, side=20, seed=1)
    a = sample_trace(sg_random_generator(inst, 10.0, seed=3), 300, 4)
    b = sample_trace(sg_random_generator(inst, 10.0, seed=3), 300, 4)
    assert a.events == b.events
