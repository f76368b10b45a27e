import json

import numpy as np
import pytest

from patrolgame.errors import CsvParseError, DomainError, EmptyInstanceError, ValidationError
from patrolgame.instance import (
    GraphInstance,
    PolyUtility,
    Site,
    UtilitySpec,
    cumulative_utility,
    eval_utility,
    generate_random_instance,
    load_instance,
    load_sites_csv,
    travel_matrix,
)


def test_single_site_instance():
    inst = generate_random_instance(1, side=100, seed=7)
    assert inst.n == 1
    assert inst.travel.shape == (1, 1) and inst.travel[0, 0] == 0


def test_default_size_instance_is_valid():
    inst = generate_random_instance(30, side=1000, seed=3)
    assert inst.n == 30
    inst.validate()


def test_generation_is_deterministic():
    a = generate_random_instance(5, side=10, seed=42)
    b = generate_random_instance(5, side=10, seed=42)
    assert a.to_json() == b.to_json()
    assert np.array_equal(a.travel, b.travel)


def test_generation_errors():
    with pytest.raises(EmptyInstanceError):
        generate_random_instance(0)
    with pytest.raises(ValidationError):
        generate_random_instance(3, side=0)
    with pytest.raises(ValidationError):
        generate_random_instance(3, side=-5)


def test_travel_is_metric_ceiling():
    W = travel_matrix(np.array([[0, 0], [3, 4], [0.2, 0.1]]))
    assert W[0, 1] == 5
    assert W[0, 2] == 1  # distance 0.22 rounds up, floor of one slot
    assert np.array_equal(W, W.T)


@pytest.mark.parametrize(
    "coeffs, t, expected", [((2.0,), 5, 2.0), ((0.0, 1.0), 3, 3.0), ((1.0, 0.0, 1.0), 4, 17.0)]
)
def test_eval_utility(coeffs, t, expected):
    assert eval_utility(PolyUtility(coeffs), t) == expected


def test_eval_utility_domain():
    with pytest.raises(DomainError):
        eval_utility(PolyUtility((1.0,)), 0)


@pytest.mark.parametrize(
    "coeffs, T, expected", [((1.0,), 7, 7.0), ((0.0, 1.0), 4, 10.0), ((0.0, 0.0, 1.0), 3, 14.0), ((3.0,), 0, 0.0)]
)
def test_cumulative_utility(coeffs, T, expected):
    u = PolyUtility(coeffs)
    assert cumulative_utility(u, T) == expected
    assert u.cumulative_table(T)[T] == expected


def test_utility_validation():
    with pytest.raises(ValidationError):
        PolyUtility(())
    with pytest.raises(ValidationError):
        PolyUtility((-1.0,))
    with pytest.raises(ValidationError):
        PolyUtility((float("nan"),))
    with pytest.raises(ValidationError):
        UtilitySpec(degree=-1)


def test_instance_validation_rejects_bad_travel():
    sites = (Site(0, 0, 0), Site(1, 1, 0), Site(2, 2, 0))
    u = (PolyUtility.constant(1.0),) * 3
    with pytest.raises(ValidationError, match="symmetric"):
        GraphInstance(sites, [[0, 1, 2], [2, 0, 1], [2, 1, 0]], u)
    with pytest.raises(ValidationError, match="triangle"):
        GraphInstance(sites, [[0, 1, 5], [1, 0, 1], [5, 1, 0]], u)
    with pytest.raises(ValidationError, match=">= 1"):
        GraphInstance(sites, [[0, 0, 1], [0, 0, 1], [1, 1, 0]], u)
    with pytest.raises(ValidationError):
        GraphInstance(sites, [[0, 1, 1], [1, 0, 1], [1, 1, 0]], u, penalty=-1)
    with pytest.raises(ValidationError):
        GraphInstance(sites, [[0, 1, 1], [1, 0, 1], [1, 1, 0]], u[:2])


def test_travel_is_read_only():
    inst = generate_random_instance(3, seed=1)
    with pytest.raises(ValueError):
        inst.travel[0, 1] = 99


def test_json_round_trip(tmp_path):
    inst = generate_random_instance(6, side=50, seed=9, utility_spec=UtilitySpec(degree=2), penalty=3.5)
    path = inst.save(tmp_path / "inst.json")
    back = load_instance(path)
    assert back.to_json() == inst.to_json()
    assert back.utilities == inst.utilities
    assert back.penalty == 3.5
    data = json.loads(path.read_text())
    assert data["travel"][0][0] == 0


def test_csv_three_four_five(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("id,x,y\n0,0,0\n1,3,4\n")
    inst = load_sites_csv(p)
    assert inst.travel[0, 1] == 5


def test_csv_constant_column(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("id,x,y,c0\n0,0,0,2.5\n1,1,1,4\n")
    inst = load_sites_csv(p)
    assert [u.coefficients for u in inst.utilities] == [(2.5,), (4.0,)]
    assert inst.constant_utilities()


def test_csv_errors(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("id,x,y\n0,0,0\n1,abc,4\n")
    with pytest.raises(CsvParseError) as e:
        load_sites_csv(p)
    assert "row 3" in str(e.value) and "'x'" in str(e.value)
    p.write_text("id,x,y\n0,0,0\n0,1,1\n")
    with pytest.raises(CsvParseError, match="duplicate"):
        load_sites_csv(p)
    p.write_text("id,x,y\n0,0,0\n2,1,1\n")
    with pytest.raises(CsvParseError, match="contiguous"):
        load_sites_csv(p)
    p.write_text("name,x,y\n0,0,0\n")
    with pytest.raises(CsvParseError, match="header"):
        load_sites_csv(p)
    with pytest.raises(CsvParseError, match="cannot open"):
        load_sites_csv(tmp_path / "missing.csv")


def test_cumulative_tables_cached():
    inst = generate_random_instance(4, seed=2, utility_spec=UtilitySpec(degree=1))
    t = inst.cumulative_tables(10)
    assert t.shape == (4, 11)
    for j, u in enumerate(inst.utilities):
        assert t[j, 10] == pytest.approx(cumulative_utility(u, 10))
