import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perceptrisk.config import data_path
from perceptrisk.cost import (
    CostDistribution,
    CostMatrix,
    cost_distribution,
    dump_cost_csv,
    load_cost_csv,
    ordered_cost_vector,
    parse_cost_csv,
)
from perceptrisk.errors import ValidationError

# Column means of the shipped cost table (each true label weighted 1/10),
# read off the table by hand.
COLUMN_MEANS = {"SL": 95.75, "AT": 67.3, "CO": 67.7}


def names(cm, group):
    return {cm.labels[j] for j in group}


def test_round_trip_bit_exact(table1):
    text = data_path("costs", "gtsrb10.csv").read_text()
    assert dump_cost_csv(table1) == text
    again = parse_cost_csv(dump_cost_csv(table1))
    assert np.array_equal(again.costs, table1.costs) and again.labels == table1.labels


def test_column_at(table1):
    ocv = ordered_cost_vector(table1, table1.labels.index("AT"))
    assert ocv.values == (123, 117, 110, 50, 45.5, 41.5, 39, 30, 0)
    assert ocv.size == 9
    assert names(table1, ocv.groups[1]) == {"DP", "DE"}


def test_column_ss(table1):
    ocv = ordered_cost_vector(table1, table1.labels.index("SS"))
    assert ocv.values == (165, 105, 103, 102, 99.5, 86.5, 82, 77.5, 0)
    assert names(table1, ocv.groups[ocv.values.index(82)]) == {"RR", "CO"}


def test_small_hand_case():
    cm = CostMatrix([[0, 5], [7, 0]], ["a", "b"])
    ocv = ordered_cost_vector(cm, 0)
    assert ocv.values == (7, 0) and ocv.groups == ((1,), (0,))


def test_uniform_distribution_on_at(table1):
    i = table1.labels.index("AT")
    d = cost_distribution(ordered_cost_vector(table1, i), np.full(10, 0.1))
    assert d.probs[1] == pytest.approx(0.2)
    assert np.allclose(np.delete(d.probs, 1), 0.1)
    assert d.mean() == pytest.approx(COLUMN_MEANS["AT"])


def test_point_mass_on_perceived(table1):
    for i in range(table1.m):
        d = cost_distribution(ordered_cost_vector(table1, i), np.eye(10)[i])
        assert d.values[np.argmax(d.probs)] == 0.0 and d.probs.max() == 1.0


def test_column_means(table1):
    for lb, mean in COLUMN_MEANS.items():
        assert table1.costs[:, table1.labels.index(lb)].mean() == pytest.approx(mean)


def test_exact_equality_grouping():
    cm = CostMatrix([[0, 1, 1], [117.0, 0, 2], [117.0001, 3, 0]], ["a", "b", "c"])
    assert ordered_cost_vector(cm, 0).values == (117.0001, 117.0, 0.0)


@pytest.mark.parametrize(
    "costs",
    [[[1, 2], [3, 0]], [[0, -1], [2, 0]], [[0, np.nan], [1, 0]], [[0, 1, 2], [3, 0, 4]]],
)
def test_matrix_validation(costs):
    with pytest.raises(ValidationError):
        CostMatrix(costs, ["a", "b"])


def test_distribution_validation():
    with pytest.raises(ValidationError):
        CostDistribution([1.0, 0.0], [0.5, 0.6])
    with pytest.raises(ValidationError):
        cost_distribution(ordered_cost_vector(CostMatrix([[0, 1], [1, 0]], ["a", "b"]), 0), [1.0])


def test_parse_errors_carry_line():
    with pytest.raises(ValidationError, match=":3:"):
        parse_cost_csv("Sign,a,b\na,0,1\nb,x,0\n")
    with pytest.raises(ValidationError, match="row label"):
        parse_cost_csv("Sign,a,b\nb,0,1\na,1,0\n")


def test_load_label_mismatch(tmp_path):
    with pytest.raises(ValidationError, match="do not match"):
        load_cost_csv(data_path("costs", "gtsrb10.csv"), ["x"] * 10)


@given(st.integers(0, 2**32 - 1))
def test_regrouping_preserves_mass(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 9))
    costs = rng.integers(0, 4, size=(m, m)).astype(float)
    np.fill_diagonal(costs, 0)
    cm = CostMatrix(costs, [f"l{i}" for i in range(m)])
    cells = rng.dirichlet(np.ones(m))
    for i in range(m):
        ocv = ordered_cost_vector(cm, i)
        assert sorted(j for g in ocv.groups for j in g) == list(range(m))
        assert all(a > b for a, b in zip(ocv.values, ocv.values[1:]))
        assert ocv.values[-1] == costs[:, i].min()
        d = cost_distribution(ocv, cells)
        assert abs(d.probs.sum() - cells.sum()) <= 1e-12
        # relabeling permutes rows together with columns (keeps the diagonal
        # zero); the column of the same label keeps its values and groups
        perm = rng.permutation(m)
        relabeled = CostMatrix(costs[np.ix_(perm, perm)], [f"l{j}" for j in perm])
        pocv = ordered_cost_vector(relabeled, int(np.flatnonzero(perm == i)[0]))
        assert pocv.values == ocv.values
        assert [sorted(int(perm[j]) for j in g) for g in pocv.groups] == [sorted(g) for g in ocv.groups]
