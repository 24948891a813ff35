import numpy as np
import pytest

from perceptrisk.config import (
    RunConfig,
    data_path,
    default_config_path,
    dump_belief_csv,
    load_config,
    parse_action_csv,
    parse_belief_csv,
    parse_config,
)
from perceptrisk.errors import ValidationError


def test_default_config_matches_dataclass_defaults():
    cfg = load_config()
    assert cfg.check_files() is cfg
    ref = RunConfig()
    for name in ("labels", "T", "intervals", "q", "epsilon", "mu", "eta", "b0", "s_min", "s_max", "kappa"):
        assert getattr(cfg, name) == getattr(ref, name)
    assert cfg.cost_matrix.resolve() == data_path("costs", "gtsrb10.csv").resolve()
    assert default_config_path().is_file()


def test_relative_paths_resolve_against_config(tmp_path):
    (tmp_path / "c.csv").write_text("x")
    cfg = parse_config('cost_matrix = "c.csv"\nout = "res"\n', tmp_path)
    assert cfg.cost_matrix == tmp_path / "c.csv"
    assert str(cfg.out) == "res"


@pytest.mark.parametrize(
    "text, field",
    [
        ("epsilon = 0.0", "epsilon"),
        ("mu = 1.0", "mu"),
        ("eta = -1.0", "eta"),
        ("q = 1", "q"),
        ("intervals = 0", "intervals"),
        ("q = 2.5", "q"),
        ('format = "xml"', "format"),
        ("etas = [1.0, -2.0]", "etas"),
        ("noise_levels = [1.0, inf]", "noise_levels"),
    ],
)
def test_validation_names_field(tmp_path, text, field):
    with pytest.raises(ValidationError, match=f"'{field}'"):
        parse_config(text, tmp_path)


def test_unknown_and_nested(tmp_path):
    with pytest.raises(ValidationError, match="unknown"):
        parse_config("bogus = 1", tmp_path)
    with pytest.raises(ValidationError, match="nested"):
        parse_config("[q]\nx = 1", tmp_path)
    with pytest.raises(ValidationError):
        parse_config("q = ", tmp_path)


def test_missing_file(tmp_path):
    cfg = parse_config('action_map = "nope.csv"', tmp_path)
    with pytest.raises(FileNotFoundError, match="action_map"):
        cfg.check_files()


def test_action_csv_comments_and_errors():
    am = parse_action_csv("# note\nlabel,action\n\na,Stop\n# mid\nb,Go\n")
    assert am.actions == {"a": "Stop", "b": "Go"}
    with pytest.raises(ValidationError, match=":3:"):
        parse_action_csv("label,action\na,Stop\na,Go\n")
    with pytest.raises(ValidationError, match="header"):
        parse_action_csv("lab,act\n")


def test_belief_csv_grouping_round_trip():
    rng = np.random.default_rng(0)
    b = rng.dirichlet(np.ones(3), size=7)
    t = np.array([0.0, 0.4, 0.99, 1.0, 1.5, 2.2, 2.9])
    traj = parse_belief_csv(dump_belief_csv(["x", "y", "z"], t, b), tau=1.0)
    assert traj.labels.labels == ("x", "y", "z")
    assert [iv.step for iv in traj.intervals] == [1, 2, 3]
    assert [iv.q for iv in traj.intervals] == [3, 2, 2]
    assert np.array_equal(np.vstack([iv.beliefs for iv in traj.intervals]), b)
    assert traj.intervals[1].lines == (5, 6)


@pytest.mark.parametrize(
    "text, match",
    [
        ("t,p_a,p_b\n0.1,0.5,0.5\n0.2,-0.1,1.1\n", ":3: negative probability"),
        ("t,p_a,p_b\n0.1,0.5,0.4\n", ":2: probabilities sum"),
        ("t,p_a,p_b\n0.1,0.5\n", ":2: expected 3 fields"),
        ("t,p_a,p_b\n0.1,x,0.5\n", ":2:"),
        ("t,a,b\n", "header"),
        ("t,p_a,p_b\n-1,0.5,0.5\n", "time"),
    ],
)
def test_belief_csv_errors(text, match):
    with pytest.raises(ValidationError, match=match):
        parse_belief_csv(text, tau=1.0)


def test_belief_csv_label_mismatch():
    with pytest.raises(ValidationError, match="do not match"):
        parse_belief_csv("t,p_a,p_b\n0,0.5,0.5\n", 1.0, labels=("b", "a"))
