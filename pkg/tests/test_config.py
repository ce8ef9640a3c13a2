import pytest

from prandtl_lab.config import KEYS, ConfigError, parse_config


def test_empty_gives_all_defaults():
    plan = parse_config("")
    assert set(plan.values) == set(KEYS)
    echo = plan.echo()
    for k in KEYS:
        assert f"{k} = " in echo
    assert plan["theta"] == 0.5 and plan["n_psi"] == 2000


def test_comments_and_blank_lines():
    plan = parse_config("# header\n\nn_psi = 800   # coarse\ninitial_data.eps=0.02\n")
    assert plan["n_psi"] == 800 and plan["initial_data.eps"] == 0.02
    assert "n_psi = 800\n" in plan.echo()
    assert "theta = 0.5  # default" in plan.echo()


def test_theta_below_half_rejected():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("theta = 0.3")


def test_duplicate_reports_both_lines():
    with pytest.raises(ConfigError) as exc:
        parse_config("dx0 = 0.01\n# c\nx_end = 50\ndx0 = 0.02\n")
    assert "line 4" in str(exc.value) and "line 1" in str(exc.value)


def test_unknown_key():
    with pytest.raises(ConfigError, match="line 2.*bogus"):
        parse_config("theta = 0.5\nbogus = 1\n")


@pytest.mark.parametrize("text", ["n_psi = many", "initial_data.eps = 0.5", "x_end = 0.5", "x_end = 500",
                                  "initial_data.kind = wave", "missing equals", "fit_window = 5",
                                  "initial_data.moment_free = maybe"])
def test_bad_values(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_bump_touching_wall_rejected():
    with pytest.raises(ConfigError):
        parse_config("initial_data.center = 1.0\ninitial_data.width = 1.0\n")


def test_run_id_stable_under_reordering():
    a = parse_config("n_psi = 800\ntheta = 0.6\n")
    b = parse_config("theta = 0.6\n\nn_psi = 800 # same\n")
    assert a.run_id() == b.run_id()
    assert a.run_id() != parse_config("n_psi = 801\ntheta = 0.6\n").run_id()


def test_explicit_default_same_run_id():
    assert parse_config("").run_id() == parse_config("theta = 0.5").run_id()


def test_psi_stretch_auto_and_fixed():
    assert parse_config("psi_stretch = auto")["psi_stretch"] is None
    assert parse_config("psi_stretch = 3.5")["psi_stretch"] == 3.5
