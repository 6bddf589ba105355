import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccdrelax.config import ConfigError, RunConfig, dump_config, parse_config, with_overrides


def fixture_text(name):
    return resources.files("ccdrelax.data").joinpath(name).read_text()


def test_empty_object_is_defaults():
    cfg = parse_config("{}")
    assert cfg == RunConfig()
    p = cfg.build_problem()
    assert p.n_metrics == 4
    np.testing.assert_array_equal(p.metric_bounds, [[0, 8], [0, 20], [0, 0.1], [0, 5]])


def test_shipped_fixture_matches_defaults():
    shipped = parse_config(fixture_text("microgrid4.json"))
    default = RunConfig()
    a, b = shipped.build_problem(), default.build_problem()
    np.testing.assert_array_equal(a.metric_bounds, b.metric_bounds)
    np.testing.assert_array_equal(a.input_bounds[1], b.input_bounds[1])
    assert a.theta_bounds[0] == b.theta_bounds[0] and a.phi_bounds[1] == b.phi_bounds[1]
    assert shipped.framework_config() == default.framework_config()
    assert shipped.baseline == default.baseline


def test_two_metric_fixture():
    p = parse_config(fixture_text("microgrid2.json")).build_problem()
    assert p.n_metrics == 2


@pytest.mark.parametrize(
    "text, key",
    [
        ('{"problem": {"theta_bounds": [0.5, 0.1]}}', "theta_bounds"),
        ('{"problem": {"horizon": 1}}', "problem.horizon"),
        ('{"solver": {"grid_resolution": 1}}', "solver.grid_resolution"),
        ('{"problem": {"metrics": [{"lb": 3, "ub": 1}, {}, {}, {}]}}', "problem.metrics.0"),
        ('{"problem": {"metrics": [{}, {}]}}', "problem"),
        ('{"framework": {"init": "sometimes"}}', "framework.init"),
        ('{"surprise": 1}', "surprise"),
        ('{"problem": {"metrics": [{"weight": 0}, {}, {}, {}]}}', "problem.metrics.0.weight"),
        ("[1, 2]", "<root>"),
        ("{not json", "malformed"),
    ],
)
def test_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert key in str(err.value)


def test_null_bound_is_unbounded():
    cfg = parse_config('{"problem": {"metrics": [{"lb": null, "ub": null}, {}, {}, {}]}}')
    assert np.isinf(cfg.build_problem().metric_bounds[0]).all()


def test_pre_relax_parsed():
    cfg = parse_config('{"framework": {"init": "pre-relax-bottom-2", "rows_per_advance": 2}}')
    assert cfg.framework_config().pre_relax == 2
    with pytest.raises(ConfigError):
        parse_config('{"framework": {"init": "pre-relax-bottom-5"}}')


def test_overrides():
    cfg = with_overrides(RunConfig(), seed=5, grid=51)
    assert cfg.ranking.seed == 5 and cfg.solver.grid_resolution == 51
    with pytest.raises(ConfigError):
        with_overrides(RunConfig(), grid=1)


bound = st.one_of(st.none(), st.floats(-100, 100, allow_nan=False))


@st.composite
def configs(draw):
    lo = draw(st.floats(0.05, 0.3))
    hi = draw(st.floats(0.3, 0.9))
    metrics = []
    for _ in range(4):
        a, b = draw(bound), draw(bound)
        if a is not None and b is not None and a > b:
            a, b = b, a
        metrics.append({"lb": a, "ub": b, "weight": draw(st.floats(0.01, 10))})
    return {
        "problem": {"theta_bounds": [lo, hi], "horizon": draw(st.integers(2, 6)), "metrics": metrics},
        "solver": {"grid_resolution": draw(st.integers(2, 500)), "refinement": draw(st.booleans())},
        "ranking": {"kind": draw(st.sampled_from(["grid", "uniform-random"])), "seed": draw(st.integers(0, 99))},
        "framework": {"rows_per_advance": draw(st.integers(1, 4))},
        "baseline": {"weight_levels": draw(st.lists(st.floats(0, 1), min_size=1, max_size=4))},
        "output": {"format": draw(st.sampled_from(["csv", "json", "text"]))},
    }


@settings(max_examples=100, deadline=None)
@given(configs())
def test_round_trip(data):
    cfg = parse_config(json.dumps(data))
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)
