import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from toa_lab import bundle, config
from toa_lab.bundle import Column, FigureBundle
from toa_lab.errors import ConfigError


def test_defaults_are_valid():
    assert config.validate(config.RunConfig()) == []


def test_shipped_defaults_match_builtin():
    assert config.paper_defaults().to_dict() == config.RunConfig().to_dict()


def test_zero_dt_diagnosed():
    cfg = config.from_dict({"dt": 0})
    assert "dt must be positive" in config.validate(cfg)


def test_non_power_of_two_grid_diagnosed():
    cfg = config.from_dict({"grid": {"n": 1000}})
    assert "grid.n must be a power of two >= 2 (got 1000)" in config.validate(cfg)


@pytest.mark.parametrize(
    "update, fragment",
    [
        ({"experiment": "nope"}, "experiment must be one of"),
        ({"output": {"format": "xml"}}, "output.format"),
        ({"packet": {"alpha": -1.0}}, "packet.alpha must be positive"),
        ({"grid": {"x_min": 5.0, "x_max": 1.0}}, "grid.x_min must be less"),
        ({"horizon": 1.0005}, "whole number of dt"),
        ({"times": [0.0, 0.00025]}, "whole multiples of dt"),
        ({"kappas": []}, "kappas must be a non-empty list"),
        ({"eeqt_kappas": [-2.0]}, "eeqt_kappas entries"),
        ({"detector": {"regularization": "gaussian"}}, "detector.sigma"),
        ({"detector": {"position": 50.0}}, "detector.position must lie on the grid"),
        ({"tau": {"start": 2.0, "stop": 1.0}}, "tau.stop must exceed"),
        ({"geometry": {"points": [5]}}, "geometry.points"),
        ({"workers": 0}, "workers must be a positive integer"),
        ({"dt": "fast"}, "dt must be a finite number"),
        ({"packet": {"x0": 19.0}}, "does not fit the grid"),
        ({"dt": 0.25}, "dt too large"),
    ],
)
def test_diagnostics(update, fragment):
    problems = config.validate(config.from_dict(update))
    assert any(fragment in p for p in problems), problems


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as exc:
        config.from_dict({"grid": {"points": 4}, "colour": "red"})
    assert sorted(exc.value.diagnostics) == ["colour: unknown key", "grid.points: unknown key"]


def test_section_must_be_object():
    with pytest.raises(ConfigError):
        config.from_dict({"grid": 4096})


def test_load_overlays_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"grid": {"n": 2048}}))
    cfg = config.load(path)
    assert cfg.grid.n == 2048 and cfg.grid.x_min == -20.0
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        config.load(path)


def test_require_valid_raises_with_all_problems():
    cfg = config.from_dict({"dt": 0, "grid": {"n": 3}})
    with pytest.raises(ConfigError) as exc:
        config.require_valid(cfg)
    assert len(exc.value.diagnostics) >= 2


def _sample_bundle():
    cols = [Column("t", "atomic_time", "time"), Column("p", "1/atomic_time", "density, with comma")]
    data = np.column_stack([np.linspace(0, 1, 5), np.array([0.1, 1 / 3, math.pi, 1e-300, -0.0])])
    return FigureBundle("fig9", tuple(cols), data, {"kappa": 8.0, "nested": {"a": [1, 2]}})


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip_is_exact(fmt, tmp_path):
    b = _sample_bundle()
    assert bundle.parse(bundle.emit(b, fmt), fmt) == b
    path = bundle.write(b, tmp_path / "out", fmt)
    assert path.name == f"fig9.{fmt}"
    assert bundle.read(path) == b


def test_csv_layout():
    text = bundle.to_csv(_sample_bundle())
    lines = text.splitlines()
    assert lines[0] == "# figure: fig9"
    assert lines[1].startswith("# metadata: ")
    assert lines[2].startswith("# columns: ")
    assert lines[3] == "t[atomic_time],p[1/atomic_time]"


def test_column_lookup():
    b = _sample_bundle()
    assert b.column("t")[-1] == 1.0
    with pytest.raises(KeyError):
        b.column("missing")


def test_bundle_shape_checked():
    with pytest.raises(ValueError):
        FigureBundle("x", (Column("a", "u"),), np.zeros((3, 2)))


def test_malformed_inputs_rejected():
    with pytest.raises(ValueError):
        bundle.from_csv("# figure: x\n")
    with pytest.raises(ValueError):
        bundle.from_csv('# figure: x\n# metadata: {}\n# columns: [""]\nnounit\n1.0\n')
    with pytest.raises(ValueError):
        bundle.emit(_sample_bundle(), "xml")
    with pytest.raises(ValueError):
        bundle.emit(FigureBundle("x", (Column("a", "u"),), np.array([[np.nan]])), "json")


names = st.text(st.characters(blacklist_categories=("Cs", "Cc"), blacklist_characters="[]"), min_size=1, max_size=8)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 4).flatmap(
        lambda c: st.tuples(
            st.lists(st.tuples(names, st.text(alphabet="abc/_1", max_size=6), st.text(max_size=10)),
                     min_size=c, max_size=c),
            arrays(float, st.tuples(st.integers(0, 6), st.just(c)),
                   elements=st.floats(allow_nan=False, allow_infinity=False)),
        )
    ),
    st.dictionaries(st.text(max_size=5), st.one_of(st.integers(), st.floats(allow_nan=False, allow_infinity=False),
                                                  st.text(max_size=5)), max_size=3),
    st.sampled_from(["csv", "json"]),
)
def test_round_trip_property(cols_data, metadata, fmt):
    cols, data = cols_data
    cols = [(n.strip() or "c", u, d) for n, u, d in cols]
    b = FigureBundle("figX", tuple(cols), data, metadata)
    assert bundle.parse(bundle.emit(b, fmt), fmt) == b
