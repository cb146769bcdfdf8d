import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chstab.dynamics import ModelParams, simulate
from chstab.feedback import build_pointwise
from chstab.io import (
    TIMESERIES_HEADER, read_field_csv, read_timeseries_csv, write_field_csv,
    write_timeseries_csv,
)
from chstab.lab.config import (
    ConfigError, ExperimentConfig, config_to_text, load_config, parse_config, with_overrides,
)
from chstab.spectral import Discretization, SpectralField

SAMPLE = """\
[discretization]
dim = 2
modes = 12

[model]
nu = 0.01
tau = 1e-3
t_end = 0.05

[feedback]
kind = pointwise
M = 4
lambda = 25

[initial]
kind = tanh_profile

[output]
directory = out
snapshot_times = 0, 0.01
"""


# -- field files --------------------------------------------------------------------

@pytest.mark.parametrize("dim", [1, 2])
def test_field_csv_round_trip(tmp_path, dim):
    d = Discretization(dim, 6)
    f = SpectralField(d, np.random.default_rng(0).standard_normal(d.size))
    path = tmp_path / "f.csv"
    write_field_csv(f, path)
    header = path.read_text().splitlines()[0]
    assert header == ("x,value" if dim == 1 else "x,y,value")
    g = read_field_csv(path, d)
    assert np.abs(g.coeffs - f.coeffs).max() < 1e-13


def test_field_csv_errors(tmp_path):
    d = Discretization(1, 4)
    path = tmp_path / "f.csv"
    write_field_csv(SpectralField.zeros(d), path)
    lines = path.read_text().splitlines()
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines[:3] + ["0.4,abc"] + lines[4:]) + "\n")
    with pytest.raises(ValueError, match=":4:"):
        read_field_csv(bad, d)
    with pytest.raises(ValueError, match="samples"):
        read_field_csv(path, Discretization(1, 5))
    with pytest.raises(ValueError, match="header"):
        read_field_csv(path, Discretization(2, 4))


# -- time series --------------------------------------------------------------------

def _record():
    d = Discretization(1, 6)
    y0 = SpectralField.from_function(d, lambda x: np.cos(np.pi * x))
    _, rec = simulate(y0, None, None, build_pointwise(d, 2, 5.0), ModelParams(0.1, 0.01, 0.05))
    return rec


def test_timeseries_round_trip(tmp_path):
    rec = _record()
    path = tmp_path / "ts.csv"
    write_timeseries_csv(rec, path)
    assert path.read_text().splitlines()[0] == ",".join(TIMESERIES_HEADER)
    data = read_timeseries_csv(path)
    assert np.array_equal(data["z_norm_sq"], rec.z_norm_sq)
    assert np.array_equal(data["t"], rec.t)
    assert np.all(np.isnan(data["energy_lhs"]))
    assert data["newton_iters"].dtype.kind == "i"


def test_timeseries_header_is_stable():
    assert TIMESERIES_HEADER == [
        "n", "t", "z_norm_sq", "energy_lhs", "energy_rhs", "feedback_energy", "newton_iters",
    ]


def test_timeseries_malformed_row_reports_row(tmp_path):
    path = tmp_path / "ts.csv"
    write_timeseries_csv(_record(), path)
    lines = path.read_text().splitlines()
    lines[3] = "2,0.02,oops,nan,nan,0,1"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="row 4"):
        read_timeseries_csv(path)
    lines[3] = "2,0.02"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="row 4"):
        read_timeseries_csv(path)


# -- configuration --------------------------------------------------------------------

def test_parse_sample():
    cfg = parse_config(SAMPLE)
    assert cfg.modes == 12 and cfg.M == 4 and cfg.lam == 25.0
    assert cfg.snapshot_times == (0.0, 0.01)
    assert cfg.grid is None and cfg.R is None


def test_config_round_trip_is_normalized():
    cfg = parse_config(SAMPLE)
    text = config_to_text(cfg)
    again = parse_config(text)
    assert again == cfg
    assert config_to_text(again) == text


@settings(max_examples=40, deadline=None)
@given(
    modes=st.integers(1, 64), nu=st.floats(1e-5, 10), tau=st.floats(1e-6, 1),
    M=st.integers(0, 16), lam=st.floats(0, 1e6), R=st.one_of(st.none(), st.floats(0, 100)),
    kind=st.sampled_from(["pointwise", "cell_average", "weighted", "nonlocal"]),
    snaps=st.lists(st.floats(0, 10), max_size=4).map(tuple),
)
def test_config_round_trip_property(modes, nu, tau, M, lam, R, kind, snaps):
    cfg = ExperimentConfig(modes=modes, nu=nu, tau=tau, M=M, lam=lam, R=R,
                           feedback_kind=kind, snapshot_times=snaps).validate()
    assert parse_config(config_to_text(cfg)) == cfg


def test_config_errors_name_the_line():
    with pytest.raises(ConfigError, match=r"<config>:13: unknown key 'gain'"):
        parse_config(SAMPLE.replace("lambda = 25", "gain = 25"))
    with pytest.raises(ConfigError, match=r":2: cannot parse dim"):
        parse_config(SAMPLE.replace("dim = 2", "dim = two"))
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(SAMPLE + "\n[extra]\nfoo = 1\n")


def test_config_semantic_errors():
    with pytest.raises(ConfigError, match="nu"):
        parse_config(SAMPLE.replace("nu = 0.01", "nu = -1"))
    with pytest.raises(ConfigError, match="feedback kind"):
        parse_config(SAMPLE.replace("kind = pointwise", "kind = magic"))
    with pytest.raises(ConfigError):
        with_overrides(ExperimentConfig(), bogus=1)
    assert with_overrides(ExperimentConfig(), M=3).M == 3


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")


def test_config_text_omits_unset_keys():
    text = config_to_text(ExperimentConfig())
    assert "grid" not in text
    assert "R =" not in text
    assert text.startswith("[discretization]\n")
    assert math.isclose(parse_config(text).nu, 0.01)
