import json

import numpy as np
import pytest

from binspike import io
from binspike.errors import FormatError
from binspike.model import ArModel, Trace, simulate


def test_trace_round_trip(tmp_path):
    model = ArModel(0.9, 1.5, 5)
    _, z = simulate(model, 30, 0.35, 0.05, seed=1)
    p = tmp_path / "t.csv"
    io.write_trace(p, z, seed=1)
    back = io.read_trace(p)
    assert back.model == model
    assert np.array_equal(back.values, z.values)
    assert back.noise_sigma == 0.05
    assert json.loads(io.sidecar_path(p).read_text())["seed"] == 1


def test_trace_without_sidecar(tmp_path):
    p = tmp_path / "t.csv"
    io.write_vector(p, [1.0, 2.0])
    with pytest.raises(FormatError):
        io.read_trace(p)
    t = io.read_trace(p, ArModel(0.5, 1, 2))
    assert isinstance(t, Trace) and len(t) == 2


@pytest.mark.parametrize("text", ["a,b\n0,1\n", "n,value\n1,0.5\n", "n,value\n0,x\n"])
def test_bad_csv(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(FormatError):
        io.read_vector(p)


def test_sidecar_missing_keys(tmp_path):
    p = tmp_path / "t.csv"
    io.write_vector(p, [1.0])
    io.sidecar_path(p).write_text('{"alpha": 0.5}')
    with pytest.raises(FormatError):
        io.read_trace(p)


def test_train_round_trip(tmp_path):
    p = tmp_path / "x.csv"
    io.write_vector(p, [0, 2, 2, 0, 0])
    x = io.read_train(p, decimation=2)
    assert x.amplitude == 2 and list(io.spike_indices(p)) == [1, 2]


def test_columns(tmp_path):
    p = tmp_path / "c.csv"
    io.write_columns(p, {"x0": [0, 1], "x1": [1, 0]})
    assert p.read_text().splitlines()[0] == "n,x0,x1"
