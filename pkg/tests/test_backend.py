"""The compiled kernels and the numpy fallback must agree."""
import numpy as np
import pytest

from binspike import _backend
from binspike.codebook import build_codebook
from binspike.model import ArModel, simulate

py = _backend.load("python")
try:
    cy = _backend.load("cython")
except ImportError:  # extension not built
    cy = None

needs_cy = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def test_default_backend_name():
    assert _backend.BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        _backend.load("fortran")


def test_env_forces_fallback(monkeypatch):
    monkeypatch.setenv("BINSPIKE_PURE_PYTHON", "1")
    assert _backend.load() is py


@pytest.mark.parametrize("mod", [py, pytest.param(cy, marks=needs_cy)], ids=["python", "cython"])
def test_search_semantics(mod):
    th = np.array([0.0, 0.5, 1.0, 1.5])
    q = np.array([-1.0, 0.25, 0.26, 0.75, 1.25, 1.5, 9.0])
    assert list(mod.nn_search(th, q)) == [0, 0, 1, 1, 2, 3, 3]
    assert list(mod.exact_search(th, np.array([0.5, 0.51, 1.5]), 1e-9)) == [1, -1, 3]


@needs_cy
@pytest.mark.parametrize("d", [1, 3, 7, 12])
def test_search_parity(d, rng):
    th = build_codebook(ArModel(0.83, 1.0, d)).thetas
    q = rng.uniform(-0.5, th[-1] + 0.5, 5000)
    q[:50] = th[rng.integers(0, th.size, 50)]
    q[50:60] = (th[:-1][:10] + th[1:][:10]) / 2 if th.size > 10 else q[50:60]
    assert np.array_equal(cy.nn_search(th, q), py.nn_search(th, q))
    assert np.array_equal(cy.exact_search(th, q, 1e-9), py.exact_search(th, q, 1e-9))


@needs_cy
@pytest.mark.parametrize("a,d", [(0.5, 2), (0.9, 5), (0.7, 1)])
def test_operator_parity(a, d, rng):
    model = ArModel(a, 1.0, d)
    m = 40
    x = rng.random(model.high_rate_length(m))
    lam = rng.normal(size=m)
    h = np.ascontiguousarray(model.h)
    np.testing.assert_allclose(cy.apply_forward(x, h, model.alpha_d, m), py.apply_forward(x, h, model.alpha_d, m), rtol=1e-12)
    np.testing.assert_allclose(cy.apply_adjoint(lam, h, model.alpha_d), py.apply_adjoint(lam, h, model.alpha_d), rtol=1e-12, atol=1e-14)
    # adjoint identity
    lhs = np.dot(py.apply_forward(x, h, model.alpha_d, m), lam)
    rhs = np.dot(x, py.apply_adjoint(lam, h, model.alpha_d))
    assert lhs == pytest.approx(rhs, rel=1e-12)


@needs_cy
def test_solver_parity():
    model = ArModel(0.8, 1.0, 3)
    _, z = simulate(model, 30, 0.35, 0.02, seed=3)
    h = np.ascontiguousarray(model.h)
    y = np.ascontiguousarray(z.values)
    a = cy.pdhg_box_l1(y, h, model.alpha_d, 1.0, 0.1, 0.3, 0.3, 3000, 1e-10)
    b = py.pdhg_box_l1(y, h, model.alpha_d, 1.0, 0.1, 0.3, 0.3, 3000, 1e-10)
    np.testing.assert_allclose(a[0], b[0], atol=1e-8)
    s1 = cy.fista_nn_lasso(y, model.alpha_d, 0.01, (1 - model.alpha_d) ** 2, 20000, 1e-12)
    s2 = py.fista_nn_lasso(y, model.alpha_d, 0.01, (1 - model.alpha_d) ** 2, 20000, 1e-12)
    np.testing.assert_allclose(s1[0], s2[0], atol=1e-8)


def test_pure_python_end_to_end():
    import os
    import subprocess
    import sys

    code = (
        "import hashlib, binspike as b\n"
        "m = b.ArModel(0.9, 1.0, 5)\n"
        "x, z = b.simulate(m, 300, 0.35, 0.01, seed=9)\n"
        "r = b.decode_train(z, b.build_codebook(m))\n"
        "print(b.BACKEND, hashlib.sha256(r.train.values.tobytes()).hexdigest())\n"
    )

    def run(pure):
        env = {k: v for k, v in os.environ.items() if k != "BINSPIKE_PURE_PYTHON"}
        if pure:
            env["BINSPIKE_PURE_PYTHON"] = "1"
        return subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()

    fallback, default = run(True), run(False)
    assert fallback[0] == "python"
    assert fallback[1] == default[1]
