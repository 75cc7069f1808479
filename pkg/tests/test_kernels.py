"""Compiled and pure-Python kernels must agree."""
import numpy as np
import pytest

from nvmirror import _backend, _kernels_py
from nvmirror.collection import CollectionGeometry, _kernel_args
from nvmirror.dipole import mirror_environment

compiled = pytest.importorskip("nvmirror._kernels")


def args(d, lam, transmission=False):
    env = mirror_environment(d)
    return _kernel_args(env, lam, CollectionGeometry(0.35, transmission))


@pytest.mark.parametrize("transmission", [False, True])
@pytest.mark.parametrize("d, lam", [(130.0, 700.0), (3456.0, 555.0), (20000.0, 890.0)])
def test_single_cell_agreement(d, lam, transmission):
    (eps, thick, ideal), rest = args(d, lam, transmission)
    a = compiled.collected_power(eps, thick, ideal, *rest)
    b = _kernels_py.collected_power(eps, thick, ideal, *rest)
    assert a[2] and b[2]
    assert a[0] == pytest.approx(b[0], rel=1e-13)


def test_scan_agreement():
    (eps, thick, ideal), rest = args(1000.0, 650.0)
    gaps = np.linspace(500.0, 3000.0, 51)
    a, ok_a = compiled.collected_power_scan(eps, thick, ideal, 0, gaps, *rest)
    b, ok_b = _kernels_py.collected_power_scan(eps, thick, ideal, 0, gaps, *rest)
    assert np.all(ok_a) and np.all(ok_b)
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_ideal_mirror_exit_supported():
    from nvmirror import materials as mat

    env = mirror_environment(200.0, mirror=mat.IDEAL_MIRROR)
    (eps, thick, ideal), rest = _kernel_args(env, 700.0, CollectionGeometry())
    assert ideal
    a = compiled.collected_power(eps, thick, ideal, *rest)[0]
    b = _kernels_py.collected_power(eps, thick, ideal, *rest)[0]
    assert a == pytest.approx(b, rel=1e-13)


def cone_power_homogeneous(a_par, a_perp, sin_max):
    """Closed form of the cone integral with no reflection."""
    c = np.sqrt(1 - sin_max ** 2)
    return a_perp * 0.75 * (2 / 3 - c + c ** 3 / 3) + a_par * 0.375 * ((1 - c ** 3) / 3 + 1 - c)


@pytest.mark.parametrize("module", [compiled, _kernels_py])
@pytest.mark.parametrize("sin_max", [0.05, 0.35 / 2.41, 0.9])
def test_homogeneous_cone_closed_form(module, sin_max):
    eps = np.array([2.41 ** 2, 2.41 ** 2], dtype=complex)
    val, err, ok = module.collected_power(eps, np.empty(0), False, 700.0, 8.0, 0.659, 0.341,
                                          sin_max, False, 1.0, 1e-10, 1e-15)
    assert ok
    assert val == pytest.approx(cone_power_homogeneous(0.659, 0.341, sin_max), rel=1e-12)


def test_backend_selected():
    assert _backend.BACKEND in ("compiled", "python")
