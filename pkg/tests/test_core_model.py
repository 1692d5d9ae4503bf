import json
import math

import numpy as np
import pytest

from dpl.core_model import (ComplexState, NetworkSpec, SLParams, as_network_spec, load_params,
                            sl_field, sl_rhs)
from tests.conftest import random_params


def test_params_validation():
    with pytest.raises(ValueError):
        SLParams(a=0.0)
    with pytest.raises(ValueError):
        SLParams(b=0.0)
    with pytest.raises(ValueError):
        SLParams(eps=-0.1)
    with pytest.raises(ValueError):
        SLParams(tau=-1.0)
    with pytest.raises(ValueError):
        SLParams(rho=float("nan"))
    p = SLParams(a=4.0, b=-2.0, rho=0.3, eps=0.1, tau=1.0)
    assert p.omega == -2.0
    assert p.radius == 2.0
    assert math.isclose(p.alpha, 0.3 + 2.0)


def test_params_round_trip(tmp_path):
    p = SLParams(a=1.5, b=0.7, rho=-0.2, eps=0.05, tau=2.5)
    path = tmp_path / "p.json"
    path.write_text(json.dumps(p.to_dict()))
    assert load_params(path) == p
    with pytest.raises(ValueError):
        SLParams.from_mapping({"a": 1, "bogus": 2})


def test_sl_rhs_examples():
    p = SLParams(a=1, b=1, rho=0, eps=0)
    out = sl_rhs(p, ComplexState(1, 1), ComplexState(0.3, -2j))
    assert abs(out.z1 - 1j) < 1e-15
    p = SLParams(a=1, b=1, rho=0, eps=0.1, tau=2.0)
    out = sl_rhs(p, ComplexState(1, 1), ComplexState(1, 1))
    assert abs(out.z1 - 1j) < 1e-15 and abs(out.z2 - 1j) < 1e-15
    p = SLParams(a=1, b=1, rho=math.pi / 2, eps=0.1)
    out = sl_rhs(p, ComplexState(1, 1), ComplexState(0, 0))
    assert abs(out.z1 - 0.9j) < 1e-15


def _random_state(rng):
    z = rng.normal(size=4)
    return ComplexState(complex(z[0], z[1]), complex(z[2], z[3]))


def test_phase_shift_equivariance(rng):
    for _ in range(200):
        p = random_params(rng)
        z, zd = _random_state(rng), _random_state(rng)
        chi = rng.uniform(0, 2 * math.pi)
        lhs = sl_rhs(p, z.rotated(chi), zd.rotated(chi))
        rhs = sl_rhs(p, z, zd).rotated(chi)
        assert abs(lhs.z1 - rhs.z1) < 1e-13 and abs(lhs.z2 - rhs.z2) < 1e-13


def test_exchange_symmetry_and_decoupling(rng):
    for _ in range(100):
        p = random_params(rng)
        z, zd = _random_state(rng), _random_state(rng)
        assert sl_rhs(p, z.swapped(), zd.swapped()) == sl_rhs(p, z, zd).swapped()
        p0 = p.replace(eps=0.0)
        assert sl_rhs(p0, z, zd) == sl_rhs(p0, z, _random_state(rng))
        assert sl_rhs(p0, z, zd).z1 == sl_field(p0, z.z1)


def test_network_spec_matches_sl_rhs(rng):
    for _ in range(100):
        p = random_params(rng)
        spec = as_network_spec(p)
        assert spec.n == 2 and spec.dims == (2, 2) and spec.size == 4
        assert np.array_equal(spec.delays, [[0, p.tau], [p.tau, 0]])
        z, zd = _random_state(rng), _random_state(rng)
        x = z.as_real()
        xd = zd.as_real()
        out = spec.rhs(x, lambda j, k: xd[2 * k:2 * k + 2])
        ref = sl_rhs(p, z, zd).as_real()
        assert np.max(np.abs(out - ref)) <= 1e-14 * max(1.0, np.max(np.abs(ref)))


def test_network_spec_validation():
    F = lambda x: x  # noqa: E731
    with pytest.raises(ValueError):
        NetworkSpec(dims=(1, 1), intrinsic=(F, F), coupling=((None, None), (None, None)),
                    delays=np.array([[0, -1.0], [1.0, 0]]))
    with pytest.raises(ValueError):
        NetworkSpec(dims=(1, 1), intrinsic=(F, F), coupling=((None, None),),
                    delays=np.zeros((2, 2)))
    spec = NetworkSpec(dims=(1,), intrinsic=(F,), coupling=((None,),), delays=np.zeros((1, 1)))
    with pytest.raises(ValueError):
        spec.delays[0, 0] = 1.0


def test_complex_state_views():
    z = ComplexState(1 + 2j, -3 + 0.5j)
    assert np.array_equal(z.as_real(), [1, 2, -3, 0.5])
    assert ComplexState.from_real(z.as_real()) == z
    assert z.is_finite()
    assert not ComplexState(float("nan"), 0).is_finite()
    assert ComplexState(-1, 1).psi == math.pi
    assert abs(ComplexState(1, np.exp(0.01j)).psi + 0.01) < 1e-15
