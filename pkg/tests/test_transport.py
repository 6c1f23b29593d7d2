from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slabkin.errors import ConfigError, NumericalError
from slabkin.fields import perp
from slabkin.grids import norm_dm
from slabkin.transport import (SimConfig, build_setup, convexity_ratio, initial_field, run_simulation, stable_dt,
                               step_imex, time_grid, transport_rhs)

seeds = st.integers(0, 2**32 - 1)
BCS = [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5), (0.3, 0.3), (0.0, 0.0)]


def _cfg(ab=(1.0, 0.0), **kw):
    base = dict(epsilon=0.5, nx=16, nv=16, T=0.05)
    base.update(kw)
    return SimConfig(alpha_left=ab[0], alpha_right=ab[0], beta_left=ab[1], beta_right=ab[1], **base)


def test_stable_dt_formula():
    assert stable_dt(SimConfig()) == pytest.approx(0.5 / 512, rel=1e-15)
    assert stable_dt(SimConfig(epsilon=0.5)) == pytest.approx(0.5 * stable_dt(SimConfig()), rel=1e-15)
    assert stable_dt(SimConfig(potential="linear", potential_amplitude=1.0)) < stable_dt(SimConfig())


def test_default_step_is_convex():
    for pot, amp in (("zero", 0.0), ("cosine", 0.5), ("linear", 2.0)):
        cfg = SimConfig(potential=pot, potential_amplitude=amp)
        s = build_setup(cfg)
        assert convexity_ratio(s, stable_dt(cfg, s)) <= 1.0


@pytest.mark.parametrize("pot", [("zero", 0.0), ("cosine", 0.5), ("linear", -1.0)])
@pytest.mark.parametrize("ab", [(1.0, 0.0), (0.4, 0.6)])
def test_constants_stationary(pot, ab):
    cfg = _cfg(ab, potential=pot[0], potential_amplitude=pot[1])
    s = build_setup(cfg)
    c = np.full((cfg.nx, cfg.nv), 2.0)
    assert np.max(np.abs(transport_rhs(c, s))) < 1e-12
    np.testing.assert_allclose(step_imex(c, stable_dt(cfg, s), s), c, rtol=1e-14)


def _interior_error_x(nx):
    cfg = SimConfig(epsilon=0.5, nx=nx, nv=32)
    s = build_setup(cfg)
    x = s.xgrid.centers
    f = np.repeat(np.sin(2 * np.pi * x)[:, None], cfg.nv, axis=1)
    exact = -np.outer(2 * np.pi * np.cos(2 * np.pi * x), s.vgrid.nodes) / cfg.epsilon
    band = (x > 0.2) & (x < 0.8)
    return np.max(np.abs(transport_rhs(f, s) - exact)[band][:, np.abs(s.vgrid.nodes) <= 3])


def test_x_transport_first_order_taylor_oracle():
    e = [_interior_error_x(nx) for nx in (64, 128, 256)]
    assert 0.8 <= math.log2(e[0] / e[1]) <= 1.2
    assert 0.8 <= math.log2(e[1] / e[2]) <= 1.2


def _interior_error_v(nv, a=0.5):
    cfg = SimConfig(epsilon=0.5, nx=32, nv=nv, potential="linear", potential_amplitude=a)
    s = build_setup(cfg)
    f = np.tile(s.vgrid.nodes, (cfg.nx, 1))
    r = transport_rhs(f, s)[8:-8][:, np.abs(s.vgrid.nodes) <= 2]
    return np.max(np.abs(r - a / cfg.epsilon))


def test_potential_drift_oracle():
    e = [_interior_error_v(nv) for nv in (64, 128, 256)]
    assert e[2] < 0.1
    assert 0.8 <= math.log2(e[0] / e[1]) <= 1.2


@given(seeds, st.sampled_from(BCS), st.sampled_from(["bgk", "fp"]))
def test_step_never_increases_norm(seed, ab, kind):
    cfg = _cfg(ab, kind=kind, potential="cosine", potential_amplitude=0.5)
    s = build_setup(cfg)
    f = np.random.default_rng(seed).normal(1.0, 1.0, size=(cfg.nx, cfg.nv))
    g = step_imex(f, stable_dt(cfg, s), s)
    assert norm_dm(g, s.meas) <= norm_dm(f, s.meas) * (1 + 1e-12)


@given(seeds)
def test_bgk_step_contracts_fluctuation(seed):
    cfg = _cfg(epsilon=0.25)
    s = build_setup(cfg)
    dt = stable_dt(cfg, s)
    f = np.random.default_rng(seed).normal(size=(cfg.nx, cfg.nv))
    fstar = f + dt * transport_rhs(f, s)
    g = step_imex(f, dt, s)
    nu = dt / cfg.epsilon**2
    assert norm_dm(perp(g, s.vgrid), s.meas) <= norm_dm(perp(fstar, s.vgrid), s.meas) / (1 + nu) * (1 + 1e-13)


def test_time_grid_hits_T():
    cfg = SimConfig(T=1.0)
    n, dt = time_grid(cfg, build_setup(cfg))
    assert n * dt == pytest.approx(1.0, rel=1e-15)
    assert dt <= stable_dt(cfg)
    with pytest.raises(ConfigError):
        time_grid(cfg.replace(dt=1.0), build_setup(cfg))


def test_run_is_deterministic_and_conservative():
    cfg = _cfg((0.6, 0.4), T=0.1, snapshot_every=10)
    a, b = run_simulation(cfg), run_simulation(cfg)
    assert [r.row() for r in a.records] == [r.row() for r in b.records]
    mass = a.column("mass")
    assert np.max(np.abs(mass - mass[0])) <= 1e-12 * mass[0]
    assert a.snapshots[0][0] == 0.0 and a.snapshots[-1][0] == pytest.approx(0.1)


def test_initial_presets():
    cfg = SimConfig(nx=8, nv=8, vmax=4.0)
    s = build_setup(cfg)
    for kind in ("cosine", "bump", "constant"):
        f = initial_field(cfg.replace(initial=kind), s)
        assert np.max(np.abs(perp(f, s.vgrid))) < 1e-15
    f = initial_field(cfg.replace(initial="shifted"), s)
    assert np.max(np.abs(perp(f, s.vgrid))) > 0.1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numerical_error_reports_step():
    cfg = _cfg()
    s = build_setup(cfg)
    f = np.ones((cfg.nx, cfg.nv))
    f[3, 3] = np.inf
    with pytest.raises(NumericalError) as exc:
        step_imex(f, stable_dt(cfg, s), s, step=7)
    assert exc.value.step == 7


@pytest.mark.parametrize("kw, key", [
    (dict(epsilon=0.0), "model.epsilon"), (dict(epsilon=1.5), "model.epsilon"), (dict(cfl=1.0), "time.cfl"),
    (dict(T=-1.0), "time.T"), (dict(nv=63), "grids.nv"), (dict(kind="bolt"), "model.kind"),
    (dict(alpha_left=0.6, beta_left=0.5), "boundary.alpha_left"), (dict(initial="x"), "initial.kind"),
])
def test_config_errors(kw, key):
    with pytest.raises(ConfigError) as exc:
        SimConfig(**kw)
    assert exc.value.key == key
