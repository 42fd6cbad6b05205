"""Time integration: transform algebra, conservation, the energy identity.

The sharpest checks here are structural. Implicit midpoint preserves
quadratic invariants of a linear system exactly (up to solver roundoff),
and the discrete energy identity must close with O(dt^2) quadrature
error regardless of parameter regime.
"""

import logging

import numpy as np
import pytest

import mgtstab as M
from mgtstab.dynamics import SourceTerm, StateU

from conftest import interval_config


def make_scenario(**over):
    return M.Scenario(interval_config(**over))


def random_state(n, rng):
    return StateU(rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal(n), 0.0)


# ---------------------------------------------------------- m-transform


def test_m_transform_roundtrip():
    rng = np.random.default_rng(0)
    scen = make_scenario(params={"tau": 0.7, "c": 1.4, "b": 2.2})
    s = random_state(scen.mesh.n_nodes, rng)
    z = M.m_transform(s, scen.params)
    back = M.m_inverse(z, scen.params)
    np.testing.assert_allclose(back.u, s.u, rtol=1e-14)
    np.testing.assert_allclose(back.ut, s.ut, rtol=1e-13)
    np.testing.assert_allclose(back.utt, s.utt, rtol=1e-13)


def test_m_transform_definition():
    rng = np.random.default_rng(1)
    scen = make_scenario(params={"tau": 0.7, "c": 1.4, "b": 2.2})
    q = scen.params.q
    s = random_state(scen.mesh.n_nodes, rng)
    z = M.m_transform(s, scen.params)
    np.testing.assert_allclose(z.z, s.ut + q * s.u, rtol=1e-14)
    np.testing.assert_allclose(z.zt, s.utt + q * s.ut, rtol=1e-14)


# ---------------------------------------------------------- conservation


def test_midpoint_conserves_critical_energy():
    # gamma = alpha - tau c^2 / b = 0 and kappa1 = 0: E1 is a conserved
    # quadratic form, which implicit midpoint preserves to roundoff
    scen = make_scenario(
        mesh={"resolution": 64},
        params={"alpha": 1.0, "kappa1": 0.0},
        initial={"kind": "robin-mode"},
    )
    traj = M.simulate(
        scen.bundle, scen.params, scen.initial, T=2.0, dt=1e-3, store_states=False
    )
    drift = np.abs(traj.E1 - traj.E1[0]).max() / traj.E1[0]
    assert drift <= 1e-10, drift


def test_damped_energy_decreases():
    scen = make_scenario(mesh={"resolution": 32}, initial={"kind": "robin-mode"})
    traj = M.simulate(
        scen.bundle, scen.params, scen.initial, T=3.0, dt=2e-3, store_states=False
    )
    assert traj.E1[-1] < 0.5 * traj.E1[0]
    assert (np.diff(traj.E1) <= 1e-12).all()


def test_unstable_energy_grows():
    scen = make_scenario(
        mesh={"resolution": 32},
        params={"alpha": 0.5, "kappa1": 0.0},
        initial={"kind": "robin-mode"},
    )
    traj = M.simulate(
        scen.bundle, scen.params, scen.initial, T=20.0, dt=5e-3,
        store_states=False, compat_tol=np.inf,
    )
    assert traj.E[-1] > 10 * traj.E[0]


# ------------------------------------------------------- energy identity


def test_energy_identity_residual_second_order():
    scen = make_scenario(mesh={"resolution": 32}, initial={"kind": "robin-mode"})
    residuals = []
    for dt in (4e-3, 2e-3, 1e-3):
        traj = M.simulate(
            scen.bundle, scen.params, scen.initial, T=1.0, dt=dt, store_states=False
        )
        residuals.append(M.energy_identity_residual(traj))
    slope = M.refinement_slope(residuals)
    assert residuals[-1] <= 1e-4
    assert slope >= 1.9, (slope, residuals)


def test_energy_identity_with_forcing():
    scen = make_scenario(mesh={"resolution": 32}, initial={"kind": "robin-mode"})
    x = scen.mesh.nodes[:, 0]
    src = SourceTerm.separable(np.sin(np.pi * x), lambda t: np.cos(3.0 * t))
    traj = M.simulate(
        scen.bundle, scen.params, scen.initial, T=1.0, dt=1e-3,
        source=src, store_states=False,
    )
    assert np.abs(traj.work_rate).max() > 1e-3  # forcing actually acts
    assert M.energy_identity_residual(traj) <= 1e-4


def test_energy_identity_windowing():
    scen = make_scenario(mesh={"resolution": 16}, initial={"kind": "robin-mode"})
    traj = M.simulate(
        scen.bundle, scen.params, scen.initial, T=2.0, dt=1e-3, store_states=False
    )
    assert M.energy_identity_residual(traj, t_start=0.5, t_end=1.5) <= 1e-4


# ---------------------------------------------------------- compatibility


def test_robin_mode_is_compatible():
    scen = make_scenario(mesh={"resolution": 64}, initial={"kind": "robin-mode"})
    rep = M.check_compatibility(scen.initial, scen.bundle, scen.params)
    # residuals are recovered from element gradients, so they carry O(h)
    # noise; at n = 64 they sit well under the order-one default threshold
    assert max(rep.values()) < 0.02


def test_incompatible_data_flagged(caplog):
    scen = make_scenario(mesh={"resolution": 64})
    n = scen.mesh.n_nodes
    # u0' = 1 at the right end with u1 = 0 violates the gamma1 condition
    bad = StateU(np.linspace(1.0, 2.0, n), np.zeros(n), np.zeros(n), 0.0)
    rep = M.check_compatibility(bad, scen.bundle, scen.params)
    assert max(rep.values()) > 0.1
    with caplog.at_level(logging.WARNING, logger="mgtstab.dynamics"):
        traj = M.simulate(
            scen.bundle, scen.params, bad, T=0.05, dt=1e-2, store_states=False
        )
    assert any("compatibility" in r.getMessage() for r in caplog.records)
    assert traj.compat["r1"] == pytest.approx(rep["r1"])


# -------------------------------------------------------------- schemes


def test_bdf2_tracks_midpoint():
    scen = make_scenario(mesh={"resolution": 32}, initial={"kind": "robin-mode"})
    kw = dict(T=1.0, dt=5e-4, store_states=False)
    mid = M.simulate(scen.bundle, scen.params, scen.initial, scheme="implicit-midpoint", **kw)
    bdf = M.simulate(scen.bundle, scen.params, scen.initial, scheme="bdf2", **kw)
    assert abs(mid.E1[-1] - bdf.E1[-1]) / mid.E1[0] < 1e-4


def test_unknown_scheme_rejected():
    scen = make_scenario(mesh={"resolution": 8})
    with pytest.raises(ValueError):
        M.simulate(scen.bundle, scen.params, scen.initial, T=0.1, dt=1e-2, scheme="euler")


def test_single_step_is_linear():
    rng = np.random.default_rng(3)
    scen = make_scenario(mesh={"resolution": 16})
    gen = M.assemble_generator(scen.bundle, scen.params, form="u")
    a = random_state(scen.mesh.n_nodes, rng)
    b = random_state(scen.mesh.n_nodes, rng)
    ab = StateU(a.u + b.u, a.ut + b.ut, a.utt + b.utt, 0.0)
    sa = M.step(gen, a, 1e-2)
    sb = M.step(gen, b, 1e-2)
    sab = M.step(gen, ab, 1e-2)
    np.testing.assert_allclose(sab.u, sa.u + sb.u, rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(sab.utt, sa.utt + sb.utt, rtol=1e-11, atol=1e-12)


# ---------------------------------------------------------- reconstruction


def test_reconstruction_matches_simulated_u():
    scen = make_scenario(mesh={"resolution": 32}, initial={"kind": "robin-mode"})
    dt = 5e-4
    traj = M.simulate(scen.bundle, scen.params, scen.initial, T=1.0, dt=dt)
    z = traj.states_ut + scen.params.q * traj.states_u
    u_rec = M.reconstruct_u_from_z(traj.times, z, traj.states_u[0], scen.params)
    err = np.abs(u_rec - traj.states_u).max()
    assert err < 5e-6, err


def test_output_stride_subsamples():
    scen = make_scenario(mesh={"resolution": 16})
    traj = M.simulate(
        scen.bundle, scen.params, scen.initial, T=0.2, dt=1e-2,
        output_stride=4, store_states=False,
    )
    np.testing.assert_allclose(np.diff(traj.times), 4e-2, rtol=1e-12)
