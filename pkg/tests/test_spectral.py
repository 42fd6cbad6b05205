"""Spectral analysis: modal cubic, generator pencils, conjugacy.

With kappa1 = 0 the semi-discrete generator block-diagonalizes over the
discrete elliptic eigenpairs, so its full spectrum must equal the union
of modal-cubic root triples -- an exact structural oracle, no PDE
asymptotics involved.
"""

import numpy as np
import pytest
import scipy.linalg

import mgtstab as M

from conftest import interval_config


def make_scenario(**over):
    return M.Scenario(interval_config(**over))


# ------------------------------------------------------------ modal cubic


def test_gamma_zero_roots_factor_exactly():
    rng = np.random.default_rng(21)
    for _ in range(50):
        tau, b, c, mu = rng.uniform(0.2, 3.0, 4)
        alpha = tau * c**2 / b  # gamma = 0
        roots = M.modal_cubic_roots(mu, {"tau": tau, "alpha": alpha, "b": b, "c": c})
        expected = np.array(
            [-alpha / tau, 1j * np.sqrt(b * mu / tau), -1j * np.sqrt(b * mu / tau)]
        )
        assert M.match_spectra(roots, expected) <= 1e-9
        assert np.abs(roots.real).max() <= 1e-9 or np.isclose(
            roots.real.min(), -alpha / tau
        )


def test_routh_hurwitz_agrees_with_root_signs():
    rng = np.random.default_rng(22)
    for _ in range(300):
        while True:
            tau, alpha, b, c, mu = rng.uniform(0.1, 3.0, 5)
            if abs(alpha - tau * c**2 / b) > 1e-6:
                break
        roots = M.modal_cubic_roots(mu, {"tau": tau, "alpha": alpha, "b": b, "c": c})
        assert (roots.real.max() < 0) == M.routh_hurwitz_stable(tau, alpha, b, c, mu)


def test_gamma_parameter_sign_matches_classification():
    scen = make_scenario(params={"tau": 1.0, "c": 1.0, "b": 1.0, "alpha": 2.0})
    assert M.gamma_parameter(1.0, 2.0, 1.0, 1.0) == pytest.approx(1.0)
    assert scen.params.stability_classification() == "stable"
    assert M.Scenario(
        interval_config(params={"alpha": 1.0})
    ).params.stability_classification() == "critical"
    assert M.Scenario(
        interval_config(params={"alpha": 0.5})
    ).params.stability_classification() == "unstable"


def test_modal_cubic_rejects_nonpositive_mu():
    with pytest.raises(ValueError):
        M.modal_cubic_roots(-1.0, {"tau": 1, "alpha": 2, "b": 1, "c": 1})


# ------------------------------------------------------- generator spectra


def test_spectrum_is_union_of_modal_triples():
    # kappa1 = 0 decouples the semi-discrete system over the eigenpairs of
    # (Ktilde, M); each keeps exactly the three modal-cubic roots
    scen = make_scenario(mesh={"resolution": 16}, params={"kappa1": 0.0})
    gen = M.assemble_generator(scen.bundle, scen.params, form="u")
    rep = M.spectrum(gen)
    mus = scipy.linalg.eigh(
        scen.bundle.Ktilde.toarray(), scen.bundle.Mmat.toarray(), eigvals_only=True
    )
    predicted = np.concatenate([M.modal_cubic_roots(mu, scen.params) for mu in mus])
    assert M.match_spectra(rep.eigenvalues, predicted) <= 1e-8


def test_dense_spectrum_report_shape():
    scen = make_scenario(mesh={"resolution": 12})
    gen = M.assemble_generator(scen.bundle, scen.params, form="u")
    rep = M.spectrum(gen)
    n = scen.mesh.n_nodes
    assert len(rep.eigenvalues) == 3 * n
    assert not rep.partial
    assert rep.meta["method"] == "dense-qz"
    assert rep.abscissa == pytest.approx(rep.eigenvalues.real.max())
    assert rep.stable == (rep.abscissa < 0)
    assert rep.abscissa < 0  # damped configuration


def test_eigenvalues_satisfy_pencil():
    scen = make_scenario(mesh={"resolution": 8})
    gen = M.assemble_generator(scen.bundle, scen.params, form="u")
    rep = M.spectrum(gen)
    E = gen.E.toarray()
    L = gen.L.toarray()
    scale = np.linalg.norm(L, 2)
    for lam in rep.eigenvalues[:: len(rep.eigenvalues) // 7]:
        sigma = np.linalg.svd(L - lam * E, compute_uv=False)
        assert sigma[-1] <= 1e-9 * scale


def test_unstable_spectrum_has_positive_abscissa():
    scen = make_scenario(mesh={"resolution": 16}, params={"alpha": 0.5, "kappa1": 0.0})
    gen = M.assemble_generator(scen.bundle, scen.params, form="u")
    rep = M.spectrum(gen)
    assert rep.abscissa > 0
    assert not rep.stable


def test_sparse_shift_invert_matches_dense_tail():
    scen = make_scenario(mesh={"resolution": 48})
    gen = M.assemble_generator(scen.bundle, scen.params, form="u")
    dense = M.spectrum(gen)
    sparse = M.spectrum(gen, dense_cap=10, n_partial=12)
    assert sparse.partial
    assert sparse.meta["method"] == "sparse-shift-invert"
    # every reported eigenvalue belongs to the dense spectrum
    for lam in sparse.eigenvalues:
        assert np.abs(dense.eigenvalues - lam).min() <= 1e-7
    # the smallest-modulus set contains the dominant (rightmost) pair here
    assert sparse.abscissa == pytest.approx(dense.abscissa, abs=1e-7)


# ------------------------------------------------------------- conjugacy


def test_m_transform_conjugates_generators():
    scen = make_scenario(mesh={"resolution": 8}, params={"tau": 0.8, "c": 1.2, "b": 1.5})
    gen_u = M.assemble_generator(scen.bundle, scen.params, form="u")
    gen_z = M.assemble_generator(scen.bundle, scen.params, form="z")
    n = scen.mesh.n_nodes
    Au = np.linalg.solve(gen_u.E.toarray(), gen_u.L.toarray())
    Az = np.linalg.solve(gen_z.E.toarray(), gen_z.L.toarray())
    q = scen.params.q
    I, Z = np.eye(n), np.zeros((n, n))
    T = np.block([[I, Z, Z], [q * I, I, Z], [Z, q * I, I]])
    conj = T @ Au @ np.linalg.solve(T, np.eye(3 * n))
    rel = np.linalg.norm(Az - conj, 2) / np.linalg.norm(Az, 2)
    assert rel <= 1e-10, rel


def test_u_and_z_spectra_agree():
    scen = make_scenario(mesh={"resolution": 8})
    gen_u = M.assemble_generator(scen.bundle, scen.params, form="u")
    gen_z = M.assemble_generator(scen.bundle, scen.params, form="z")
    dist = M.match_spectra(M.spectrum(gen_u).eigenvalues, M.spectrum(gen_z).eigenvalues)
    assert dist <= 1e-8, dist


# ------------------------------------------------------------ diagnostics


def test_abscissa_vs_decay_on_exact_exponential():
    scen = make_scenario(mesh={"resolution": 8})
    gen = M.assemble_generator(scen.bundle, scen.params, form="u")
    a = M.spectrum(gen).abscissa
    t = np.linspace(0.0, 10.0, 500)
    out = M.abscissa_vs_decay(gen, t, np.exp(2.0 * a * t))
    assert out["applicable"]
    assert out["ratio"] == pytest.approx(1.0, abs=1e-8)


def test_abscissa_vs_decay_not_applicable_when_unstable():
    scen = make_scenario(mesh={"resolution": 8}, params={"alpha": 0.5, "kappa1": 0.0})
    gen = M.assemble_generator(scen.bundle, scen.params, form="u")
    t = np.linspace(0.0, 5.0, 100)
    out = M.abscissa_vs_decay(gen, t, np.exp(t))
    assert not out["applicable"]
    assert out["ratio"] is None


def test_match_spectra_detects_permuted_noise():
    rng = np.random.default_rng(23)
    a = rng.standard_normal(30) + 1j * rng.standard_normal(30)
    b = np.random.default_rng(24).permutation(a) + 1e-10
    assert M.match_spectra(a, b) <= 2e-10
    with pytest.raises(ValueError):
        M.match_spectra(a, a[:5])
