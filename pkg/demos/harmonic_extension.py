"""The Neumann map: harmonic extension of gamma1 flux data.

solve_neumann_map(bundle, phi) returns the weak solution of

    -Delta psi = 0,   d_nu psi + kappa0 psi = 0 on gamma0,
                      d_nu psi = phi         on gamma1,

the building block that turns boundary data into interior fields. Three
checks below: an exact 1D solve (the continuous solution is linear, so
P1 elements reproduce it to roundoff), second-order 2D convergence
against a harmonic cubic whose flux data are continuous at the corners,
and the self-adjointness identity <N phi, xi>_{gamma1} = <phi, N xi>_{gamma1}
that the discrete map inherits from the symmetric bilinear form.
"""

import numpy as np

import mgtstab as M
from mgtstab.discretization import MaterialParams


def bundle_1d(n, kappa0):
    cfg = M.load_config({
        "geometry": {"kind": "interval", "x_left": 0.0, "x_right": 1.0, "gamma0_end": "left"},
        "mesh": {"resolution": n},
        "params": {"tau": 1, "c": 1, "b": 1, "alpha": 2, "kappa0": kappa0, "kappa1": 1},
        "time": {"T": 1, "dt": 0.1},
    })
    return M.Scenario(cfg).bundle


def bundle_2d(n, kappa0):
    geo = M.named_geometry("unit-square")
    mesh = M.build_mesh(geo, n)
    params = MaterialParams.constant(mesh, 1.0, 1.0, 1.0, 2.0, kappa0, 1.0)
    return M.assemble_operators(mesh, params)


def main():
    # 1) exact 1D: psi'' = 0, psi'(0) = 2 psi(0), psi'(1) = 3  =>  3x + 1.5
    bundle = bundle_1d(32, kappa0=2.0)
    phi = np.zeros(bundle.mesh.n_nodes)
    phi[-1] = 3.0
    psi = M.solve_neumann_map(bundle, phi)
    x = bundle.mesh.nodes[:, 0]
    print("1D linear solution: max |psi - (3x + 1.5)| = %.2e"
          % np.abs(psi - 3 * x - 1.5).max())

    # 2) 2D convergence against a harmonic cubic (kappa0 = 1 on the bottom)
    print("\n2D harmonic cubic, L2 error under refinement:")
    errs = []
    for n in (8, 16, 32, 64):
        b2 = bundle_2d(n, kappa0=1.0)
        xs, ys = b2.mesh.nodes[:, 0], b2.mesh.nodes[:, 1]
        ref = (3 * xs**2 * ys - ys**3 + 3 * xs**2 - 3 * ys**2
               - 3 * xs * ys - 3 * xs + 15 * ys + 15)
        phi2 = np.zeros(b2.mesh.n_nodes)
        side = np.isclose(xs, 0.0) | np.isclose(xs, 1.0)
        top = np.isclose(ys, 1.0)
        phi2[side] = 3 * ys[side] + 3
        phi2[top] = 3 * xs[top] ** 2 - 3 * xs[top] + 6
        e = M.solve_neumann_map(b2, phi2) - ref
        errs.append(float(np.sqrt(e @ b2.Mmat @ e)))
        print("  n = %3d   ||err||_L2 = %.4e" % (n, errs[-1]))
    print("observed order: %.3f" % M.refinement_slope(errs))

    # 3) adjoint identity, random data
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(32):
        xi = rng.standard_normal(b2.mesh.n_nodes)
        ph = rng.standard_normal(b2.mesh.n_nodes)
        r = M.check_adjoint_identity(b2, xi, ph)
        worst = max(worst, r / (np.linalg.norm(xi) * np.linalg.norm(ph)))
    print("\nadjoint identity over 32 random pairs: worst normalized "
          "residual %.2e" % worst)


if __name__ == "__main__":
    main()
