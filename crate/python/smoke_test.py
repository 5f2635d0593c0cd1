"""Quick end-to-end check of the Python bindings on a coarse reference problem."""

import math

import rtgrowth_py as rt


def main():
    params = rt.Params(g=1.0, gamma=5.0 / 3.0, mu=0.1, lambda_v=0.1)
    prof = rt.Profile({"family": "linear", "rho0": 1.0, "slope": 1.0}, params, constant=-2.0)
    assert prof.classification()["kind"] == "unstable_type"
    assert prof.hydrostatic_residual() < 1e-10
    assert abs(prof.upper_bound() - 3.4) < 1e-12

    prob = rt.Problem(prof, [8, 8])
    assert prob.n_dofs == 2 * 7 * 7
    a0 = prob.alpha(0.0)
    assert 0.0 < a0 <= prof.upper_bound()
    assert abs(prob.alpha(0.5) - prob.alpha(0.5, dense=True)) < 1e-8 * abs(a0)

    r = prob.growth_rate()
    lam = r["lambda"]
    assert lam > 0.0 and r["residual"] < 1e-8
    assert lam >= prob.incompressible_rate() - 1e-6

    mode = prob.mode()
    assert len(mode["v"]) == prob.n_dofs
    assert math.isclose(mode["lambda"], lam, rel_tol=1e-12)

    lam2, fitted = prob.evolve_linear(dt=0.01, e_foldings=2.0)
    assert abs(fitted - lam2) <= 0.02 * lam2

    try:
        rt.Profile({"family": "linear", "rho0": -1.0, "slope": 0.0}, params)
    except ValueError:
        pass
    else:
        raise AssertionError("negative density accepted")

    stable = rt.Profile({"family": "isothermal", "rho0": 2.0, "e0": 3.0}, params)
    try:
        rt.Problem(stable, [6, 6]).growth_rate()
    except RuntimeError:
        pass
    else:
        raise AssertionError("stable profile produced a growth rate")

    print(f"smoke test ok: Lambda = {lam:.6f}, fitted = {fitted:.6f}, alpha(0) = {a0:.4f}")


if __name__ == "__main__":
    main()
