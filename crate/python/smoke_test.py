"""Smoke test for the supgnet_py extension.

Build and install it first, e.g. `maturin develop --release -m crates/py/Cargo.toml`.
"""

import math

import supgnet_py as sp


def main():
    h = 1.0 / 20
    mu = sp.mu_from_local_peclet(1.0, h, 12.5)
    tau = sp.tau_theory(1.0, h, mu, 1)
    assert abs(tau - 0.0230) < 1e-4, tau

    problem = sp.Problem("val1d", mu)
    sol = sp.solve(problem, 20, 1, tau)
    assert sol.nodal_error() < 1e-8
    assert len(sol.coefficients) == 21

    res = sp.find_optimal_tau(problem, 20, 1)
    assert abs(res.tau_star / tau - 1) < 0.02, res.tau_star

    square = sp.Problem("train2d", sp.mu_from_global_peclet(math.sqrt(2), 1.0, 700.0))
    l2, h1 = sp.solve(square, 10, 2, 0.01).norms()
    assert 0 < l2 < h1

    records = sp.generate_dataset(3, seed=1, n_set=[10])
    assert all(r.tau_star > 0 for r in records)

    try:
        sp.Problem("nope", 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown problem accepted")

    print(f"supgnet_py {sp.__version__}: ok (tau*={res.tau_star:.4e}, {len(records)} records)")


if __name__ == "__main__":
    main()
