"""Smoke test for the depctl Python module.

Build and install the extension first:

    cd crates/python && maturin build --release -o dist && pip install dist/*.whl
"""

import math

import depctl


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    # Frechet transition matrix for alpha = 0.5 over varpi = [0.3, 0.7]
    p, nxt = depctl.transition_from_copula(depctl.Copula.frechet1(0.5), [0.3, 0.7])
    assert close(p[0][0], 0.4125, 5e-4) and close(p[1][1], 0.7482, 5e-4), p
    assert all(close(a, b, 1e-12) for a, b in zip(nxt, [0.3, 0.7]))

    transitions, laws = depctl.dependence_control([depctl.Copula.gaussian(-0.5)], [0.3, 0.7], 3)
    assert len(transitions) == 3 and len(laws) == 4

    # star product with the comonotone copula is the identity
    c = depctl.Copula.gaussian(0.5)
    cm = depctl.Copula.comonotone().star(c)
    assert close(cm(0.3, 0.6), c(0.3, 0.6), 1e-3)

    # constant arrival 1 against a normal(3, 2) service on a fine lattice
    values = [3.0 + 0.1 * k for k in range(-150, 151)]
    weights = [math.exp(-((v - 3.0) ** 2) / 4.0) for v in values]
    total = sum(weights)
    service = depctl.Kernel.iid(values, [w / total for w in weights])
    arrival = depctl.Kernel.constant(1.0)
    theta = depctl.stability_root(arrival, service)
    assert close(theta, 2.0, 1e-9), theta
    assert close(depctl.horizon_delay_bound(arrival, service, 2.0, 1.0)["theta_y"], 3.125, 1e-9)

    # two-state Rayleigh channel, as in the bound-sandwich scenario
    e = math.exp(0.5)
    fading = depctl.Kernel.capacity(p, 20_000.0, [[e, e], [0.7 * e, 0.7 * e]])
    assert close(fading.perron(0.0)["kappa"], 0.0, 1e-12)
    levels = [0.0, 1.0, 2.0, 3.0]
    bounds = depctl.constant_arrival_bounds(10_000.0, fading, levels)
    backlog, delay = depctl.simulate_queue(10_000.0, fading, 20_000, 200, 1)
    for (level, lower, upper), (_, p_hat, se, hits) in zip(bounds, depctl.tail_estimates(delay, levels)):
        if hits >= 50:
            assert lower - 3 * se <= p_hat <= upper + 3 * se, (level, lower, p_hat, upper)

    mean, se = depctl.martingale_check(fading, -1e-5, 20, 20_000, 3)
    assert abs(mean - 1.0) <= 4 * se, (mean, se)

    assert depctl.convex_order_leq([0.0], [1.0], [-1.0, 1.0], [0.5, 0.5])
    assert not depctl.convex_order_leq([-1.0, 1.0], [0.5, 0.5], [0.0], [1.0])

    try:
        depctl.stability_root(depctl.Kernel.constant(5.0), service)
    except depctl.DepctlError:
        pass
    else:
        raise AssertionError("unstable queue accepted")

    print("depctl smoke test passed")


if __name__ == "__main__":
    main()
