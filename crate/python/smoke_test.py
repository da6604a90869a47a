"""Smoke test for the mixed_urn_py extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/mixed_urn_py-*.whl
"""

import math

import mixed_urn_py as mu


def main():
    params = mu.UrnParams(1, 1, 1, 1, 1, "1/20")
    assert params.within_theorem()
    assert math.isclose(params.p, 0.05)

    kernel = mu.transition_kernel(params, 1, 1)
    assert math.isclose(sum(q for _, q in kernel), 1.0)

    law = mu.exact_x_law(params, 5)
    assert math.isclose(sum(q for _, _, q in law), 1.0)
    rational = mu.exact_x_law(params, 5, rational=True)
    assert len(rational) == len(law)

    report = mu.analyze(params)
    assert report["case"] == "Case1_ThetaPositive"
    assert report["fixed_point"] == 0.5
    assert mu.envelope(params, 0) == 1.0

    summary = mu.run_replicates(params, 2000, 2000, seed=7, checkpoints=[100, 2000], workers=2)
    assert [c["n"] for c in summary["checkpoints"]] == [100, 2000]
    assert summary == mu.run_replicates(params, 2000, 2000, seed=7, checkpoints=[100, 2000], workers=1)

    curve = mu.convergence_curve(params, 1024, 200, seed=3)
    assert curve["points"][-1]["n"] == 1024

    polya = mu.UrnParams(1, 1, 1, 1, 1, 0.0)
    xs = mu.sample_checkpoints(polya, 2000, 20000, seed=11)[0]
    d = mu.ks_statistic(xs)
    assert d < 0.02, d
    assert mu.ks_statistic(xs, 1.0, 1.0) == d
    assert mu.ks_statistic([0.25, 0.5, 0.75]) == 0.25
    assert mu.beta_cdf(1.0, 1.0, 0.3) == 0.3

    try:
        mu.UrnParams(0, 1, 1, 1, 1, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("y0 = 0 accepted")

    print("smoke test passed:", params, f"KS={d:.4f}")


if __name__ == "__main__":
    main()
