"""Smoke test for the fonspn extension module.

Build and install first, e.g. `pip install maturin && maturin develop -m crates/python/Cargo.toml`.
"""

import math

import fonspn

CONFIG = """
master_seed = 1
trials = 2
total_samples = 8000
steady_window = 500
moment_frames = 10000

[system]
seed = 7
unit_norm = true

[input]
kind = "gaussian"
variance = 1.0
ar1_pole = 0.9

[noise]
kind = "gaussian"
variance = 0.001

[bank]
bands = 4
length = 32

[algo]
algorithm = "nsaf"
mu = 0.5
taps = 8
"""


def main():
    xs = fonspn.sample_sas(1.0, 0.5, 200_000, 3)
    ecf = sum(math.cos(x) for x in xs) / len(xs)
    assert abs(ecf - math.exp(-0.5)) < 0.01, ecf

    colored = fonspn.color_ar1([1.0, 0.0, 0.0], 0.5)
    assert colored == [1.0, 0.5, 0.25]

    lo, hi = fonspn.beta_range(0.7, 0.75)
    assert abs(lo - 0.325) < 1e-12 and hi == 0.7
    assert abs(fonspn.gain(-2.0, 0.7, 0.65) + 2 ** 0.05) < 1e-12
    assert abs(fonspn.fractional_power_derivative(2.0, 1.0, 3.0) - 6.0) < 1e-12

    bank = fonspn.design_bank(4, 32)
    assert bank.num_bands == 4 and len(bank.coeffs[0]) == 32
    assert bank.power_complementarity_ripple() < 0.05

    f = fonspn.AdaptiveFilter("fonspn", 0.5, 2, p=2.0, beta=1.0, eps=0.0)
    errors = f.step([[1.0, -2.0]], [1.0])
    assert errors == [1.0]
    assert all(abs(w - t) < 1e-15 for w, t in zip(f.weights, [0.1, -0.2]))

    try:
        fonspn.gain(1.0, 0.5, 0.6)
    except ValueError:
        pass
    else:
        raise AssertionError("p < beta accepted")

    report = fonspn.theory_report(CONFIG)
    assert 1.5 < report["mu_bound"] < 2.5, report

    result = fonspn.run_experiment(CONFIG, ["algo.mu=0.3"])
    assert result["diverged_trials"] == 0
    assert len(result["nmsd_db"]) == 2000
    assert result["steady_db"] < -20.0, result["steady_db"]

    print("fonspn smoke test passed")


if __name__ == "__main__":
    main()
