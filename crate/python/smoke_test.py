"""Smoke test for the critmass extension module.

Build and run:
    cargo build --release -p critmass-py --features extension-module
    cp target/release/libcritmass.so python/critmass.so
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import critmass  # noqa: E402


def main():
    ds = critmass.Dataset.fixture()
    assert len(ds) == 30
    active = ds.exclude("#9")
    assert active.active_len == 29 and active.excluded == [9]

    fit = critmass.fit_piecewise(active, "continuous")
    assert 0.0 < fit.r_squared < 1.0
    assert fit.standard_errors is None
    assert math.isclose(fit.predict(fit.breakpoint), fit.params["a1"] + fit.params["b1"] * fit.breakpoint, rel_tol=1e-9)

    boot = critmass.bootstrap(active, fit, seed=2008, resamples=400)
    se = boot.fit.standard_errors
    assert se is not None and se["breakpoint"] > 0
    grid, pred, lo, hi = boot.band([5.0, 10.0, 20.0])
    assert all(l <= p <= h for l, p, h in zip(lo, pred, hi))

    masses = critmass.critical_masses(boot.fit)
    assert masses["headline"].startswith("N_k = ")

    rows = critmass.compare(active)
    assert len(rows) == 5 and rows[0]["r_squared"] >= rows[-1]["r_squared"]

    for result in (
        critmass.test_no_correlation(active),
        critmass.test_equal_slopes(boot),
        critmass.test_zero_right_slope(active, fit),
        critmass.ks_normality(fit.residuals),
    ):
        assert 0.0 <= result["p_value"] <= 1.0

    ranked = critmass.residuals(active, "model", fit)["ranking"]
    assert len(ranked) == 29 and ranked[0][0] == 1

    q = critmass.quality_from_profile(25.0, 50.0, 25.0, 0.0, 0.0)
    assert math.isclose(q, 50.0), q  # 25 + 50*3/7 + 25/7

    sim = critmass.simulate([float(n) for n in range(2, 31)], a=10.0, b=2.0, n_c=20.0, seed=1)
    assert len(sim) == 29

    try:
        ds.exclude("Atlantis")
    except LookupError:
        pass
    else:
        raise AssertionError("unknown record accepted")

    report = json.loads(critmass.run_report(seed=2008, exclude=["#9"], resamples=400))
    assert "fit" in report and "tests" in report

    print("smoke test passed:", repr(fit), masses["headline"])


if __name__ == "__main__":
    main()
