import numpy as np
import pytest

import decest


def short(name, duration=2.0, **kw):
    c = decest.scenario(name, **kw)
    c["duration"] = duration
    return c


def test_scenarios_round_trip():
    for name in ("toy", "ground", "quad"):
        c = decest.scenario(name)
        assert decest.validate(c) == c
        assert len(decest.config_hash(c)) > 0


def test_bad_config_raises():
    c = decest.scenario("toy")
    c["duration"] = -1.0
    with pytest.raises(ValueError):
        decest.validate(c)
    with pytest.raises(ValueError):
        decest.monte_carlo("{not json")


def test_monte_carlo_summary():
    s = decest.monte_carlo(short("toy"), trials=2, variants=["proposed", "centralized"], threads=1)
    assert s["trials"] == 2
    assert set(s["variants"]) == {"proposed", "centralized"}


def test_trace_is_deterministic():
    c = short("ground")
    a = decest.trace_csv(c)
    assert a == decest.trace_csv(c)
    assert a.count("\n") > 10


def test_observability_toy():
    c = decest.scenario("toy")
    assert decest.observability(c)["rank"] == 4
    assert decest.observability(c, pseudomeasurements=False)["rank"] == 2


def test_message_size_constant():
    rows = decest.bench_message_size(decest.scenario("ground"), [1, 10, 1000])
    assert len({r[1] for r in rows}) == 1
    assert rows[-1][2] > rows[0][2]


def test_share_sweep_shape():
    pts = decest.sweep_share_rate(short("toy"), [1.0, 10.0], trials=1, threads=1)
    assert [p[0] for p in pts] == [1.0, 10.0]
    assert all(len(p[1]) == 2 for p in pts)


def test_group_exp_log():
    rng = np.random.default_rng(0)
    xi = rng.normal(size=3)
    np.testing.assert_allclose(decest.se2_log(decest.se2_exp(xi)), xi, atol=1e-12)
    xi9 = 0.5 * rng.normal(size=9)
    np.testing.assert_allclose(decest.se23_log(decest.se23_exp(xi9)), xi9, atol=1e-12)


def test_envelope():
    lo, hi = decest.nees_envelope(4, 100)
    assert lo < 4 < hi
