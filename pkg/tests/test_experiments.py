import io
import json

import numpy as np
import pytest

from randflight.experiments import run_convergence, run_tail_table, sample_flights, sample_limits
from randflight.flights import Exponential, Polynomial, SuperExponential, build_flight
from randflight.limits import sample_limit
from randflight.paths import sup_distance
from randflight.stochastic import derive_seed
from randflight.transport import empirical_wasserstein


def test_superexp_entries_bounded_by_two():
    table = run_convergence(SuperExponential(), 1, (10, 40), m=30, repeats=2, seed=3)
    for r in table.records:
        assert 0 <= r["w_p"] <= 2 and 0 <= r["baseline"] <= 2


def test_single_path_cells_are_pair_distances():
    reg = Polynomial(1.0)
    table = run_convergence(reg, 1, (20,), m=1, repeats=3, seed=11, M=32)
    for r in table.records:
        fl = build_flight(reg, 20, 1, derive_seed(derive_seed(11, 0, 0, r["repeat"]), 0)).path
        lim = sample_limit(reg, 1, derive_seed(derive_seed(11, 1, 0, r["repeat"]), 0), M=32)
        assert r["w_p"] == pytest.approx(sup_distance(fl, lim), rel=1e-14)


def test_table_shape_and_rows():
    table = run_convergence(Exponential(1.0), 2, (10, 20, 40), m=12, repeats=3, seed=0)
    rows = table.rows()
    assert [r["n"] for r in rows] == [10, 20, 40]
    assert len(table.records) == 9
    assert all(r["w_p"] >= 0 and r["sd"] >= 0 for r in rows)
    pooled = np.sqrt(np.mean([r["sd"] ** 2 for r in rows] + [r["baseline_sd"] ** 2 for r in rows]))
    assert table.pooled_sd() == pytest.approx(pooled)


def test_reproducible_and_thread_independent():
    kw = dict(p=1, n_grid=(10, 30), m=15, repeats=2, seed=5)
    a = run_convergence(Exponential(0.5), **kw)
    b = run_convergence(Exponential(0.5), threads=4, **kw)
    strip = lambda t: [{k: v for k, v in r.items() if k != "runtime_ms"} for r in t.records]
    assert strip(a) == strip(b)


def test_csv_and_json_outputs():
    table = run_convergence(Exponential(1.0), 1, (10, 20), m=5, repeats=2, seed=0)
    buf = io.StringIO()
    table.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "regime,p,n,m,repeat,w_p,baseline,runtime_ms"
    assert len(lines) == 5 and lines[1].startswith("exponential,1,10,5,0,")
    doc = json.loads(json.dumps(table.to_dict()))
    assert doc["config"]["seed"] == 0 and doc["config"]["regime"] == {"variant": "exponential", "beta": 1.0}


def test_grid_validation():
    with pytest.raises(ValueError):
        run_convergence(Exponential(1.0), 1, (20, 10), m=5, repeats=1)
    with pytest.raises(ValueError):
        run_convergence(Exponential(1.0), 1, (10,), m=0, repeats=1)


@pytest.mark.parametrize("reg", [Exponential(1.0), Polynomial(1.0)], ids=["exp", "poly"])
def test_baseline_shrinks_with_sample_size(reg):
    means = []
    for m in (50, 200, 800):
        vals = [
            empirical_wasserstein(
                sample_limits(reg, m, seed=derive_seed(1, m, r), M=64),
                sample_limits(reg, m, seed=derive_seed(2, m, r), M=64),
            ).value
            for r in range(5)
        ]
        means.append(np.mean(vals))
    assert means[0] > means[1] > means[2]


def test_exponential_convergence_trend():
    table = run_convergence(Exponential(1.0), 1, (25, 100, 400), m=200, repeats=5, seed=0)
    assert table.non_increasing(1.0)
    assert table.final_within_baseline(3.0)


def test_tail_table_bounded_rows_zero():
    table = run_tail_table(Exponential(1.0), 1, (50, 200), (1.25, 2.0), m=200, seed=0)
    assert np.all(table.estimates == 0) and table.bounded_rows_zero()
    table = run_tail_table(SuperExponential(), 2, (50,), (1.5,), m=200, seed=0)
    assert table.bounded_rows_zero()


def test_tail_table_monotone_in_R():
    table = run_tail_table(Polynomial(0.75), 1, (50, 200), (0.5, 1.0, 2.0, 4.0), m=400, seed=1)
    assert np.all(np.diff(table.estimates, axis=1) <= 0)
    assert np.all(table.estimates[:, 0] > 0)


def test_tail_table_p_ordering():
    R_grid = (1.0, 1.5, 3.0)
    t1 = run_tail_table(Polynomial(1.0), 1, (100,), R_grid, m=300, seed=2)
    t2 = run_tail_table(Polynomial(1.0), 2, (100,), R_grid, m=300, seed=2)
    assert np.all(t2.estimates >= t1.estimates * np.asarray(R_grid) - 1e-12)


def test_tail_table_csv():
    table = run_tail_table(Exponential(1.0), 1, (20,), (2.0,), m=10, seed=0)
    buf = io.StringIO()
    table.write_csv(buf)
    assert buf.getvalue().splitlines() == ["regime,p,n,R,estimate,se", "exponential,1,20,2.0,0.0,0.0"]


def test_sample_metadata():
    s = sample_flights(Polynomial(1.0), 10, 3, d=2, seed=4)
    assert s.meta == {"kind": "flight", "regime": {"variant": "polynomial", "alpha": 1.0}, "n": 10, "d": 2, "seed": 4}
