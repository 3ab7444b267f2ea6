import json

from kernel_reach.bench import run_bench, sweep_config
from kernel_reach.config import RunConfig, load_default


def small_config():
    return RunConfig.load(load_default("integrator_gaussian"), {
        "sampling": {"size": 150}, "rff": {"features": 80}, "grid": {"resolution": 8},
        "oracle": {"dp_resolution": 8},
        "bench": {"copies": [2, 3], "size": 60, "features": 40},
    })


def test_bench_report(tmp_path):
    report = run_bench(small_config())
    names = [m.method for m in report.methods]
    assert names == ["exact", "rff", "dp"]
    for m in report.methods:
        assert m.times["total"] > 0 and m.times["recursion"] > 0
        assert m.deterministic
        assert m.runs == 3
    assert report.methods[2].times["fit"] is None
    assert "dp" in report.methods[0].max_abs_error and not report.methods[2].max_abs_error
    assert [s.copies for s in report.sweep] == [2, 3]
    assert all(s.exact_total > 0 and s.rff_total > 0 for s in report.sweep)
    report.to_json(tmp_path / "b.json")
    doc = json.loads((tmp_path / "b.json").read_text())
    assert doc["environment"]["numpy"] and "sweep_summary" in doc
    assert "copies" in report.table()


def test_sweep_config_dimensions():
    cfg = sweep_config(small_config(), 10)
    assert cfg.state_dim == 60 and cfg.input_dim == 20
    assert len(cfg.grid.points) == 1 and len(cfg.grid.points[0]) == 60
    assert cfg.problem.horizon == 1
