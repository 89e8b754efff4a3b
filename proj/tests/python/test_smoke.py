import os
import pathlib

import pytest

import benchkit

SOURCE = pathlib.Path(os.environ.get("BENCHKIT_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


def test_relative_series_arbor():
    rel = benchkit.relative_series([(4, 663.0), (8, 498.0), (12, 332.0), (16, 250.0)], 8)
    want = [(0.5, 1.3313), (1.0, 1.0), (1.5, 0.6667), (2.0, 0.5020)]
    for (n, t), (wn, wt) in zip(rel, want):
        assert n == pytest.approx(wn, rel=1e-4)
        assert t == pytest.approx(wt, rel=1e-4)


def test_partition_and_memory():
    assert benchkit.size_partition(50e15, 78.125e12) == 640
    assert benchkit.size_partition(50e15, 78.125e12, power_of_two=True) == 512
    assert benchkit.statevector_memory(36) == 1 << 40
    assert benchkit.variant_budget_bytes("M", 40_000_000_000) == 30_000_000_000


def test_spec_round_trip():
    spec = benchkit.parse_spec((SOURCE / "definitions" / "amdahl-sleeper.bench.json").read_text())
    assert spec.name == "amdahl-sleeper"
    assert benchkit.parse_spec(benchkit.serialize_spec(spec)) == spec
    assert [n for n, _ in benchkit.expand_parameters(spec)] == [1, 2, 4, 8]


def test_fom_and_verification():
    assert benchkit.extract_fom("time 1 s\ntime 2.5 s\n", r"time (\S+) s") == 2.5
    assert benchkit.normalize_rate(1e6, 2e7) == 20.0
    assert benchkit.verify_scalar(1 + 5e-9, 1.0, 1e-8)
    assert not benchkit.verify_scalar(1 + 5e-9, 1.0, 1e-10)


def test_fit_and_baseline():
    fit = benchkit.fit_amdahl([(n, 10 + 80 / n) for n in (1, 2, 4, 8)])
    assert fit.serial_seconds == pytest.approx(10)
    assert fit.parallel_seconds == pytest.approx(80)
    assert benchkit.median_baseline([100, 102, 98]) == 100
    assert benchkit.classify_slowdown(0.06) == "fail"


def test_errors_are_typed():
    with pytest.raises(benchkit.SpecError):
        benchkit.parse_spec("{")
    with pytest.raises(benchkit.MetricError):
        benchkit.extract_fom("nothing here", r"time (\S+) s")
    with pytest.raises(benchkit.WorkloadError):
        benchkit.pair_bisection(3)
    with pytest.raises(ValueError):
        benchkit.size_partition(-1.0, 1.0)
