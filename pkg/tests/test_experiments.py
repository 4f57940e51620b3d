import json
import math
from pathlib import Path

import numpy as np
import pytest

from conftest import CACHE_DIR
from oracles import brute_family
from twistlab import experiments
from twistlab.central import central_value
from twistlab.cli import main
from twistlab.config import ExperimentConfig
from twistlab.experiments import (
    CoverageError,
    family_sample,
    report_from_csv,
    run_density,
    run_moments,
    run_sweep,
    sweep_coverage,
)
from twistlab.primesums import prime_sum_P
from twistlab.records import read_csv


@pytest.fixture
def cfg(tmp_path):
    return ExperimentConfig(X=1500, cache_path=str(CACHE_DIR), output_path=str(tmp_path / "out"))


def test_sweep_records(cfg, table, curve):
    res = run_sweep(cfg, table)
    ds = [r.d for r in res.records]
    assert ds == brute_family(curve, cfg.X + 1, 2 * cfg.X)
    for r in res.records[::25]:
        v = central_value(curve, table, r.d)
        assert r.L_half == v.L_half and r.vanished == v.vanished
        assert r.P_dx == prime_sum_P(curve, table, r.d, cfg.x).value
        assert r.eps_d == 1 and r.a_class == r.d % 88 and r.kappa == (1 if r.d > 0 else -1)
    assert res.negative_count == 0
    assert min(r.zero_weight for r in res.records) >= -1e-4
    assert 0 < res.smallest_nonzero
    assert read_csv(cfg.output_path + "/sweep.csv") == res.records
    rep, chk = report_from_csv(cfg.output_path + "/sweep.csv", cfg.alpha, cfg.beta)
    assert rep == res.distribution and chk == res.check
    lines = (Path(cfg.output_path) / "sweep_report.jsonl").read_text().splitlines()
    kinds = [json.loads(line)["kind"] for line in lines]
    assert kinds == ["config", "diagnostics", "distribution", "proportion_check", "histogram"]


def test_sweep_deterministic_across_threads(cfg, table, tmp_path):
    a = run_sweep(cfg.replace(threads=1, output_path=str(tmp_path / "a")), table)
    b = run_sweep(cfg.replace(threads=5, output_path=str(tmp_path / "b")), table)
    assert a.records == b.records
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_per_X_normalization(cfg, table):
    recs = run_sweep(cfg.replace(normalization="per_X"), table, write=False).records
    r = next(r for r in recs if not r.vanished)
    ll = math.log(math.log(cfg.X))
    assert r.statistic == pytest.approx((math.log(r.L_half) + 0.5 * ll) / math.sqrt(ll))


def test_coverage_checked_before_work(cfg, small_table):
    with pytest.raises(CoverageError, match="coeffs"):
        run_sweep(cfg, small_table)
    n, p = sweep_coverage(cfg)
    assert n > small_table.n_max and p >= math.exp(cfg.L) - 1


def test_empty_family_warns(cfg, table, monkeypatch):
    monkeypatch.setattr(experiments, "enumerate_window", lambda *a, **k: [])
    with pytest.warns(UserWarning, match="empty"):
        res = run_sweep(cfg, table)
    assert res.records == [] and res.distribution is None
    assert open(cfg.output_path + "/sweep.csv").read().count("\n") == 1


def test_wrong_root_number_is_flagged(cfg, tmp_path):
    # claiming eps_E = -1 for this curve selects the odd classes, where the formula goes negative
    bad = cfg.replace(eps_E=-1, X=300, cache_path=str(tmp_path / "c"))
    with pytest.warns(UserWarning, match="root number"):
        res = run_sweep(bad)
    assert res.negative_count > 0


def test_family_sample_classes(curve):
    s = family_sample(curve, 2000)
    assert len(s.classes) == 20
    assert sum(idx.size for idx in s.classes.values()) == s.ds.size
    assert np.all(np.abs(s.ds) >= 1000) and np.all(np.abs(s.ds) <= 5000)
    for (k, a), idx in s.classes.items():
        assert np.all(np.sign(s.ds[idx]) == k) and np.all(s.ds[idx] % 88 == a)


def test_density_and_moments(cfg, table, tmp_path):
    c = cfg.replace(X=3000, ells=(3, 9))
    res = run_density(c, table)
    assert [r.ell for r in res] == [1, 3, 9]
    one = res[0]
    assert one.pooled_ratio_to_ell1 == 1.0 and one.predicted is not None
    assert one.pooled == pytest.approx(math.fsum(one.per_class.values()), rel=1e-12)
    assert res[1].predicted is None and res[2].predicted == pytest.approx(0.75 * one.predicted)
    assert (tmp_path / "out" / "density_report.txt").exists()
    with pytest.raises(ValueError):
        run_density(c.replace(ells=(2,)), table, write=False)
    m = run_moments(c, table)
    assert m.pooled.empirical[0] == 1.0 and m.weighted.empirical[0] == pytest.approx(1.0)
    assert len(m.per_class) == 20
    assert (tmp_path / "out" / "moments_report.jsonl").exists()


# ---------------------------------------------------------------- command line


def _flags(tmp_path, *extra):
    return ["--cache-path", str(CACHE_DIR), "--output-path", str(tmp_path), *extra]


def test_cli_sweep_and_report(tmp_path, capsys, table):
    assert main(["sweep", *_flags(tmp_path, "--X", "1200")]) == 0
    out = capsys.readouterr().out
    assert "proportion check: pass" in out
    assert main(["report", *_flags(tmp_path), str(tmp_path / "sweep.csv")]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["proportion_check"]["passed"] is True


def test_cli_thread_flag_determinism(tmp_path, table):
    for n in ("1", "8"):
        assert main(["sweep", *_flags(tmp_path / n, "--X", "1200", "--threads", n)]) == 0
    assert (tmp_path / "1" / "sweep.csv").read_bytes() == (tmp_path / "8" / "sweep.csv").read_bytes()


def test_cli_config_file_with_override(tmp_path, capsys, table):
    conf = tmp_path / "run.cfg"
    conf.write_text("X = 5000\nells = 1, 9\n")
    assert main(["density", *_flags(tmp_path, "--config", str(conf), "--X", "2000")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and out[1].startswith("ell=   9")
    assert '"X": 2000.0' in (tmp_path / "density_report.jsonl").read_text()


def test_cli_family_and_moments(tmp_path, capsys, table):
    assert main(["family", *_flags(tmp_path, "--X", "1000")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 41
    assert main(["moments", *_flags(tmp_path, "--X", "1000", "--k-max", "2")]) == 0
    assert capsys.readouterr().out.startswith("plain k=0:1.0000")


def test_cli_coeffs(tmp_path, capsys):
    assert main(["coeffs", "--cache-path", str(tmp_path), "--n-max", "2000"]) == 0
    assert "n_max=2000" in capsys.readouterr().out
    assert list(tmp_path.glob("curve-*.twl"))


def test_cli_errors(tmp_path, capsys):
    assert main(["sweep", *_flags(tmp_path, "--alpha", "2")]) == 2
    assert "alpha" in capsys.readouterr().err
    assert main(["sweep", *_flags(tmp_path, "--X", "ten")]) == 2
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_low_weight_on_vanished_twist_is_flagged(cfg, table, monkeypatch):
    monkeypatch.setattr(experiments, "zero_weights_batch", lambda c, t, ds, Ls, *a, **k: np.ones((len(Ls), len(ds))))
    with pytest.warns(UserWarning, match="vanished twists with zero weight"):
        res = run_sweep(cfg, table, write=False)
    flagged = res.diagnostics["vanished_weight_review"]
    assert flagged and flagged == [r.d for r in res.records if r.vanished]
