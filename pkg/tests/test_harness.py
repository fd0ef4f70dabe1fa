import csv
import io

import numpy as np
import pytest

from cefura.config import ConfigError, PointProcessSpec, SystemConfig
from cefura.harness import (CSV_COLUMNS, TrialResult, compute_metrics, count_errors,
                            csv_row, parse_axis, run_sweep, run_trial, sweep_points,
                            write_csv, write_rows)

# a light configuration: 256 pilots of length 64, (64, 48) polar code, L = 4
LIGHT = dict(B=40, B_f=8, n_p=64, n_c=64, L=4, D=200.0, codebook_seed=5)


def test_trial_result_ratios():
    r = TrialResult(K=10, K_hat=10, n_ms=2, n_fa=2)
    assert r.fa_ratio == pytest.approx(0.2) and r.md_ratio == pytest.approx(0.2)
    assert TrialResult(5, 0, 5, 0).fa_ratio == 0.0


def test_compute_metrics_examples():
    m = compute_metrics([TrialResult(10, 8, 2, 0)])
    assert (m.P_md, m.P_fa, m.P_e) == (pytest.approx(0.2), 0.0, pytest.approx(0.2))
    two = compute_metrics([TrialResult(10, 9, 1, 0), TrialResult(10, 7, 3, 0)])
    assert two.P_e == pytest.approx(0.2)
    assert two.Pe_ci95 == pytest.approx(1.96 * np.std([0.1, 0.3], ddof=1) / np.sqrt(2))
    assert compute_metrics([TrialResult(4, 4, 0, 0)] * 3).P_e == 0.0
    with pytest.raises(ValueError):
        compute_metrics([])


def test_count_errors_exact_matching():
    tx = np.array([[0, 1, 1], [1, 1, 1], [0, 0, 0]], dtype=np.uint8)
    rx = np.array([[0, 1, 1], [1, 1, 0]], dtype=np.uint8)
    assert count_errors(tx, rx) == (2, 1)
    assert count_errors(tx, tx) == (0, 0)


def test_noiseless_small_network_is_error_free():
    cfg = SystemConfig(K=4, M=4, N=2, sigma2=1e-12, force_unit_beta=True,
                       distinct_prefixes=True, **LIGHT)
    for t in range(10):
        r = run_trial(cfg, t)
        assert (r.K, r.n_ms, r.n_fa, r.K_hat) == (4, 0, 0, 4)


def test_trial_is_reproducible_and_reports_details():
    cfg = SystemConfig(K=8, M=4, N=2, **LIGHT)
    r1, det = run_trial(cfg, 3, details=True)
    r2 = run_trial(cfg, 3)
    assert (r1.K, r1.K_hat, r1.n_ms, r1.n_fa) == (r2.K, r2.K_hat, r2.n_ms, r2.n_fa)
    assert det["messages"].shape == (8, 40) and len(det["payloads"]) == 4
    for p in det["payloads"]:
        assert len(p.S_m) == cfg.R_m


def test_centralized_budget_uses_realized_count():
    cfg = SystemConfig(K=12, M=1, N=8, point_process=PointProcessSpec("poisson"), **LIGHT)
    _, det = run_trial(cfg, 0, details=True)
    assert len(det["payloads"][0].S_m) == len(det["messages"])


def test_coverage_violation_raises_before_running():
    with pytest.raises(ConfigError):
        SystemConfig(K=40, M=4, N=2, **LIGHT)


def test_parse_axis_forms():
    assert parse_axis("K=75,100") == ("K", [75, 100])
    assert parse_axis("mn=1x100, 49x2") == ("MN", [(1, 100), (49, 2)])
    assert parse_axis("pp=Poisson,thomas") == ("pp_kind", ["poisson", "thomas"])
    assert parse_axis("D=550") == ("D", [550.0])
    for bad in ("K", "Q=1", "K=", "K=ten", "MN=4"):
        with pytest.raises(ConfigError):
            parse_axis(bad)


def test_sweep_points_product_and_validation():
    cfg = SystemConfig(K=8, M=4, N=2, **LIGHT)
    pts = sweep_points(cfg, [parse_axis("K=4,8"), parse_axis("MN=4x2,9x1")])
    assert [(p.K, p.M) for p in pts] == [(4, 4), (4, 9), (8, 4), (8, 9)]
    with pytest.raises(ConfigError):
        sweep_points(cfg, [parse_axis("K=4,80")])


def test_single_point_sweep_equals_trial():
    cfg = SystemConfig(K=8, M=4, N=2, **LIGHT)
    (point, m), = run_sweep(cfg, [], 1)
    r = run_trial(cfg, 0)
    assert m.trials == 1 and m.P_e == pytest.approx(r.error_rate) and m.Pe_ci95 == 0.0


def test_csv_format(tmp_path):
    cfg = SystemConfig(K=8, M=4, N=2, **LIGHT)
    rows = run_sweep(cfg, [parse_axis("K=4,8")], 2, out=tmp_path / "sub" / "o.csv")
    with open(tmp_path / "sub" / "o.csv") as fh:
        table = list(csv.reader(fh))
    assert table[0] == CSV_COLUMNS and len(table) == 3
    assert table[1][:7] == ["(4,2)-200m", "4", "2", "200", "binomial", "4", "2"]
    row = csv_row(cfg, rows[0][1])
    assert row[0] == cfg.config_label
    from cefura.harness import MetricsAccumulator
    acc = MetricsAccumulator(3, 1 / 3, 0.0, 0.0, 1234.56789)
    assert csv_row(cfg, acc)[7] == "0.111111"
    assert csv_row(cfg, acc)[-1] == "1234.57"
    assert csv_row(cfg, acc, timing=False)[-1] == "0"


def test_write_csv_reports_path_on_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file/o.csv"):
        write_csv(blocker / "o.csv", [])


def test_sweep_is_deterministic_across_workers():
    cfg = SystemConfig(K=8, M=4, N=2, **LIGHT)
    axes = [parse_axis("K=4,8")]
    outs = []
    for threads in (1, 2):
        buf = io.StringIO()
        write_rows(buf, run_sweep(cfg, axes, 4, threads=threads), timing=False)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]


def test_sweep_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_sweep(SystemConfig(K=8, M=4, N=2, **LIGHT), [], 0)
