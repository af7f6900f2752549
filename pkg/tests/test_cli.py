import csv
import json

import pytest

from majcc import threshold as th
from majcc.cli import main, read_history


def test_build_and_validate_roundtrip(tmp_path):
    layout_path = str(tmp_path / "layout.json")
    assert main(["build", "--d", "5", "--out", layout_path]) == 0
    assert main(["validate", layout_path]) == 0


def test_validate_rejects_tampered_layout(tmp_path):
    layout_path = str(tmp_path / "layout.json")
    main(["build", "--d", "5", "--out", layout_path])
    data = json.load(open(layout_path))
    data["plaquettes"][0]["vertices"] = data["plaquettes"][0]["vertices"][:-1]
    json.dump(data, open(layout_path, "w"))
    assert main(["validate", layout_path]) == 1


def test_distance_command():
    assert main(["distance", "--d", "5"]) == 0


def test_build_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["build", "--d"])
    assert exc.value.code == 2


def test_build_bad_d_is_error(tmp_path):
    assert main(["build", "--d", "7", "--out", str(tmp_path / "x.json")]) == 1


def test_simulate_decode_pipeline(tmp_path):
    hist = str(tmp_path / "history.bin")
    outcsv = str(tmp_path / "outcomes.csv")
    layout_path = str(tmp_path / "layout.json")
    main(["build", "--d", "5", "--out", layout_path])
    assert main(["simulate", "--d", "5", "--eps", "0.001", "--shots", "50",
                 "--seed", "7", "--out", hist]) == 0
    header, layout, shots = read_history(hist)
    assert header["shots"] == 50 and header["d"] == 5
    first = next(shots)
    assert first.records.shape == (10, 6)
    assert main(["decode", "--in", hist, "--layout", layout_path,
                 "--out", outcsv]) == 0
    rows = list(csv.DictReader(open(outcsv)))
    assert len(rows) == 50
    assert set(rows[0]) == {"shot", "failures", "syndrome_clean", "matching_weight"}
    assert all(r["syndrome_clean"] == "1" for r in rows)


def test_simulate_deterministic(tmp_path):
    h1, h2 = str(tmp_path / "a.bin"), str(tmp_path / "b.bin")
    for h in (h1, h2):
        main(["simulate", "--d", "5", "--eps", "0.002", "--shots", "20",
              "--seed", "3", "--out", h])
    assert open(h1, "rb").read() == open(h2, "rb").read()


def test_verify_surgery_commands():
    assert main(["verify-surgery", "--d", "5", "--type", "1"]) == 0
    assert main(["verify-surgery", "--d", "5", "--type", "2"]) == 0
    assert main(["verify-surgery", "--d", "5", "--type", "pp"]) == 0


def test_threshold_config_file_with_flag_override(tmp_path):
    cfg = {"d_list": [5], "eps_list": [2e-3], "shots": 300, "seed": 5, "workers": 1}
    cfgp = tmp_path / "cfg.json"
    outp = tmp_path / "out.csv"
    cfgp.write_text(json.dumps(cfg))
    # a single-distance sweep writes its CSV and skips crossing estimation
    assert main(["threshold", "--config", str(cfgp), "--shots", "200",
                 "--out", str(outp)]) == 0
    rows = list(csv.DictReader(open(outp)))
    assert len(rows) == 1
    assert rows[0]["shots"] == "200"   # the flag beat the config value
    assert rows[0]["d"] == "5" and rows[0]["seed"] == "5"


# -- threshold machinery -------------------------------------------------------


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        th.SweepConfig(d_list=[7], eps_list=[1e-3])
    with pytest.raises(ValueError):
        th.SweepConfig(d_list=[5], eps_list=[0.1])
    with pytest.raises(ValueError):
        th.SweepConfig.from_dict({"d_list": [5], "eps_list": [1e-3], "bogus": 1})


def test_zero_failures_for_tiny_eps():
    cfg = th.SweepConfig(d_list=[5], eps_list=[1e-6], shots=50, workers=1, seed=1)
    records = th.run_threshold(cfg)
    assert records[0].failures == 0
    assert records[0].rate_per_round == 0.0


def test_threshold_determinism_and_worker_independence():
    cfg1 = th.SweepConfig(d_list=[5], eps_list=[2e-3], shots=400, workers=1, seed=9)
    cfg2 = th.SweepConfig(d_list=[5], eps_list=[2e-3], shots=400, workers=2, seed=9)
    r1 = th.run_threshold(cfg1)
    r2 = th.run_threshold(cfg2)
    assert r1[0].failures == r2[0].failures
    assert th.records_to_csv(r1) == th.records_to_csv(r2)


def test_csv_header_and_ordering(tmp_path):
    recs = [
        th.ThresholdRecord(d=9, epsilon=2e-3, rounds=9, shots=10, failures=1, seed=0),
        th.ThresholdRecord(d=5, epsilon=1e-3, rounds=5, shots=10, failures=0, seed=0),
        th.ThresholdRecord(d=5, epsilon=2e-3, rounds=5, shots=10, failures=2, seed=0),
    ]
    text = th.records_to_csv(recs)
    lines = text.strip().split("\n")
    assert lines[0] == "d,epsilon,pp_rate,rounds,shots,failures,rate_per_round,ci_low,ci_high,seed"
    ds = [int(l.split(",")[0]) for l in lines[1:]]
    assert ds == sorted(ds)
    path = tmp_path / "r.csv"
    path.write_text(text)
    rows = th.load_csv(str(path))
    assert len(rows) == 3


def test_wilson_interval_brackets_rate():
    rec = th.ThresholdRecord(d=5, epsilon=1e-3, rounds=5, shots=1000,
                             failures=37, seed=0)
    lo, hi = rec.wilson_interval()
    assert lo <= rec.rate_per_round <= hi
    rec0 = th.ThresholdRecord(d=5, epsilon=1e-3, rounds=5, shots=1000,
                              failures=0, seed=0)
    lo, hi = rec0.wilson_interval()
    assert lo == 0.0 and hi > 0.0


def test_estimate_threshold_synthetic_crossing():
    # p_L = A (5eps / p_th)^{(d+1)/2} with p_th = 0.008 crosses at 0.008.
    records = []
    for d in (5, 9, 13):
        for pp in (0.004, 0.006, 0.008, 0.010, 0.012):
            rate = 0.002 * (pp / 0.008) ** ((d + 1) / 2)  # per round
            shots = 400_000
            fails = int(round(rate * shots * d))
            records.append(th.ThresholdRecord(
                d=d, epsilon=pp / 5, rounds=d, shots=shots, failures=fails, seed=0))
    est = th.estimate_threshold(records)
    assert est.found
    assert abs(est.crossing - 0.008) < 0.0008
    assert (5, 9) in est.pairwise and est.pairwise[(5, 9)] is not None


def test_estimate_threshold_no_crossing():
    records = []
    for d in (5, 9):
        for pp in (0.004, 0.006, 0.008):
            rate = {5: 1e-2, 9: 1e-3}[d] * (pp / 0.008)  # parallel lines
            records.append(th.ThresholdRecord(
                d=d, epsilon=pp / 5, rounds=d, shots=100_000,
                failures=int(rate * 100_000 * d), seed=0))
    est = th.estimate_threshold(records)
    assert not est.found
