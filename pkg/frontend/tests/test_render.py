import pytest

from ccplots.cli import main
from ccplots.render import (
    PlotDataError,
    PlotSpec,
    estimate_crossing,
    load_records,
    render_threshold_plot,
)

HEADER = "d,epsilon,pp_rate,rounds,shots,failures,rate_per_round,ci_low,ci_high,seed\n"


def synthetic_csv(path, crossing=0.008, amp=0.002):
    rows = [HEADER]
    for d in (5, 9, 13):
        for pp in (0.004, 0.006, 0.008, 0.010, 0.012):
            rate = amp * (pp / crossing) ** ((d + 1) / 2)
            lo, hi = rate * 0.9, rate * 1.1
            rows.append(f"{d},{pp / 5},{pp},{d},20000,"
                        f"{int(rate * 20000 * d)},{rate},{lo},{hi},2024\n")
    path.write_text("".join(rows))
    return str(path)


def test_load_records_and_estimate(tmp_path):
    csv_path = synthetic_csv(tmp_path / "r.csv")
    records = load_records(csv_path)
    assert len(records) == 15
    est = estimate_crossing(records)
    assert est is not None
    assert abs(est - 0.008) < 0.0008


def test_render_creates_png_and_svg(tmp_path):
    csv_path = synthetic_csv(tmp_path / "r.csv")
    out = tmp_path / "fig.png"
    written = render_threshold_plot(PlotSpec(csv_path=csv_path, out_path=str(out)))
    assert written == [str(out), str(tmp_path / "fig.svg")]
    assert out.stat().st_size > 5000
    svg = (tmp_path / "fig.svg").read_text()
    assert "<svg" in svg


def test_render_deterministic(tmp_path):
    csv_path = synthetic_csv(tmp_path / "r.csv")
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render_threshold_plot(PlotSpec(csv_path=csv_path, out_path=str(a)))
    render_threshold_plot(PlotSpec(csv_path=csv_path, out_path=str(b)))
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_ordering_below_threshold(tmp_path):
    # Larger d sits lower below the crossing, as the rendered curves must show.
    csv_path = synthetic_csv(tmp_path / "r.csv")
    records = load_records(csv_path)
    est = estimate_crossing(records)
    below = [r for r in records if r.pp_rate < est * 0.9]
    by_pp = {}
    for r in below:
        by_pp.setdefault(r.pp_rate, {})[r.d] = r.rate
    assert by_pp
    for rates in by_pp.values():
        assert rates[5] > rates[9] > rates[13]


def test_explicit_threshold_marker(tmp_path):
    csv_path = synthetic_csv(tmp_path / "r.csv")
    out = tmp_path / "fig.png"
    rc = main([csv_path, str(out), "--threshold", "0.008"])
    assert rc == 0
    assert out.exists()


def test_empty_csv_error(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(HEADER)
    rc = main([str(path), str(tmp_path / "x.png")])
    assert rc == 1


def test_malformed_csv_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(PlotDataError):
        load_records(str(path))
    assert main([str(path), str(tmp_path / "x.png")]) == 1


def test_missing_file_error(tmp_path):
    assert main([str(tmp_path / "nope.csv"), str(tmp_path / "x.png")]) == 1


def test_real_sweep_csv_renders(tmp_path):
    # Uses the committed example sweep output when present.
    import os

    candidate = os.path.join(os.path.dirname(__file__), "..", "..",
                             "results", "threshold_d5_9_13.csv")
    if not os.path.exists(candidate):
        pytest.skip("no committed sweep results")
    out = tmp_path / "fig.png"
    assert main([candidate, str(out)]) == 0
    assert out.exists()
