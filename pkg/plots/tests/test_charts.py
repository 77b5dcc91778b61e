import csv
import json
import os

import pytest

from vnfmigplots.charts import ChartSpec, SchemaError, extract_series, render

HEADER = [
    "episode",
    "policy",
    "seed",
    "avg_delay_ms",
    "avg_energy",
    "cum_reward",
    "norm_reward",
    "accept_rate",
    "migrations",
    "reverts",
]


def write_reference_csv(path, episodes=3, policies=("a2c-dt", "random")):
    rows = []
    for policy in policies:
        for ep in range(episodes):
            rows.append(
                {
                    "episode": ep,
                    "policy": policy,
                    "seed": 1,
                    "avg_delay_ms": 5.0 + ep * 0.25 + (0.9 if policy == "random" else 0.0),
                    "avg_energy": 300.0 - ep * 7.5 + (40.0 if policy == "random" else 0.0),
                    "cum_reward": 1000.0 + ep * 13,
                    "norm_reward": ep / max(1, episodes - 1),
                    "accept_rate": 1.0,
                    "migrations": 40 + ep,
                    "reverts": 5,
                }
            )
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HEADER)
        writer.writeheader()
        writer.writerows(rows)
    return rows


def test_render_all_three_kinds(tmp_path):
    csv_path = str(tmp_path / "metrics.csv")
    write_reference_csv(csv_path)
    for kind in ("energy", "delay", "reward"):
        out = str(tmp_path / f"{kind}.png")
        got = render(ChartSpec(csv_path=csv_path, kind=kind, out_path=out))
        assert got == out
        assert os.path.getsize(out) > 0


def test_reward_chart_has_point_per_episode(tmp_path):
    csv_path = str(tmp_path / "metrics.csv")
    write_reference_csv(csv_path, episodes=3)
    series = extract_series(csv_path, "reward")
    assert len(series) == 2  # one series per (policy, seed)
    for xs, ys in series.values():
        assert xs == [0, 1, 2]
        assert len(ys) == 3


def test_extracted_series_equal_csv_values(tmp_path):
    # pixel-free extraction check: plotted data equals the CSV column verbatim
    csv_path = str(tmp_path / "metrics.csv")
    rows = write_reference_csv(csv_path)
    for kind, column in (("energy", "avg_energy"), ("delay", "avg_delay_ms"), ("reward", "norm_reward")):
        series = extract_series(csv_path, kind)
        for (policy, seed), (xs, ys) in series.items():
            expected = [
                float(r[column])
                for r in rows
                if r["policy"] == policy and str(r["seed"]) == seed
            ]
            assert ys == expected


def test_line_data_matches_extraction(tmp_path, monkeypatch):
    # the figure's artists carry exactly the extracted series (no resampling)
    import matplotlib.pyplot as plt

    csv_path = str(tmp_path / "metrics.csv")
    write_reference_csv(csv_path)
    captured = {}
    orig_savefig = plt.Figure.savefig

    def spy(fig, *args, **kwargs):
        captured["lines"] = [
            (list(line.get_xdata()), list(line.get_ydata()))
            for ax in fig.axes
            for line in ax.get_lines()
        ]
        return orig_savefig(fig, *args, **kwargs)

    monkeypatch.setattr(plt.Figure, "savefig", spy)
    render(ChartSpec(csv_path=csv_path, kind="energy", out_path=str(tmp_path / "e.png")))
    series = sorted(extract_series(csv_path, "energy").items())
    assert len(captured["lines"]) == len(series)
    for (key, (xs, ys)), (got_x, got_y) in zip(series, captured["lines"]):
        assert got_x == xs and got_y == ys


def test_empty_csv_is_schema_error(tmp_path):
    csv_path = tmp_path / "empty.csv"
    csv_path.write_text(",".join(HEADER) + "\n")
    with pytest.raises(SchemaError):
        render(ChartSpec(csv_path=str(csv_path), kind="reward", out_path=str(tmp_path / "x.png")))


def test_missing_column_names_offender(tmp_path):
    csv_path = tmp_path / "bad.csv"
    csv_path.write_text("episode,policy,seed\n0,random,1\n")
    with pytest.raises(SchemaError) as err:
        extract_series(str(csv_path), "energy")
    assert "avg_energy" in str(err.value)
    with pytest.raises(SchemaError):
        extract_series(str(csv_path), "not-a-kind")


def test_bucket_view_from_summary(tmp_path):
    csv_path = str(tmp_path / "metrics.csv")
    write_reference_csv(csv_path)
    summary = {
        "buckets": {
            "active_fg_edges": [2, 5, 9],
            "a2c-dt": {"avg_energy": [200.0, 240.0, None], "avg_delay_ms": [4.0, 5.0, 6.0]},
            "random": {"avg_energy": [260.0, 300.0, 340.0], "avg_delay_ms": [5.0, 6.5, 8.0]},
        }
    }
    summary_path = tmp_path / "summary.json"
    summary_path.write_text(json.dumps(summary))
    out = str(tmp_path / "energy_buckets.png")
    render(
        ChartSpec(
            csv_path=csv_path, kind="energy", out_path=out, summary_path=str(summary_path)
        )
    )
    assert os.path.getsize(out) > 0
    empty = tmp_path / "nobuckets.json"
    empty.write_text(json.dumps({"buckets": {}}))
    with pytest.raises(SchemaError):
        render(
            ChartSpec(
                csv_path=csv_path,
                kind="delay",
                out_path=str(tmp_path / "y.png"),
                summary_path=str(empty),
            )
        )


def test_cli_round_trip(tmp_path, capsys):
    from vnfmigplots.cli import main

    csv_path = str(tmp_path / "metrics.csv")
    write_reference_csv(csv_path)
    out = str(tmp_path / "fig.png")
    assert main(["--kind", "reward", "--in", csv_path, "--out", out]) == 0
    assert os.path.exists(out)
    assert main(["--kind", "reward", "--in", str(tmp_path / "nope.csv"), "--out", out]) == 2
