from tbsasim.analysis import MetricsRow, aggregate
from tbsasim.charts import write_charts


def test_write_charts_one_svg_per_metric(tmp_path):
    rows = aggregate(
        [
            [MetricsRow(0.0, 12, 0, 0.0, 0.0), MetricsRow(30.0, 14, 2, 5.0, 0.0)],
            [MetricsRow(0.0, 12, 0, 0.0, 0.0), MetricsRow(30.0, 16, 4, 0.0, 6.25)],
        ]
    )
    paths = write_charts({"unicycle": rows, "shaking": rows}, tmp_path)
    assert [p.name for p in paths] == [
        "aggregate_size.svg",
        "aggregate_errors.svg",
        "aggregate_holes.svg",
    ]
    for p in paths:
        head = p.read_text()[:500]
        assert "<svg" in head
