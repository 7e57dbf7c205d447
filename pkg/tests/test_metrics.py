import itertools

import numpy as np
import pytest

from kerfscope.lib import Side, StreetClass
from kerfscope.lib.controller.metrics import (
    ChipVerdict,
    WaferReport,
    accuracy,
    compute_metrics,
    confusion,
    fault_detection,
    macro_accuracy,
    merge_confusion,
    normalized,
)
from kerfscope.lib.controller.wafermap import (
    CELL_PX,
    COLORS,
    GAP_PX,
    GRAY,
    MARGIN_PX,
    MapSource,
    cell_counts,
    map_cells,
    render_wafer_map,
)

G, A, B = StreetClass.GOOD, StreetClass.ANOMALY, StreetClass.BAD


def all_sides(label: StreetClass):
    return {side: label for side in Side.streets()}


def verdict(col, row, sides=None, border=False, wafer_id="W000") -> ChipVerdict:
    return ChipVerdict(wafer_id, col, row, border=border, sides=dict(sides or {}))


# --------
# Matrices
# --------


def test_perfect_predictions_give_identity():
    labels = [0, 1, 2, 2, 1, 0, 0]
    m = confusion(labels, labels, 3)
    assert np.array_equal(normalized(m), np.eye(3))
    assert accuracy(m) == 1.0
    assert macro_accuracy(m) == 1.0


def test_all_good_predictor():
    true = [0] * 92 + [2] * 8
    m2 = merge_confusion(confusion(true, [0] * 100, 3))
    assert accuracy(m2) == pytest.approx(0.92)
    assert fault_detection(m2) == 0.0
    assert macro_accuracy(m2) == pytest.approx(0.5)


def test_anomaly_merges_into_good():
    raw = np.array([[5, 1, 0], [2, 3, 1], [0, 1, 4]])
    m2 = merge_confusion(raw)
    assert m2.tolist() == [[11, 1], [1, 4]]
    assert m2.sum() == raw.sum()


def test_normalized_empty_rows_stay_zero():
    m = np.array([[3, 1], [0, 0]])
    n = normalized(m)
    assert n[0].tolist() == [0.75, 0.25]
    assert n[1].tolist() == [0.0, 0.0]
    assert macro_accuracy(m) == pytest.approx(0.75)


# -----------
# Aggregation
# -----------


def test_aggregation_matches_brute_force():
    values = [None, G, A, B]
    for combo in itertools.product(values, repeat=4):
        sides = dict(zip(Side.streets(), combo))
        expected = False
        for v in combo:
            if v is not None and v == B:
                expected = True
        assert verdict(1, 1, sides).faulty == expected


def test_chip_class_is_worst_found_side():
    v = verdict(0, 0, {Side.N: G, Side.E: A, Side.S: None, Side.W: G})
    assert v.chip_class() == A
    assert verdict(0, 0, {Side.N: None}).chip_class() == G


# -------
# Reports
# -------


def test_report_excludes_border_chips():
    truth = {
        ("W000", 1, 1): all_sides(G),
        ("W000", 2, 1): {**all_sides(G), Side.E: B},
    }
    verdicts = [
        verdict(1, 1, all_sides(G)),
        verdict(2, 1, {**all_sides(G), Side.E: B}),
        verdict(0, 0, border=True),
        # predicted inside but a border chip in the ground truth
        verdict(3, 0, all_sides(B)),
    ]
    report = compute_metrics(verdicts, truth)
    assert report.n_inside == 2
    assert report.n_border == 2
    assert report.total_streets == 8
    assert report.found_streets == 8
    assert report.chip_confusion.tolist() == [[1, 0], [0, 1]]
    assert report.street_confusion.tolist() == [[7, 0], [0, 1]]
    assert report.summary()["chip_accuracy"] == 1.0


def test_missing_streets_count_as_not_found():
    truth = {("W000", 1, 1): all_sides(G)}
    report = compute_metrics([verdict(1, 1, {Side.N: G, Side.E: None})], truth)
    assert report.total_streets == 4
    assert report.found_streets == 1
    assert report.found_rate == 0.25
    assert report.per_wafer["W000"]["found_rate"] == 0.25


def test_metrics_leave_the_input_verdicts_alone():
    truth = {("W000", 1, 1): {**all_sides(G), Side.S: B}}
    given = [verdict(1, 1, all_sides(G)), verdict(2, 2, all_sides(G))]
    report = compute_metrics(given, truth)
    assert all(not v.truth for v in given)
    chips = {v.key: v for v in report.chips}
    assert chips[("W000", 1, 1)].truth == truth[("W000", 1, 1)]
    assert chips[("W000", 1, 1)] is not given[0]
    assert chips[("W000", 1, 1)].sides == given[0].sides


def test_report_dict_round_trip():
    truth = {("W000", 1, 1): {**all_sides(G), Side.N: A}}
    verdicts = [verdict(1, 1, all_sides(G)), verdict(0, 0, border=True)]
    report = compute_metrics(verdicts, truth, {"W000": (3, 3)})
    back = WaferReport.from_dict(report.to_dict())
    assert back.to_dict() == report.to_dict()


# ----------
# Wafer maps
# ----------


def good_report() -> WaferReport:
    truth = dict()
    verdicts = list()
    for col in range(3):
        for row in range(3):
            if (col, row) == (0, 0):
                verdicts.append(verdict(col, row, border=True))
                continue
            truth[("W000", col, row)] = all_sides(G)
            verdicts.append(verdict(col, row, all_sides(G)))
    return compute_metrics(verdicts, truth, {"W000": (3, 3)})


def test_map_has_one_cell_per_chip():
    report = good_report()
    cells = map_cells(report, "W000")
    assert len(cells) == 9
    assert cell_counts(report, "W000") == {"border": 1, "good": 8, "anomaly": 0, "bad": 0}


def test_all_good_wafer_is_green():
    img = render_wafer_map(good_report(), "W000")
    step = CELL_PX + GAP_PX
    for col in range(3):
        for row in range(3):
            x = MARGIN_PX + col * step + CELL_PX // 2
            y = MARGIN_PX + row * step + CELL_PX // 2
            expected = GRAY if (col, row) == (0, 0) else COLORS[G]
            assert tuple(int(c) for c in img[y, x]) == expected


def test_map_rendering_is_deterministic():
    a = render_wafer_map(good_report(), "W000")
    b = render_wafer_map(good_report(), "W000")
    assert np.array_equal(a, b)


def test_truth_map_shows_true_faults():
    truth = {("W000", 0, 0): {**all_sides(G), Side.S: B}}
    report = compute_metrics([verdict(0, 0, all_sides(G))], truth)
    predicted = map_cells(report, "W000", MapSource.PREDICTED)[0]
    true = map_cells(report, "W000", MapSource.TRUTH)[0]
    assert predicted.chip == G
    assert true.chip == B
    assert dict(true.streets)[Side.S] == B
