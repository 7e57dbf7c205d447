import dataclasses
import json
import os

import numpy as np
import pytest

from kerfscope.lib import Side, Split, StreetClass
from kerfscope.lib.error import DataError, ManifestError
from kerfscope.lib.synth.wafer import (
    GroundTruth,
    WaferSpec,
    chip_crop,
    fault_zone,
    generate_wafer,
)
from kerfscope.lib.synth.manifest import (
    DatasetManifest,
    ManifestRecord,
    class_balance,
    read_manifest,
    write_manifest,
)
from kerfscope.lib.synth.dataset import CorpusSpec, build_dataset, load_truth


def record(i: int, label: StreetClass, split: Split = Split.TRAIN) -> ManifestRecord:
    return ManifestRecord(
        image_path=f"streets/r{i:04d}.png",
        wafer_id="W000",
        chip_col=i % 10,
        chip_row=i // 10,
        side=Side.N,
        label=label,
        split=split,
    )


def manifest_of(counts) -> DatasetManifest:
    records = list()
    for label, n in zip(StreetClass, counts):
        records.extend(record(len(records) + i, label) for i in range(n))
    return DatasetManifest(records=records)


# ---------
# Generator
# ---------


def test_generator_is_deterministic(small_spec):
    img1, truth1 = generate_wafer(small_spec, "W000")
    img2, truth2 = generate_wafer(small_spec, "W000")
    assert np.array_equal(img1, img2)
    assert truth1.streets == truth2.streets
    assert truth1.chips == truth2.chips


def test_four_segments_per_inside_chip(small_wafer):
    _, truth = small_wafer
    inside = truth.inside_chips()
    assert len(inside) == 12
    assert len(truth.streets) == 4 * len(inside)
    for chip in inside:
        assert set(truth.streets_of(chip.col, chip.row)) == set(Side.streets())


def test_corner_chips_are_border(small_wafer):
    _, truth = small_wafer
    border = {(c.col, c.row) for c in truth.chips if c.border}
    assert border == {(0, 0), (3, 0), (0, 3), (3, 3)}


def test_zero_fault_rate_gives_good_streets(small_spec):
    _, truth = generate_wafer(dataclasses.replace(small_spec, fault_rate=0.0))
    assert truth.streets
    assert all(s.label == StreetClass.GOOD for s in truth.streets)


def test_faults_enter_the_owning_chip_only(small_wafer):
    _, truth = small_wafer
    labels = [s.label for s in truth.streets]
    assert StreetClass.BAD in labels
    for street in truth.streets:
        rows, cols = fault_zone(truth, street)
        hit = bool(truth.kerf_mask[rows, cols].any())
        assert hit == (street.label == StreetClass.BAD), (street.col, street.row, street.side)


@pytest.mark.slow
def test_default_rates_give_the_corpus_class_ratio():
    counts = np.zeros(len(StreetClass))
    seed = 0
    while counts.sum() < 10_000:
        spec = WaferSpec(
            grid_cols=20,
            grid_rows=20,
            chip_px=200,
            street_width_px=8,
            wafer_radius_chips=10.0,
            inner_structure_density=0.0,
            noise_sigma=0.0,
            seed=seed,
        )
        _, truth = generate_wafer(spec, f"W{seed:03d}")
        for street in truth.streets:
            counts[int(street.label)] += 1
        seed += 1
    share = 100 * counts / counts.sum()
    assert share.tolist() == pytest.approx([92.2, 3.7, 4.1], abs=1.0)


def test_oversized_grid_gives_border_chips_only(caplog):
    spec = WaferSpec(grid_cols=3, grid_rows=3, chip_px=200, street_width_px=8,
                     wafer_radius_chips=0.6)
    _, truth = generate_wafer(spec)
    assert truth.chips
    assert not truth.inside_chips()
    assert not truth.streets
    assert "all" in caplog.text


def test_chip_crop_has_margin(small_wafer, small_spec):
    image, truth = small_wafer
    crop = chip_crop(image, truth, 1, 1)
    side = small_spec.chip_px + 2 * small_spec.chip_margin
    assert crop.shape == (side, side)


def test_ground_truth_round_trip(small_wafer):
    _, truth = small_wafer
    back = GroundTruth.from_dict(json.loads(json.dumps(truth.to_dict())))
    assert back.streets == truth.streets
    assert back.chips == truth.chips
    assert back.spec == truth.spec


@pytest.mark.parametrize(
    "changes",
    [
        {"chip_px": 100},
        {"street_width_px": 3},
        {"fault_rate": 1.5},
        {"inner_structure_density": -0.1},
    ],
)
def test_wafer_spec_validation(changes):
    with pytest.raises(ValueError):
        WaferSpec(**changes)


# --------
# Manifest
# --------


def test_balance_already_balanced():
    balanced = class_balance(manifest_of((100, 100, 100)))
    assert len(balanced.records) == 300
    assert not any(r.duplicate for r in balanced.records)


def test_balance_duplicates_minorities():
    balanced = class_balance(manifest_of((90, 4, 6)))
    counts = balanced.counts(Split.TRAIN, "street")
    assert counts == {0: 90, 1: 90, 2: 90}
    dups = [r for r in balanced.records if r.duplicate]
    assert sum(1 for r in dups if r.label == StreetClass.ANOMALY) == 86
    assert sum(1 for r in dups if r.label == StreetClass.BAD) == 84


def test_balance_leaves_other_splits_alone():
    m = manifest_of((10, 2, 2))
    m.records.append(record(999, StreetClass.BAD, Split.TEST))
    balanced = class_balance(m)
    assert len(balanced.select(Split.TEST)) == 1
    assert not any(r.duplicate for r in balanced.select(Split.TEST))


def test_balance_empty_class():
    with pytest.raises(DataError, match="cannot balance empty class"):
        class_balance(manifest_of((10, 0, 3)))


def test_manifest_round_trip(tmp_path):
    m = manifest_of((3, 2, 1))
    m.spec = {"corpus": {"seed": 3}}
    path = str(tmp_path / "manifest.jsonl")
    write_manifest(path, m)
    back = read_manifest(path, check_files=False)
    assert back.records == m.records
    assert back.spec == m.spec


def test_manifest_bad_version(tmp_path):
    path = tmp_path / "manifest.jsonl"
    path.write_text(json.dumps({"format_version": "99"}) + "\n")
    with pytest.raises(ManifestError, match="version"):
        read_manifest(str(path))


def test_manifest_missing_label_names_line(tmp_path):
    m = manifest_of((2, 0, 0))
    path = tmp_path / "manifest.jsonl"
    write_manifest(str(path), m)
    lines = path.read_text().splitlines()
    broken = json.loads(lines[2])
    del broken["label"]
    lines[2] = json.dumps(broken)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ManifestError) as excinfo:
        read_manifest(str(path), check_files=False)
    assert excinfo.value.line == 3
    assert "label" in str(excinfo.value)


def test_manifest_missing_image(tmp_path):
    path = str(tmp_path / "manifest.jsonl")
    write_manifest(path, manifest_of((1, 0, 0)))
    with pytest.raises(ManifestError, match="missing image"):
        read_manifest(path)


# -------
# Dataset
# -------


@pytest.mark.slow
def test_build_dataset(tmp_path):
    corpus = CorpusSpec(
        n_wafers=2,
        grid_cols=4,
        grid_rows=4,
        wafer_radius_chips=2.5,
        wafer_types=((200, 8, "dark"), (240, 10, "light")),
        fault_rate=0.2,
    )
    manifest = build_dataset(corpus, str(tmp_path))
    back = read_manifest(os.path.join(str(tmp_path), "manifest.jsonl"))
    assert back.records == manifest.records
    chips = manifest.select(kind="chip")
    assert len(chips) == 2 * 16
    assert sum(1 for r in chips if r.border) == 2 * 4
    streets = manifest.select(kind="street")
    assert 0 < len(streets) <= 2 * 12 * 4
    assert {r.split for r in manifest.records} == set(Split)
    image, truth = load_truth(str(tmp_path), "W001")
    assert image.shape == truth.spec.image_shape()
    assert truth.spec.street_width_px == 10


@pytest.mark.slow
def test_parallel_generation_matches_sequential(tmp_path):
    import asyncio

    from pubsub import pub

    from kerfscope.lib.controller.dataset import Controller
    from kerfscope.lib.controller.types import Event

    corpus = CorpusSpec(
        n_wafers=3,
        grid_cols=3,
        grid_rows=3,
        wafer_radius_chips=2.0,
        wafer_types=((200, 8, "dark"),),
        fault_rate=0.2,
    )
    done = list()

    def on_synth(wafer_id, n_records):
        done.append(wafer_id)

    pub.subscribe(on_synth, Event.SYNTH)
    parallel = asyncio.run(Controller(corpus, str(tmp_path / "par"), workers=3).generate())
    sequential = build_dataset(corpus, str(tmp_path / "seq"))
    assert sorted(done) == ["W000", "W001", "W002"]
    assert parallel.records == sequential.records
    assert os.path.isfile(os.path.join(str(tmp_path / "par"), "manifest.jsonl"))
