"""Graymap parsing and the delimited run outputs."""

import numpy as np
import pytest

from activestereo import (
    OCCLUDED,
    AimRecord,
    ConflictEvent,
    DisparityMap,
    EntropyMap,
    PgmParseError,
    RunMetrics,
    read_ground_truth,
    read_pgm,
    write_conflict_csv,
    write_disparity_pgm,
    write_entropy_pgm,
    write_metrics_csv,
    write_pgm,
)


def test_binary_roundtrip_8_bit(tmp_path):
    img = np.arange(12, dtype=np.uint16).reshape(3, 4) * 20
    path = tmp_path / "a.pgm"
    write_pgm(path, img, 255)
    back = read_pgm(path)
    np.testing.assert_array_equal(back.samples, img)
    assert back.maxval == 255 and back.width == 4 and back.height == 3


def test_binary_roundtrip_16_bit(tmp_path):
    img = np.array([[0, 300], [65535, 1]], dtype=np.uint16)
    path = tmp_path / "deep.pgm"
    write_pgm(path, img, 65535)
    back = read_pgm(path)
    np.testing.assert_array_equal(back.samples, img)
    assert back.maxval == 65535


def test_16_bit_samples_are_big_endian(tmp_path):
    path = tmp_path / "be.pgm"
    path.write_bytes(b"P5 2 1 1000\n" + bytes([0x01, 0x02, 0x00, 0x03]))
    back = read_pgm(path)
    np.testing.assert_array_equal(back.samples, [[258, 3]])


def test_text_graymap_with_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_text("P2 # magic\n# size next\n3 2\n255\n0 1 2\n3 4 5 # done\n")
    back = read_pgm(path)
    np.testing.assert_array_equal(back.samples, [[0, 1, 2], [3, 4, 5]])


@pytest.mark.parametrize(
    "payload",
    [
        b"P3 1 1 255\n0",  # color magic
        b"P5 1 1 0\n\x00",  # maxval below range
        b"P5 1 1 70000\n\x00\x00",  # maxval above range
        b"P5 2 1 255\n\x00",  # payload short
        b"P5 1 1 255\n\x00\x00",  # payload long
        b"P2 1 1 255\n0 junk",  # trailing token
        b"P2 1 1 255\n0 1",  # extra sample
        b"P2 2 1 255\n0",  # truncated samples
        b"P2 1 1 255\nxy",  # non-numeric sample
        b"P2 1 1 10\n11",  # sample above maxval
        b"P5 0 1 255\n",  # zero width
        b"",  # empty file
    ],
)
def test_malformed_graymaps_are_rejected(tmp_path, payload):
    path = tmp_path / "bad.pgm"
    path.write_bytes(payload)
    with pytest.raises(PgmParseError):
        read_pgm(path)


def test_binary_sample_above_maxval_rejected(tmp_path):
    path = tmp_path / "hot.pgm"
    path.write_bytes(b"P5 1 1 10\n\x0b")
    with pytest.raises(PgmParseError):
        read_pgm(path)


def test_write_pgm_validations(tmp_path):
    path = tmp_path / "w.pgm"
    with pytest.raises(ValueError):
        write_pgm(path, np.zeros(4, dtype=np.uint8))
    with pytest.raises(ValueError):
        write_pgm(path, np.zeros((2, 2), dtype=np.uint8), maxval=0)
    with pytest.raises(ValueError):
        write_pgm(path, np.full((2, 2), 300), maxval=255)
    with pytest.raises(ValueError):
        write_pgm(path, np.full((2, 2), -1))


def test_read_ground_truth_scaling_and_sentinel(tmp_path):
    path = tmp_path / "gt.pgm"
    write_pgm(path, np.array([[0, 1, 2, 3, 4]]), 255)
    gt = read_ground_truth(path, scale=2.0)
    np.testing.assert_array_equal(gt.disparity, [[0, 1, 1, 2, 2]])
    gt = read_ground_truth(path, scale=2.0, sentinel=3)
    np.testing.assert_array_equal(gt.disparity, [[0, 1, 1, OCCLUDED, 2]])
    with pytest.raises(ValueError):
        read_ground_truth(path, scale=0.0)


def test_write_disparity_pgm_scales_and_blacks_occlusions(tmp_path):
    values = np.array([[0, 2, 4]], dtype=np.int32)
    occluded = np.array([[False, True, False]])
    path = tmp_path / "d.pgm"
    write_disparity_pgm(path, DisparityMap(values, occluded, num_disparities=5))
    back = read_pgm(path)
    np.testing.assert_array_equal(back.samples, [[0, 0, 255]])


def test_write_entropy_pgm_handles_flat_zero_map(tmp_path):
    path = tmp_path / "e.pgm"
    write_entropy_pgm(path, EntropyMap(np.zeros((2, 3))))
    np.testing.assert_array_equal(read_pgm(path).samples, np.zeros((2, 3)))
    write_entropy_pgm(path, EntropyMap(np.array([[1.0, 0.5], [0.0, 0.25]])))
    np.testing.assert_array_equal(read_pgm(path).samples, [[255, 128], [0, 64]])


def test_metrics_csv_contents(tmp_path):
    metrics = RunMetrics(
        records=[
            AimRecord(0, None, 12.25, None),
            AimRecord(1, 7, 3.5, 4),
        ]
    )
    path = tmp_path / "metrics.csv"
    write_metrics_csv(path, metrics)
    assert path.read_bytes() == (
        b"aim,column,total_entropy_nats,pixels_err_gt1\r\n"
        b"0,,12.25,\r\n"
        b"1,7,3.5,4\r\n"
    )


def test_conflict_csv_contents(tmp_path):
    path = tmp_path / "conflicts.csv"
    write_conflict_csv(path, [ConflictEvent(0, 2, 5, 3, 6, 1)])
    assert path.read_bytes() == (
        b"row,aim_index,existing_q,existing_g,new_q,new_g\r\n0,2,5,3,6,1\r\n"
    )
