import numpy as np
import pytest

from src.errors import ImageFormatError, MissingFileError
from src.imaging import load_image, load_save_image, save_image
from src.imaging.codecs import get_codec, infer_format


@pytest.mark.parametrize("fmt,suffix", [("png16", ".png"), ("png8", ".png"), ("pgm8", ".pgm")])
def test_quantisation_error_is_half_a_code(tmp_path, fmt, suffix):
    values = np.random.default_rng(0).random((9, 13))
    path = save_image(tmp_path / f"img{suffix}", values, fmt)
    back = load_image(path)
    assert back.shape == values.shape
    assert np.max(np.abs(back - values)) <= 0.5 / get_codec(fmt).max_code + 1e-12
    assert infer_format(path) == fmt


def test_values_are_clipped_to_unit_range(tmp_path):
    path = save_image(tmp_path / "c.png", np.array([[-0.5, 1.5]]), "png16")
    assert np.array_equal(load_image(path), [[0.0, 1.0]])


def test_rgb_png8(tmp_path):
    values = np.random.default_rng(1).random((5, 6, 3))
    back = load_image(save_image(tmp_path / "rgb.png", values, "png8"))
    assert back.shape == (5, 6, 3)
    with pytest.raises(ImageFormatError):
        save_image(tmp_path / "rgb16.png", values, "png16")


def test_missing_and_undecodable_files(tmp_path):
    with pytest.raises(MissingFileError):
        load_image(tmp_path / "nope.png")
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"definitely not a png")
    with pytest.raises(ImageFormatError):
        load_image(bad)
    with pytest.raises(ImageFormatError):
        load_image(tmp_path / "x.jpg")
    with pytest.raises(ImageFormatError):
        get_codec("tiff32")


def test_pgm_reader_rejects_other_formats(tmp_path):
    path = save_image(tmp_path / "a.png", np.zeros((4, 4)), "png8")
    with pytest.raises(ImageFormatError):
        load_image(path, "pgm8")


def test_load_save_entry_point(tmp_path):
    path = load_save_image(tmp_path / "e.png", "write", "png16", np.full((3, 3), 0.5))
    assert load_save_image(path, "read")[1, 1] == pytest.approx(0.5, abs=1e-5)
    with pytest.raises(ValueError):
        load_save_image(path, "write")
    with pytest.raises(ValueError):
        load_save_image(path, "append")
