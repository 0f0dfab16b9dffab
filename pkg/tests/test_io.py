import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from phasewig.fieldio import (
    FieldFormatError,
    atomic_write,
    dumps,
    field_from_bytes,
    field_to_bytes,
    field_to_csv,
    read_binary,
    read_csv_values,
    write_binary,
    write_csv,
)
from phasewig.numgrid import AxisSpec, Field, PhaseGrid
from phasewig.render import (
    diverging_pixels,
    gray_pixels,
    read_pnm,
    write_pgm,
    write_ppm,
)

G = PhaseGrid(AxisSpec(-3.0, 3.0, 10), AxisSpec(-2.0, 4.0, 8), 0.5)
finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(
    hnp.arrays(np.float64, (10, 8), elements=finite),
    hnp.arrays(np.float64, (10, 8), elements=finite),
)
def test_binary_roundtrip_bit_exact(re, im):
    f = Field(re + 1j * im, G)
    back = field_from_bytes(field_to_bytes(f))
    assert back.grid == G and back.role == "qp"
    assert np.array_equal(np.real(back.values), re) and np.array_equal(np.imag(back.values), im)


@pytest.mark.parametrize("role,shape", [("q", (10,)), ("p", (8,)), ("qp", (10, 8))])
def test_binary_roles(role, shape, tmp_path):
    f = Field(np.arange(np.prod(shape), dtype=float).reshape(shape), G, role)
    back = read_binary(write_binary(tmp_path / "f.bin", f))
    assert back.role == role and np.array_equal(back.values, f.values)


def test_binary_layout_is_little_endian():
    data = field_to_bytes(Field(np.full(10, 2.0), G, "q"))
    assert data[:8] == b"PHWFLD01"
    assert int.from_bytes(data[8:16], "little") == 1
    assert np.frombuffer(data[-16:], "<f8").tolist() == [2.0, 0.0]


def test_binary_rejects_garbage():
    good = field_to_bytes(Field(np.zeros(10), G, "q"))
    with pytest.raises(FieldFormatError):
        field_from_bytes(b"NOTAFILE" + good[8:])
    with pytest.raises(FieldFormatError):
        field_from_bytes(good[:-8])


@given(hnp.arrays(np.float64, (10, 8), elements=finite))
def test_csv_roundtrip_exact(v):
    text = field_to_csv(Field(v, G), "W")
    lines = text.splitlines()
    assert lines[0].startswith("# role=qp") and lines[1].startswith("q,W[p=")
    back = np.array([[float(c) for c in ln.split(",")[1:]] for ln in lines[2:]])
    assert np.array_equal(back, v)


def test_csv_values_complex(tmp_path):
    rng = np.random.default_rng(3)
    v = rng.normal(size=(10, 8)) + 1j * rng.normal(size=(10, 8))
    back = read_csv_values(write_csv(tmp_path / "x.csv", Field(v, G)))
    assert np.array_equal(back, v)


def test_atomic_write_leaves_no_temp(tmp_path):
    atomic_write(tmp_path / "sub" / "a.txt", "one")
    atomic_write(tmp_path / "sub" / "a.txt", "two")
    assert (tmp_path / "sub" / "a.txt").read_text() == "two"
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["a.txt"]


def test_dumps_is_strict_json():
    text = dumps({"b": np.float64(np.inf), "a": np.arange(2), "c": np.bool_(True)})
    assert text.index('"a"') < text.index('"b"')
    assert "null" in text and "Infinity" not in text


# ---------------------------------------------------------------- render


def test_gray_mapping_and_orientation():
    v = np.array([[0.0, 1.0], [2.0, 4.0]])  # v[q, p]
    pix, info = gray_pixels(v)
    # top row is the largest p, columns follow q
    assert pix.tolist() == [[64, 255], [0, 128]]
    assert info.as_dict() == {"min": 0.0, "max": 4.0, "mode": "linear"}


def test_gray_constant_field_is_black():
    pix, _ = gray_pixels(np.full((3, 3), 7.0))
    assert not pix.any()


def test_diverging_mapping():
    v = np.array([[-2.0, 0.0], [1.0, 2.0]])
    pix, info = diverging_pixels(v)
    assert info.lo == -2.0 and info.hi == 2.0
    assert pix[1, 0].tolist() == [0, 0, 255]  # v = -2
    assert pix[0, 0].tolist() == [255, 255, 255]  # v = 0
    assert pix[1, 1].tolist() == [255, 128, 128]  # v = 1
    assert pix[0, 1].tolist() == [255, 0, 0]  # v = 2


def test_render_refuses_nan():
    with pytest.raises(ValueError):
        gray_pixels(np.array([[np.nan, 0.0]]))


def test_pnm_files_roundtrip(tmp_path):
    v = np.random.default_rng(0).normal(size=(5, 3))
    write_pgm(tmp_path / "a.pgm", v)
    write_ppm(tmp_path / "a.ppm", v)
    assert np.array_equal(read_pnm(tmp_path / "a.pgm"), gray_pixels(v)[0])
    assert np.array_equal(read_pnm(tmp_path / "a.ppm"), diverging_pixels(v)[0])
    assert (tmp_path / "a.pgm").read_bytes().startswith(b"P5\n5 3\n255\n")
