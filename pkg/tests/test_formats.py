from __future__ import annotations

import io
import json
import struct
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floatwatch import errors
from floatwatch.errors import DecodeError, FloatwatchError, FormatUnrecognized, ProtocolError
from floatwatch.imaging import Frame
from floatwatch.ingest import fwp, netpbm
from floatwatch.ingest.sources import SourceSpec, Y4MSource
from floatwatch.ingest.y4m import Y4MHeader, Y4MReader, Y4MWriter, rgb_to_yuv420, yuv420_to_rgb

GOLDEN = Path(__file__).parent / "golden"
FIXTURES = json.loads((GOLDEN / "formats.json").read_text())


# -- FWP -----------------------------------------------------------------------

def test_fwp_one_pixel_layout():
    data = fwp.encode(Frame(np.array([[7]], np.uint8)))
    assert len(data) == 29
    assert data == b"FWP1" + struct.pack(">IIIQI", 1, 1, 1, 0, 1) + b"\x07"


def test_fwp_header_fields():
    f = Frame(np.zeros((3, 5, 3), np.uint8), timestamp=2**40 + 5)
    data = fwp.encode(f)
    assert fwp.parse_header(data[:28]) == (5, 3, 3, 2**40 + 5, 45)


def _header(magic=b"FWP1", w=2, h=2, c=1, ts=0, n=None):
    return struct.pack(">4sIIIQI", magic, w, h, c, ts, w * h * c if n is None else n)


@pytest.mark.parametrize("hdr", [
    _header(magic=b"FWP2"),
    _header(w=0, n=0),
    _header(h=0, n=0),
    _header(c=2),
    _header(n=5),
    _header(w=5000, h=5000, c=3),
])
def test_fwp_bad_headers(hdr):
    with pytest.raises(ProtocolError):
        fwp.decode(hdr + bytes(4))


def test_fwp_length_mismatch_in_body():
    good = fwp.encode(Frame(np.zeros((2, 2), np.uint8)))
    with pytest.raises(ProtocolError):
        fwp.decode(good[:-1])
    with pytest.raises(ProtocolError):
        fwp.decode(good + b"\x00")


@given(st.integers(1, 64), st.integers(1, 64), st.sampled_from([1, 3]), st.integers(0, 2**64 - 1),
       st.integers(0, 2**32 - 1))
def test_fwp_roundtrip(w, h, c, ts, seed):
    shape = (h, w) if c == 1 else (h, w, 3)
    f = Frame(np.random.default_rng(seed).integers(0, 256, shape, dtype=np.uint8), timestamp=ts)
    assert fwp.decode(fwp.encode(f)) == f


@given(st.binary(max_size=80))
def test_fwp_garbage_never_panics(blob):
    try:
        fwp.decode(blob)
    except ProtocolError:
        pass


# -- netpbm ----------------------------------------------------------------------

def test_pgm_example():
    f = netpbm.decode(b"P5 2 2 255\n" + bytes([1, 2, 3, 4]))
    assert (f.width, f.height, f.channels) == (2, 2, 1)
    assert f.data.tolist() == [[1, 2], [3, 4]]


def test_netpbm_roundtrip(rng):
    for shape in [(3, 4), (2, 5, 3)]:
        f = Frame(rng.integers(0, 256, shape, dtype=np.uint8))
        assert netpbm.decode(netpbm.encode(f)) == f


def test_netpbm_truncated_names_offset():
    with pytest.raises(DecodeError, match="offset"):
        netpbm.decode(b"P6\n2 2\n255\n" + bytes(5))


@given(st.binary(max_size=40))
def test_netpbm_garbage_never_panics(blob):
    try:
        netpbm.decode(b"P5" + blob)
    except FloatwatchError:
        pass


# -- Y4M --------------------------------------------------------------------------

def test_header_parse_example():
    hdr = Y4MHeader.parse(b"YUV4MPEG2 W320 H240 F30:1 C420mpeg2")
    assert (hdr.width, hdr.height, hdr.fps, hdr.chroma) == (320, 240, Fraction(30), "420mpeg2")
    assert hdr.frame_bytes == 320 * 240 * 3 // 2


@pytest.mark.parametrize("line", [b"YUV4MPEG W2 H2", b"YUV4MPEG2 W2", b"YUV4MPEG2 W2 H2 C444",
                                  b"YUV4MPEG2 Wx H2", b"YUV4MPEG2 W2 H2 F30:0", b"YUV4MPEG2 W0 H2"])
def test_header_rejects(line):
    with pytest.raises(FormatUnrecognized):
        Y4MHeader.parse(line)


def test_yuv_gray_axis():
    # neutral chroma decodes to gray; limited range maps 16..235 onto 0..255
    y = np.array([[16, 235], [126, 126]], np.uint8)
    u = v = np.array([[128]], np.uint8)
    rgb = yuv420_to_rgb(y, u, v, full_range=False)
    assert rgb[0, 0].tolist() == [0, 0, 0] and rgb[0, 1].tolist() == [255, 255, 255]
    assert rgb[1, 0].tolist() == [128, 128, 128]


def test_full_range_roundtrip_is_close(rng):
    rgb = rng.integers(0, 256, (6, 8, 3), dtype=np.uint8)
    smooth = np.repeat(np.repeat(rgb[::2, ::2], 2, axis=0), 2, axis=1)
    back = yuv420_to_rgb(*rgb_to_yuv420(smooth), full_range=True)
    assert np.abs(back.astype(int) - smooth.astype(int)).max() <= 2


def test_writer_reader_roundtrip_gray(tmp_path):
    frames = [Frame(np.full((3, 5), v, np.uint8)) for v in (0, 77, 255)]
    buf = io.BytesIO()
    w = Y4MWriter(buf, 5, 3, 1, fps=25)
    for f in frames:
        w.write(f)
    buf.seek(0)
    r = Y4MReader(buf)
    got = []
    while (f := r.read_frame()) is not None:
        got.append(f)
    assert [g.data.tolist() for g in got] == [f.data.tolist() for f in frames]
    assert buf.getvalue().count(b"FRAME\n") == 3


@pytest.mark.parametrize("name", sorted(FIXTURES["decoded"]))
def test_golden_decode(name):
    exp = FIXTURES["decoded"][name]
    path = GOLDEN / name
    if name.endswith(".y4m"):
        with Y4MSource(SourceSpec("y4m", path=str(path))) as src:
            frames = list(src)
    else:
        frames = [netpbm.read(path)]
    assert len(frames) == len(exp["frames"])
    for f, hexbytes in zip(frames, exp["frames"]):
        assert (f.width, f.height, f.channels) == (exp["width"], exp["height"], exp["channels"])
        assert f.tobytes() == bytes.fromhex(hexbytes)


@pytest.mark.parametrize("name", sorted(FIXTURES["malformed"]))
def test_golden_malformed(name):
    err = getattr(errors, FIXTURES["malformed"][name])
    path = GOLDEN / name
    with pytest.raises(err):
        if name.endswith(".y4m"):
            with Y4MSource(SourceSpec("y4m", path=str(path))) as src:
                list(src)
        else:
            netpbm.read(path)


def test_truncated_y4m_names_offset():
    with pytest.raises(DecodeError) as info:
        with Y4MSource(SourceSpec("y4m", path=str(GOLDEN / "truncated.y4m"))) as src:
            list(src)
    header = len(b"YUV4MPEG2 W4 H2 Cmono\n")
    assert info.value.offset == header + 6 + 8 + 6 + 5
    assert str(info.value.offset) in str(info.value)


@given(st.binary(max_size=60))
def test_y4m_garbage_never_panics(blob):
    try:
        r = Y4MReader(io.BytesIO(b"YUV4MPEG2 W2 H2 Cmono\n" + blob))
        while r.read_frame() is not None:
            pass
    except FloatwatchError:
        pass
