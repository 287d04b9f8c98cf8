import numpy as np
import pytest
from PIL import Image

from cscadmm import FilterBank
from cscadmm.csc import IterationTrace, TraceRecord
from cscadmm.exceptions import FormatError
from cscadmm.io import (
    FILTER_DATA,
    FILTER_MOSAIC,
    export_filterbank,
    export_trace,
    filter_mosaic,
    import_filterbank,
    load_image,
    mosaic_layout,
    read_pgm,
    read_trace,
    save_image,
    save_pgm,
)

GOLDEN_HEADER = "iter,fidelity,l1,objective,constraint_error,nu,seconds\n"


class TestImages:
    def test_pgm_scaling_example(self, tmp_path):
        p = tmp_path / "tiny.pgm"
        p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
        img = load_image(p)
        assert np.allclose(img, [[0, 128 / 255], [1.0, 64 / 255]], atol=1e-15)
        assert img[0, 1] == pytest.approx(0.50196, abs=1e-5)

    def test_pgm_header_comments(self, tmp_path):
        p = tmp_path / "c.pgm"
        p.write_bytes(b"P5\n# made by hand\n1 2\n# max\n255\n" + bytes([10, 20]))
        pixels, maxval = read_pgm(p)
        assert maxval == 255 and pixels.tolist() == [[10], [20]]

    def test_sixteen_bit_pgm(self, tmp_path):
        p = tmp_path / "wide.pgm"
        save_pgm(p, np.array([[0, 65535], [32768, 1]]), maxval=65535)
        img = load_image(p)
        assert img[0, 1] == 1.0 and img[1, 0] == pytest.approx(32768 / 65535)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.pgm")

    def test_rgb_png_rejected(self, tmp_path):
        p = tmp_path / "rgb.png"
        Image.new("RGB", (3, 3), (10, 20, 30)).save(p)
        with pytest.raises(FormatError, match="RGB"):
            load_image(p)

    def test_grey_png(self, tmp_path):
        p = tmp_path / "g.png"
        Image.fromarray(np.array([[0, 51], [255, 102]], dtype=np.uint8)).save(p)
        assert np.allclose(load_image(p), [[0, 0.2], [1, 0.4]])

    def test_ascii_pgm_rejected(self, tmp_path):
        p = tmp_path / "a.pgm"
        p.write_bytes(b"P2\n1 1\n255\n7\n")
        with pytest.raises(FormatError, match="P2"):
            load_image(p)

    def test_truncated_raster(self, tmp_path):
        p = tmp_path / "t.pgm"
        p.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
        with pytest.raises(FormatError, match="expected 16"):
            load_image(p)

    def test_save_round_trip(self, tmp_path, rng):
        img = np.rint(rng.uniform(0, 255, (5, 7))) / 255
        save_image(tmp_path / "r.pgm", img)
        assert np.allclose(load_image(tmp_path / "r.pgm"), img, atol=1e-15)


def _trace(rows, constrained=False):
    t = IterationTrace()
    for i in range(1, rows + 1):
        t.append(TraceRecord(
            iteration=i, fidelity=1.0 / 3 * i, l1=2.0 ** -i, objective=np.pi * i,
            seconds=0.001 * i,
            constraint_error=0.5 if constrained else None,
            nu=123.456789012345 if constrained else None,
            equality_branch=constrained,
        ))
    return t


class TestTraceExport:
    def test_golden_header(self, tmp_path):
        export_trace(_trace(0), tmp_path / "t.csv")
        assert (tmp_path / "t.csv").read_text() == GOLDEN_HEADER

    def test_one_row_unconstrained(self, tmp_path):
        export_trace(_trace(1), tmp_path / "t.csv")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert fields[0] == "1" and fields[4] == "" and fields[5] == ""
        assert fields[1] == "0.333333333333"

    def test_round_trip(self, tmp_path):
        t = _trace(4, constrained=True)
        export_trace(t, tmp_path / "t.csv")
        back = read_trace(tmp_path / "t.csv")
        assert len(back) == 4
        for col in ("fidelity", "l1", "objective", "constraint_error", "nu", "seconds"):
            assert np.allclose(back.column(col), t.column(col), rtol=1e-11, atol=0)

    def test_bad_header(self, tmp_path):
        (tmp_path / "t.csv").write_text("a,b\n")
        with pytest.raises(FormatError):
            read_trace(tmp_path / "t.csv")


class TestFilterBankExport:
    def test_round_trip_bit_exact(self, tmp_path):
        fb = FilterBank.random(5, (3, 4), seed=2)
        export_filterbank(fb, tmp_path)
        assert import_filterbank(tmp_path) == fb
        assert import_filterbank(tmp_path / "filters.hdr") == fb

    def test_binary_layout(self, tmp_path):
        fb = FilterBank.random(2, (2, 3), seed=2)
        export_filterbank(fb, tmp_path)
        raw = np.frombuffer((tmp_path / FILTER_DATA).read_bytes(), dtype="<f8")
        assert np.array_equal(raw, fb.filters.ravel(order="C"))

    def test_single_impulse(self, tmp_path):
        d = np.zeros((1, 3, 3))
        d[0, 0, 0] = 1
        export_filterbank(FilterBank(d), tmp_path)
        assert (tmp_path / FILTER_DATA).stat().st_size == 9 * 8
        pixels, _ = read_pgm(tmp_path / FILTER_MOSAIC)
        assert pixels.shape == (3, 3)
        assert pixels[0, 0] == 255 and pixels.sum() == 255

    @pytest.mark.parametrize("K, layout", [(1, (1, 1)), (2, (1, 2)), (5, (2, 3)),
                                           (16, (4, 4)), (17, (4, 5))])
    def test_layout(self, K, layout):
        assert mosaic_layout(K) == layout

    def test_tile_count_and_gutters(self):
        fb = FilterBank.random(7, (4, 4), seed=0)
        mos = filter_mosaic(fb.filters)
        rows, cols = mosaic_layout(7)
        assert mos.shape == (rows * 5 - 1, cols * 5 - 1)
        assert np.all(mos[4, :] == 0) and np.all(mos[:, 4] == 0)
        tiles = [mos[r * 5:r * 5 + 4, c * 5:c * 5 + 4] for r in range(rows) for c in range(cols)]
        assert sum(t.max() == 255 for t in tiles) == 7

    def test_malformed_header(self, tmp_path):
        (tmp_path / "filters.hdr").write_text("K x\n")
        with pytest.raises(FormatError):
            import_filterbank(tmp_path)

    def test_missing_bank(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            import_filterbank(tmp_path / "none")
