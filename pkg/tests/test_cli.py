import csv
import io
import json

import numpy as np
import pytest

from rcm.cli import main
from rcm.imageio import GrayImage, save_pgm

from conftest import constant_image, natural_image, noisy_gradient_image


@pytest.fixture
def files(tmp_path):
    img = natural_image(128)
    src = tmp_path / "in.pgm"
    save_pgm(img, src)
    payload = tmp_path / "payload.bin"
    payload.write_bytes(np.random.default_rng(0).integers(0, 256, 700, dtype=np.uint8).tobytes())
    return tmp_path, src, payload


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


@pytest.mark.parametrize("pairing", ["row", "col", "alt"])
@pytest.mark.parametrize("iterations", [1, 2, 3])
@pytest.mark.parametrize("threshold", [None, 32])
@pytest.mark.parametrize("backend", ["lut", "direct"])
def test_round_trip(files, capsys, pairing, iterations, threshold, backend):
    tmp, src, payload = files
    extra = ["--pairing", pairing, "--iterations", iterations, "--backend", backend]
    if threshold:
        extra += ["--threshold", threshold]
    code, out = run(capsys, "embed", "--input", src, "--output", tmp / "m.pgm",
                    "--payload", payload, *extra)
    assert code == 0
    stats = json.loads(out)
    assert len(stats["iterations"]) == iterations
    code, out = run(capsys, "extract", "--input", tmp / "m.pgm", "--output", tmp / "r.pgm",
                    "--payload-out", tmp / "p.bin", *extra)
    assert code == 0 and json.loads(out)["original_recovered"] is True
    assert (tmp / "r.pgm").read_bytes() == src.read_bytes()
    assert (tmp / "p.bin").read_bytes() == payload.read_bytes()


def test_constant_image_near_bound(tmp_path, capsys):
    src = tmp_path / "c.pgm"
    save_pgm(constant_image(512), src)
    (tmp_path / "p").write_bytes(b"abc")
    code, out = run(capsys, "embed", "--input", src, "--output", tmp_path / "m.pgm",
                    "--payload", tmp_path / "p", "--iterations", 1)
    stats = json.loads(out)
    assert code == 0
    assert stats["iterations"][0]["bitrate_bpp"] == 0.5
    assert stats["payload_bpp"] == pytest.approx(8 * 15 / (512 * 512))


def test_payload_too_large_exit_2(files, capsys):
    tmp, src, _ = files
    code, out = run(capsys, "capacity", "--input", src, "--pairing", "row")
    row = list(csv.DictReader(io.StringIO(out)))[0]
    cap = int(row["capacity_bits"])
    big = tmp / "big.bin"
    big.write_bytes(bytes(cap // 8 - 12 + 1))
    code = main(["embed", "--input", str(src), "--output", str(tmp / "m.pgm"),
                 "--payload", str(big), "--pairing", "row"])
    assert code == 2
    assert f"capacity of {cap} bits" in capsys.readouterr().err
    fits = tmp / "fits.bin"
    fits.write_bytes(bytes(cap // 8 - 12))
    code, _ = run(capsys, "embed", "--input", src, "--output", tmp / "m.pgm",
                  "--payload", fits, "--pairing", "row")
    assert code == 0


def test_trailing_saved_bits_exit_3(tmp_path, capsys):
    img = GrayImage(np.array([[100, 80] * 200 + [255, 0]], dtype=np.uint8))
    save_pgm(img, tmp_path / "t.pgm")
    (tmp_path / "p").write_bytes(b"")
    args = ["embed", "--input", tmp_path / "t.pgm", "--output", tmp_path / "m.pgm",
            "--payload", tmp_path / "p", "--pairing", "row"]
    assert run(capsys, *args, "--strict-tail")[0] == 3
    assert run(capsys, *args)[0] == 0


def test_mismatched_pairing_exit_4(files, capsys):
    tmp, src, payload = files
    run(capsys, "embed", "--input", src, "--output", tmp / "m.pgm", "--payload", payload,
        "--pairing", "row", "--iterations", 2)
    code, _ = run(capsys, "extract", "--input", tmp / "m.pgm", "--output", tmp / "r.pgm",
                  "--payload-out", tmp / "p.bin", "--pairing", "alt", "--iterations", 2)
    assert code == 4


def test_truncated_file_exit_1(files, capsys):
    tmp, src, payload = files
    run(capsys, "embed", "--input", src, "--output", tmp / "m.pgm", "--payload", payload)
    data = (tmp / "m.pgm").read_bytes()
    (tmp / "cut.pgm").write_bytes(data[:-10])
    code, _ = run(capsys, "extract", "--input", tmp / "cut.pgm", "--output", tmp / "r.pgm",
                  "--payload-out", tmp / "p.bin")
    assert code == 1
    code, _ = run(capsys, "extract", "--input", tmp / "missing.pgm", "--output", tmp / "r.pgm",
                  "--payload-out", tmp / "p.bin")
    assert code == 1


def test_capacity_sweep(files, capsys):
    _, src, _ = files
    code, out = run(capsys, "capacity", "--input", src, "--sweep", "2:40")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["delta"]) for r in rows] == list(range(2, 41, 2))
    rates = [float(r["bitrate_bpp"]) for r in rows]
    assert rates == sorted(rates)
    assert set(rows[0]) == {"delta", "P", "T", "capacity_bits", "bitrate_bpp", "psnr_if_embedded"}


def test_capacity_full_threshold_matches_none(files, capsys):
    _, src, _ = files
    _, a = run(capsys, "capacity", "--input", src)
    _, b = run(capsys, "capacity", "--input", src, "--threshold", 256)
    ra = list(csv.reader(io.StringIO(a)))[1]
    rb = list(csv.reader(io.StringIO(b)))[1]
    assert ra[0] == "none" and rb[0] == "256" and ra[1:] == rb[1:]


def test_capacity_deterministic_by_seed(files, capsys):
    _, src, _ = files
    _, a = run(capsys, "capacity", "--input", src, "--iterations", 3, "--seed", 4)
    _, b = run(capsys, "capacity", "--input", src, "--iterations", 3, "--seed", 4)
    assert a == b


def test_threshold_lowers_rate(tmp_path, capsys):
    src = tmp_path / "hc.pgm"
    save_pgm(noisy_gradient_image(128, 30, 1), src)
    _, a = run(capsys, "capacity", "--input", src)
    _, b = run(capsys, "capacity", "--input", src, "--threshold", 2)
    rate = lambda out: float(list(csv.DictReader(io.StringIO(out)))[0]["bitrate_bpp"])
    assert rate(b) < rate(a) - 0.2


def test_croptest(tmp_path, capsys):
    img = noisy_gradient_image(256, 6, 3)
    save_pgm(img, tmp_path / "o.pgm")
    (tmp_path / "p").write_bytes(b"crop me")
    run(capsys, "embed", "--input", tmp_path / "o.pgm", "--output", tmp_path / "m.pgm",
        "--payload", tmp_path / "p", "--pairing", "row")
    base = ["croptest", "--input", tmp_path / "m.pgm", "--original", tmp_path / "o.pgm",
            "--pairing", "row"]
    code, out = run(capsys, *base, "--crop", "0,0,256,256")
    rep = json.loads(out)
    assert code == 0 and rep["exact_fraction"] == 1.0 and rep["payload_crc"] == "ok"
    code, out = run(capsys, *base, "--crop", "40,30,128,150")
    rep = json.loads(out)
    assert code == 0 and rep["slot_pixels_exact"] and rep["max_error"] <= 1
    assert rep["lsb_only_errors"] == rep["mismatched_pixels"]
    assert run(capsys, *base, "--crop", "41,30,128,150")[0] == 5


def test_bench(files, capsys):
    _, src, _ = files
    code, out = run(capsys, "bench", "--input", src, "--reps", 2, "--seed", 1)
    rep = json.loads(out)
    assert code == 0 and rep["identical_outputs"]
    assert set(rep["mpix_per_s"]) == {"direct", "lut"}
    assert all(v > 0 for b in rep["mpix_per_s"].values() for v in b.values())


@pytest.mark.parametrize("argv", [
    ["bench", "--input", "x.pgm", "--reps", "0"],
    ["embed", "--input", "x.pgm"],
    ["embed", "--input", "x", "--output", "y", "--payload", "z", "--pairing", "diag"],
    ["frobnicate"],
])
def test_usage_errors_exit_64(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 64


def test_bad_threshold_is_usage_error(files, capsys):
    _, src, _ = files
    assert run(capsys, "capacity", "--input", src, "--threshold", 0)[0] == 64
