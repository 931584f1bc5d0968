import numpy as np
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from relca.io import dump_spacetime, manifest, parse_spacetime, pgm, ppm, read_manifest, \
    sha256_file, write_text


@given(arrays(np.int64, st.tuples(st.integers(1, 5), st.integers(1, 9)),
              elements=st.integers(-1, 300)))
def test_spacetime_roundtrip_1d(frames):
    times, back = parse_spacetime(dump_spacetime(frames))
    assert times == list(range(len(frames)))
    assert np.array_equal(back, frames)


def test_spacetime_2d_and_vac():
    grid = np.array([[[0, 1], [-1, 15]], [[2, 2], [3, -1]]])
    text = dump_spacetime(grid, times=[0, 10])
    assert text.splitlines()[:3] == ["t 0", "0 1", ". f"]
    times, back = parse_spacetime(text)
    assert times == [0, 10] and np.array_equal(back, grid)


def test_pgm_ppm_headers():
    img = np.array([[0, 1, -1], [2, 3, 0]])
    g = pgm(img).splitlines()
    assert g[:3] == ["P2", "3 2", "3"] and g[3] == "0 1 0"
    c = ppm(img).splitlines()
    assert c[:3] == ["P3", "3 2", "255"] and c[3].endswith("255 0 0")


def test_manifest_digests(tmp_path):
    a = write_text(tmp_path / "sub" / "a.txt", "x\n")
    b = write_text(tmp_path / "b.csv", "1,2\n")
    text = manifest({"seed": 3, "Q": 32}, [b, a], "9.9", 1.25)
    m = read_manifest(text)
    assert m["version"] == "9.9" and m["config.seed"] == "3"
    assert m["digest.a.txt"] == sha256_file(a)
    assert list(m)[2:4] == ["config.Q", "config.seed"]
    assert a.read_bytes() == b"x\n"
