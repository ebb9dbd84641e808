import json

import numpy as np
import pytest

from embedlab.algebra import BitMatrix
from embedlab.file_store import MATRIX_MAGIC, ArtifactStore, MatrixFormatError, export_matrix, import_matrix
from embedlab.schemas import Suite, VerificationReport


def test_run_dirs_are_created(tmp_path):
    store = ArtifactStore(str(tmp_path / "results"))
    run_dir = store.get_run_dir("abc")
    assert (tmp_path / "results" / "abc").is_dir()
    override = store.get_run_dir("abc", str(tmp_path / "elsewhere"))
    assert override.startswith(str(tmp_path / "elsewhere"))
    assert run_dir != override


def test_report_and_ranks(tmp_path):
    store = ArtifactStore(str(tmp_path))
    run_dir = store.get_run_dir("run")
    report = VerificationReport(suite=Suite.BOUNDS, version="0.1.0")
    path = store.write_report(run_dir, report)
    assert json.loads(open(path).read())["suite"] == "bounds"
    csv = store.write_ranks_csv(run_dir, [3, 2, 3, 1], keys_per_matrix=2)
    assert open(csv).read().splitlines() == ["matrix,key,rank", "0,0,3", "0,1,2", "1,0,3", "1,1,1"]


def test_error_file(tmp_path):
    store = ArtifactStore(str(tmp_path))
    path = store.write_error(store.get_run_dir("run"), ValueError("bad rows"))
    assert json.loads(open(path).read()) == {"error": "bad rows", "type": "ValueError"}


@pytest.mark.parametrize("rows, cols", [(1, 1), (5, 64), (7, 130), (0, 8)])
def test_matrix_file_round_trip(tmp_path, rows, cols):
    rng = np.random.default_rng(rows * 1000 + cols)
    matrix = BitMatrix.from_dense(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))
    path = str(tmp_path / "m.bin")
    export_matrix(path, matrix)
    with open(path, "rb") as f:
        assert f.read(8) == MATRIX_MAGIC
    assert import_matrix(path) == matrix


def test_matrix_file_errors(tmp_path):
    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"NOTMATRX" + bytes(16))
    with pytest.raises(MatrixFormatError):
        import_matrix(str(bad_magic))

    truncated = tmp_path / "short.bin"
    truncated.write_bytes(MATRIX_MAGIC[:4])
    with pytest.raises(MatrixFormatError):
        import_matrix(str(truncated))

    path = str(tmp_path / "payload.bin")
    export_matrix(path, BitMatrix.identity(3))
    with open(path, "ab") as f:
        f.write(b"\x00")
    with pytest.raises(MatrixFormatError):
        import_matrix(path)
