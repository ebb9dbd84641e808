import json
import logging
import os
import struct
from typing import Optional, Sequence

import numpy as np

from .algebra import BitMatrix
from .schemas import ExperimentReport, VerificationReport
from .settings import RESULTS_DIR

logger = logging.getLogger(__name__)

MATRIX_MAGIC = b"EMBDMAT1"
_HEADER = struct.Struct("<8sQQ")


class MatrixFormatError(ValueError):
    pass


class ArtifactStore:
    def __init__(self, root: str = RESULTS_DIR) -> None:
        self.root = root

    def get_results_dir(self, override: Optional[str] = None) -> str:
        path = override or self.root
        os.makedirs(path, exist_ok=True)
        return path

    def get_run_dir(self, run_id: str, override: Optional[str] = None) -> str:
        run_dir = os.path.join(self.get_results_dir(override), run_id)
        os.makedirs(run_dir, exist_ok=True)
        return run_dir

    def write_report(self, run_dir: str, report: ExperimentReport | VerificationReport) -> str:
        path = os.path.join(run_dir, "report.json")
        with open(path, "w") as f:
            f.write(report.model_dump_json(indent=2))
        logger.info("report written to %s", path)
        return path

    def write_ranks_csv(self, run_dir: str, ranks: Sequence[int], keys_per_matrix: int = 1) -> str:
        path = os.path.join(run_dir, "ranks.csv")
        with open(path, "w") as f:
            f.write("matrix,key,rank\n")
            for idx, r in enumerate(ranks):
                f.write(f"{idx // keys_per_matrix},{idx % keys_per_matrix},{r}\n")
        return path

    def write_error(self, run_dir: str, error: BaseException) -> str:
        path = os.path.join(run_dir, "error.json")
        with open(path, "w") as f:
            json.dump({"error": str(error), "type": type(error).__name__}, f)
        return path


def export_matrix(path: str, matrix: BitMatrix) -> None:
    """Write magic, rows and cols (little-endian uint64) then row-major little-endian uint64 words."""
    words = np.ascontiguousarray(matrix.words, dtype="<u8")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MATRIX_MAGIC, matrix.rows, matrix.cols))
        f.write(words.tobytes())
    logger.info("exported %dx%d matrix to %s", matrix.rows, matrix.cols, path)


def import_matrix(path: str) -> BitMatrix:
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise MatrixFormatError(f"{path}: truncated header")
        magic, rows, cols = _HEADER.unpack(header)
        if magic != MATRIX_MAGIC:
            raise MatrixFormatError(f"{path}: bad magic {magic!r}")
        nwords = (cols + 63) // 64
        payload = f.read()
    if len(payload) != rows * nwords * 8:
        raise MatrixFormatError(f"{path}: expected {rows * nwords * 8} payload bytes, got {len(payload)}")
    words = np.frombuffer(payload, dtype="<u8").astype(np.uint64).reshape(rows, nwords)
    return BitMatrix(rows, cols, words)


artifact_store = ArtifactStore()
