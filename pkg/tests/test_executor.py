import asyncio
import csv
import json

import pytest
from pydantic import ValidationError

from embedlab import executor
from embedlab.executor import (
    MemoryBudgetError,
    build_setup,
    embedding_for,
    estimate_memory_mb,
    run_distinguisher,
)
from embedlab.schemas import CipherName, EmbeddingKind, ExperimentConfig, KeyMode, MatrixPolicy, RunState
from embedlab.store import run_store


def _config(tmp_path, **overrides) -> ExperimentConfig:
    base = dict(
        cipher=CipherName.REDUCED,
        m=2,
        b=2,
        rounds=2,
        n_matrices=4,
        seed=1,
        workers=2,
        output=str(tmp_path),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def _run_dirs(tmp_path):
    return [p for p in tmp_path.iterdir() if p.is_dir()]


# ---------------------------------------------------------------------
# Configuration


def test_config_rejects_serpent_runs():
    with pytest.raises(ValidationError):
        ExperimentConfig(cipher="serpent-linear", n_matrices=2, seed=0)


def test_config_related_keys_need_related_mode():
    with pytest.raises(ValidationError):
        ExperimentConfig(cipher="reduced", n_matrices=2, seed=0, related_keys=3)


def test_config_bounds():
    with pytest.raises(ValidationError):
        ExperimentConfig(cipher="reduced", n_matrices=0, seed=0)
    with pytest.raises(ValidationError):
        ExperimentConfig(cipher="reduced", n_matrices=1, seed=0, significance=1.0)


def test_embedding_for_named_ciphers():
    cipher, params = embedding_for(CipherName.PRESENT80, EmbeddingKind.ALPHA)
    assert cipher.name == "present80"
    assert (params.t, params.s) == (3, 768)
    cipher, params = embedding_for(CipherName.SERPENT_LINEAR, EmbeddingKind.EPS)
    assert cipher is None
    with pytest.raises(ValueError):
        embedding_for(CipherName.SERPENT_LINEAR, EmbeddingKind.ALPHA)


def test_setup_defaults_rows_to_rank_cap(tmp_path):
    setup = build_setup(_config(tmp_path))
    assert setup.rank_cap == 7
    assert setup.rows == 7
    assert estimate_memory_mb(_config(tmp_path), setup) < 1


def test_low_rank_rows_limited_by_active_bricks(tmp_path):
    setup = build_setup(_config(tmp_path, policy=MatrixPolicy.LOW_RANK, rank_target=1))
    assert setup.rows == 4
    with pytest.raises(ValueError):
        build_setup(_config(tmp_path, policy=MatrixPolicy.LOW_RANK, rank_target=3))
    with pytest.raises(ValueError):
        build_setup(_config(tmp_path, policy=MatrixPolicy.LOW_RANK, rank_target=1, matrix_rows=5))


# ---------------------------------------------------------------------
# Runs


def test_distinguisher_run_writes_artifacts(tmp_path):
    report = run_distinguisher(_config(tmp_path))
    assert len(report.ranks) == 4
    assert report.rank_cap == 7
    assert all(0 < r <= 7 for r in report.ranks)
    assert report.observed.total == 4
    assert report.expected.total == 80
    assert report.verdict in (True, False)

    (run_dir,) = _run_dirs(tmp_path)
    saved = json.loads((run_dir / "report.json").read_text())
    assert saved["ranks"] == report.ranks
    with open(run_dir / "ranks.csv") as f:
        rows = list(csv.DictReader(f))
    assert [int(r["rank"]) for r in rows] == report.ranks

    run = asyncio.run(run_store.get_run(run_dir.name))
    assert run.state == RunState.SUCCEEDED
    assert run.matrices_done == 4
    assert run.progress == 1.0


def test_runs_are_reproducible(tmp_path):
    first = run_distinguisher(_config(tmp_path / "a", workers=1))
    second = run_distinguisher(_config(tmp_path / "b", workers=3))
    assert first.ranks == second.ranks
    assert first.expected == second.expected


def test_single_matrix_has_no_verdict(tmp_path):
    report = run_distinguisher(_config(tmp_path, n_matrices=1))
    assert report.verdict is None
    assert any("insufficient data" in note for note in report.notes)


def test_related_keys_multiply_ranks(tmp_path):
    report = run_distinguisher(
        _config(tmp_path, n_matrices=2, key_mode=KeyMode.RELATED, related_keys=3, trials=60)
    )
    assert len(report.ranks) == 6
    assert report.expected.total == 60
    (run_dir,) = _run_dirs(tmp_path)
    lines = (run_dir / "ranks.csv").read_text().splitlines()
    assert lines[1].startswith("0,0,")
    assert lines[-1].startswith("1,2,")


@pytest.mark.parametrize(
    "overrides",
    [
        dict(policy=MatrixPolicy.LOW_RANK, rank_target=1),
        dict(policy=MatrixPolicy.UNIFORM_IN_T),
        dict(key_mode=KeyMode.INDEPENDENT),
        dict(embedding=EmbeddingKind.ALPHA),
    ],
    ids=["low-rank", "uniform-in-T", "independent-keys", "alpha"],
)
def test_policies_respect_rank_cap(tmp_path, overrides):
    report = run_distinguisher(_config(tmp_path, **overrides))
    assert len(report.ranks) == 4
    assert all(r <= report.rank_cap for r in report.ranks)
    if overrides.get("policy") == MatrixPolicy.LOW_RANK:
        assert all(r <= 4 for r in report.ranks)
    if overrides.get("policy") == MatrixPolicy.UNIFORM_IN_T:
        assert report.notes


def test_memory_budget_fails_run(tmp_path, monkeypatch):
    monkeypatch.setattr(executor, "MEMORY_LIMIT_MB", 0)
    with pytest.raises(MemoryBudgetError):
        run_distinguisher(_config(tmp_path))
    (run_dir,) = _run_dirs(tmp_path)
    error = json.loads((run_dir / "error.json").read_text())
    assert error["type"] == "MemoryBudgetError"
    run = asyncio.run(run_store.get_run(run_dir.name))
    assert run.state == RunState.FAILED


def test_allow_large_skips_budget(tmp_path, monkeypatch):
    monkeypatch.setattr(executor, "MEMORY_LIMIT_MB", 0)
    report = run_distinguisher(_config(tmp_path, allow_large=True, n_matrices=2))
    assert len(report.ranks) == 2


def test_unknown_kind_is_rejected(tmp_path):
    with pytest.raises(ValueError):
        run_distinguisher(_config(tmp_path, kind="square-attack"))
