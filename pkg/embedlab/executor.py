import asyncio
import logging
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Optional

import numpy as np

from . import __version__
from .algebra import BitMatrix, matrix_order, rank
from .ciphers import TbCipherSpec, aes128, independent_round_keys, present80, reduced_cipher
from .embed import (
    AdmissibleSpace,
    EmbeddingParams,
    admissible_dim,
    aes_params,
    alpha_bits,
    dim_formula,
    dim_orbit_formula,
    present_params,
    serpent_params,
)
from .file_store import artifact_store
from .rankstats import Sampler, chi_square_compare, histogram_of, monte_carlo_ranks
from .scheduler import run_pool
from .schemas import (
    CipherName,
    EmbeddingKind,
    ExperimentConfig,
    ExperimentReport,
    KeyMode,
    MatrixPolicy,
    RunState,
)
from .settings import BASELINE_FACTOR, MEMORY_LIMIT_MB
from .store import run_store

logger = logging.getLogger(__name__)

# Philox keys for the independent random streams of one run
_MATRICES, _KEYS, _BASELINE, _VALIDATION = range(4)

# reduced-cipher mixing layers above this order are not embedded with α
MAX_REDUCED_ORBIT = 64


class MemoryBudgetError(RuntimeError):
    pass


def _subkey(seed: int, purpose: int) -> int:
    return (purpose << 64) | (seed & ((1 << 64) - 1))


def _rng(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=_subkey(seed, purpose)).jumped(index + 1))


@dataclass(frozen=True)
class ExperimentSetup:
    cipher: TbCipherSpec
    params: EmbeddingParams
    rank_cap: int
    rows: int
    space: Optional[AdmissibleSpace] = None


def embedding_for(
    cipher_name: CipherName,
    embedding: EmbeddingKind,
    m: int = 4,
    b: int = 4,
    rounds: int = 4,
) -> tuple[Optional[TbCipherSpec], EmbeddingParams]:
    """Cipher and embedding parameters; alpha runs along the full orbit of the mixing layer."""
    alpha = embedding == EmbeddingKind.ALPHA
    if cipher_name == CipherName.AES128:
        return aes128(), aes_params(8 if alpha else 1)
    if cipher_name == CipherName.PRESENT80:
        return present80(), present_params(3 if alpha else 1)
    if cipher_name == CipherName.SERPENT_LINEAR:
        if alpha:
            raise ValueError("the SERPENT linear layer is embedded with eps only")
        return None, serpent_params()
    reduced = reduced_cipher(m, b, rounds)
    mixing = reduced.spec.mixing[0].matrix
    t = 1
    if alpha:
        t = matrix_order(mixing, cap=MAX_REDUCED_ORBIT)
        if t is None:
            raise ValueError(f"mixing layer order exceeds {MAX_REDUCED_ORBIT}; use the eps embedding")
    return reduced.spec, EmbeddingParams(reduced.field, b, t, mixing if t > 1 else None)


def build_setup(config: ExperimentConfig) -> ExperimentSetup:
    cipher, params = embedding_for(config.cipher, config.embedding, config.m, config.b, config.rounds)

    space = None
    if config.policy == MatrixPolicy.UNIFORM_IN_T or config.cipher == CipherName.REDUCED:
        space = admissible_dim(params)
        cap = space.dim
    else:
        cap = dim_formula(params) if params.t == 1 else dim_orbit_formula(params)

    if config.policy == MatrixPolicy.LOW_RANK:
        if config.rank_target > params.b:
            raise ValueError(f"rank_target {config.rank_target} exceeds the {params.b} bricks")
        available = params.q ** config.rank_target
    else:
        available = 1 << params.r
    rows = config.matrix_rows or min(cap, available)
    if rows > available:
        raise ValueError(f"{rows} distinct rows requested but only {available} plaintexts available")
    return ExperimentSetup(cipher, params, cap, rows, space)


def estimate_memory_mb(config: ExperimentConfig, setup: ExperimentSetup) -> float:
    """Upper estimate: one packed matrix per worker plus the baseline and validation matrices."""
    words = (setup.params.s + 63) // 64
    per_matrix = setup.rows * words * 8
    # the elimination keeps a working copy next to the input
    return 2 * per_matrix * (config.workers + 2) / (1 << 20)


def _distinct_states(rng: np.random.Generator, count: int, width: int) -> list[int]:
    if width <= 62:
        return [int(v) for v in rng.choice(1 << width, size=count, replace=False)]
    nbytes = (width + 7) // 8
    mask = (1 << width) - 1
    seen: dict[int, None] = {}
    while len(seen) < count:
        seen[int.from_bytes(rng.bytes(nbytes), "little") & mask] = None
    return list(seen)


def _low_rank_plaintexts(rng: np.random.Generator, params: EmbeddingParams, count: int, active: int) -> list[int]:
    """Distinct plaintexts varying only ``active`` randomly chosen bricks; the others are fixed."""
    m, b, q = params.m, params.b, params.q
    bricks = sorted(int(j) for j in rng.choice(b, size=active, replace=False))
    fixed = 0
    for j in range(b):
        if j not in bricks:
            fixed |= int(rng.integers(0, q)) << (m * j)
    out = []
    for code in _distinct_states(rng, count, m * active):
        v = fixed
        for k, j in enumerate(bricks):
            v |= ((code >> (m * k)) & (q - 1)) << (m * j)
        out.append(v)
    return out


def _coefficients(rng: np.random.Generator, rows: int, generators: int) -> BitMatrix:
    if generators <= 62 and rows > 1 << generators:
        raise ValueError("more rows than distinct generator combinations")
    seen: dict[int, None] = {}
    while len(seen) < rows:
        seen[int.from_bytes(rng.bytes((generators + 7) // 8), "little") & ((1 << generators) - 1)] = None
    return BitMatrix.from_rows(list(seen), generators)


def _choose_plaintexts(config: ExperimentConfig, setup: ExperimentSetup, rng: np.random.Generator) -> list[int]:
    if config.policy == MatrixPolicy.LOW_RANK:
        return _low_rank_plaintexts(rng, setup.params, setup.rows, config.rank_target)
    return _distinct_states(rng, setup.rows, setup.params.r)


def _keys(config: ExperimentConfig, cipher: TbCipherSpec) -> list[list[int]]:
    """Round keys for every key of the run."""
    rng = _rng(config.seed, _KEYS)
    if config.key_mode == KeyMode.INDEPENDENT:
        return [independent_round_keys(_subkey(config.seed, _KEYS), cipher.rounds + 1, cipher.state_bits)]
    width = cipher.key_bits
    nbytes = (width + 7) // 8
    mask = (1 << width) - 1
    master = int.from_bytes(rng.bytes(nbytes), "little") & mask
    deltas = [0]
    while len(deltas) < config.related_keys:
        d = int.from_bytes(rng.bytes(nbytes), "little") & mask
        if d not in deltas:
            deltas.append(d)
    return [cipher.round_keys(master ^ d) for d in deltas]


def _matrix_task(
    config: ExperimentConfig,
    setup: ExperimentSetup,
    round_keys: list[list[int]],
    index: int,
) -> Callable[[], list[int]]:
    params, cipher = setup.params, setup.cipher

    def task() -> list[int]:
        rng = _rng(config.seed, _MATRICES, index)
        ranks = []
        if config.policy == MatrixPolicy.UNIFORM_IN_T:
            generators = list(setup.space.states)
            coeffs = _coefficients(rng, setup.rows, len(generators))
            for keys in round_keys:
                images = [alpha_bits(params, cipher.encrypt_with_round_keys(keys, g)) for g in generators]
                ranks.append(rank(coeffs @ BitMatrix.from_rows(images, params.s)))
            return ranks
        plaintexts = _choose_plaintexts(config, setup, rng)
        for keys in round_keys:
            rows = [alpha_bits(params, cipher.encrypt_with_round_keys(keys, p)) for p in plaintexts]
            ranks.append(rank(BitMatrix.from_rows(rows, params.s)))
        return ranks

    return task


def baseline_sampler(config: ExperimentConfig, setup: ExperimentSetup) -> Sampler:
    """Matrices built like the experiment's, with the cipher replaced by a random permutation."""
    params = setup.params

    if config.policy == MatrixPolicy.UNIFORM_IN_T:
        count = len(setup.space.states)

        def sample_in_t(rng: np.random.Generator) -> BitMatrix:
            coeffs = _coefficients(rng, setup.rows, count)
            images = [alpha_bits(params, v) for v in _distinct_states(rng, count, params.r)]
            return coeffs @ BitMatrix.from_rows(images, params.s)

        return sample_in_t

    def sample(rng: np.random.Generator) -> BitMatrix:
        states = _distinct_states(rng, setup.rows, params.r)
        return BitMatrix.from_rows([alpha_bits(params, v) for v in states], params.s)

    return sample


async def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    if config.kind != "distinguisher":
        raise ValueError(f"unknown experiment kind {config.kind!r}")
    started = time.perf_counter()
    started_at = datetime.now(timezone.utc).isoformat()
    key_count = config.related_keys if config.key_mode == KeyMode.RELATED else 1
    total = config.n_matrices * key_count
    run = await run_store.create_run(kind=config.kind, matrices_total=total)
    run_id = run.run_id
    await run_store.update_run_state(run_id, RunState.RUNNING)
    run_dir = artifact_store.get_run_dir(run_id, config.output)

    try:
        setup = await asyncio.to_thread(build_setup, config)
        estimate = estimate_memory_mb(config, setup)
        if estimate > MEMORY_LIMIT_MB and not config.allow_large:
            raise MemoryBudgetError(
                f"estimated {estimate:.0f} MB exceeds the {MEMORY_LIMIT_MB} MB budget; set allow_large to run anyway"
            )
        logger.info(
            "run %s: %s %s, %d matrices of %d x %d, %d key(s)",
            run_id, config.cipher.value, config.embedding.value, config.n_matrices, setup.rows, setup.params.s, key_count,
        )
        round_keys = _keys(config, setup.cipher)
        tasks = [_matrix_task(config, setup, round_keys, i) for i in range(config.n_matrices)]

        done = 0

        async def progress(index: int, ranks: list[int]) -> None:
            nonlocal done
            done += len(ranks)
            await run_store.set_run_progress(run_id, done)

        per_matrix = await run_pool(tasks, config.workers, on_done=progress)
        ranks = [r for group in per_matrix for r in group]

        sampler = baseline_sampler(config, setup)
        trials = config.trials or BASELINE_FACTOR * total
        expected = await asyncio.to_thread(
            monte_carlo_ranks, sampler, trials, _subkey(config.seed, _BASELINE), config.workers
        )
        validation_hist = await asyncio.to_thread(
            monte_carlo_ranks, sampler, total, _subkey(config.seed, _VALIDATION), config.workers
        )
        observed = histogram_of(ranks)
        notes: list[str] = []
        if config.policy == MatrixPolicy.UNIFORM_IN_T:
            notes.append(
                "rows outside Im(alpha) are encrypted as sums of the encrypted admissible generators they combine"
            )
        if setup.space is None:
            notes.append("rank cap taken from the dimension formula")

        comparison = chi_square_compare(observed, expected, config.significance)
        validation = chi_square_compare(validation_hist, expected, config.significance)
        if total == 1:
            verdict = None
            notes.append("insufficient data: a single matrix supports no verdict")
            logger.warning("run %s: single matrix, no verdict", run_id)
        elif validation.distinguished:
            verdict = False
            notes.append("validation distinguished random matrices; the comparison is not trusted")
            logger.warning("run %s: validation run distinguished random matrices", run_id)
        else:
            verdict = comparison.distinguished

        report = ExperimentReport(
            config=config,
            version=__version__,
            ranks=ranks,
            rank_cap=setup.rank_cap,
            observed=observed.to_model(),
            expected=expected.to_model(),
            comparison=comparison,
            validation=validation,
            verdict=verdict,
            notes=notes,
            started_at=started_at,
            wall_seconds=time.perf_counter() - started,
        )
        path = artifact_store.write_report(run_dir, report)
        artifact_store.write_ranks_csv(run_dir, ranks, key_count)
        await run_store.set_run_result_path(run_id, path)
        await run_store.update_run_state(run_id, RunState.SUCCEEDED)
        return report
    except Exception as e:
        try:
            await run_store.set_run_result_path(run_id, artifact_store.write_error(run_dir, e))
        finally:
            await run_store.update_run_state(run_id, RunState.FAILED)
        raise


def run_distinguisher(config: ExperimentConfig) -> ExperimentReport:
    return asyncio.run(run_experiment(config))
