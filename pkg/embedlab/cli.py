import argparse
import logging
import sys
import tomllib
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError

from .embed import build_D, build_H, random_states
from .executor import MemoryBudgetError, embedding_for, run_distinguisher
from .file_store import artifact_store, export_matrix
from .rankstats import rank_table
from .schemas import CipherName, EmbeddingKind, ExperimentConfig, KeyMode, MatrixPolicy, Suite
from .verify import run_verifications

logger = logging.getLogger(__name__)

# CLI flag -> ExperimentConfig field, for flags that override the TOML file
_CONFIG_FLAGS = (
    "kind", "cipher", "m", "b", "rounds", "embedding", "n_matrices", "matrix_rows", "policy",
    "rank_target", "key_mode", "related_keys", "trials", "seed", "significance", "workers",
    "allow_large", "output",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embedlab", description="Space embeddings of translation-based ciphers.")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="Recompute the published values of a suite")
    verify.add_argument("--suite", default=Suite.ALL.value, choices=[s.value for s in Suite])
    verify.add_argument("--include-long", action="store_true", help="Also run the AES alpha dimension")
    verify.add_argument("--output", default=None, help="Write report.json under this directory")

    dist = sub.add_parser("distinguish", help="Run the rank distinguisher")
    dist.add_argument("config", nargs="?", default=None, help="TOML file with ExperimentConfig keys")
    dist.add_argument("--kind")
    dist.add_argument("--cipher", choices=[c.value for c in CipherName])
    dist.add_argument("--m", type=int)
    dist.add_argument("--b", type=int)
    dist.add_argument("--rounds", type=int)
    dist.add_argument("--embedding", choices=[e.value for e in EmbeddingKind])
    dist.add_argument("--n-matrices", dest="n_matrices", type=int)
    dist.add_argument("--matrix-rows", dest="matrix_rows", type=int)
    dist.add_argument("--policy", choices=[p.value for p in MatrixPolicy])
    dist.add_argument("--rank-target", dest="rank_target", type=int)
    dist.add_argument("--key-mode", dest="key_mode", choices=[k.value for k in KeyMode])
    dist.add_argument("--related-keys", dest="related_keys", type=int)
    dist.add_argument("--trials", type=int)
    dist.add_argument("--seed", type=int)
    dist.add_argument("--significance", type=float)
    dist.add_argument("--workers", type=int)
    dist.add_argument("--allow-large", dest="allow_large", action="store_true", default=None)
    dist.add_argument("--output")

    table = sub.add_parser("rank-dist", help="Formula, exhaustive and Monte Carlo rank counts")
    table.add_argument("--m", type=int, default=2)
    table.add_argument("--b", type=int, default=2)
    table.add_argument("--rows", type=int, default=3)
    table.add_argument("--trials", type=int, default=10000)
    table.add_argument("--seed", type=int, default=0)

    export = sub.add_parser("export-matrix", help="Write H (eps) or D (alpha) for random plaintexts")
    export.add_argument("path")
    export.add_argument("--cipher", default=CipherName.REDUCED.value, choices=[c.value for c in CipherName])
    export.add_argument("--embedding", default=EmbeddingKind.EPS.value, choices=[e.value for e in EmbeddingKind])
    export.add_argument("--m", type=int, default=4)
    export.add_argument("--b", type=int, default=4)
    export.add_argument("--count", type=int, default=16)
    export.add_argument("--seed", type=int, default=0)
    return parser


def load_config(path: Optional[str], overrides: dict) -> ExperimentConfig:
    data: dict = {}
    if path is not None:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**data)


def _cmd_verify(args: argparse.Namespace) -> int:
    report = run_verifications(Suite(args.suite), include_long=args.include_long)
    for check in report.checks:
        mark = "PASS" if check.passed else "FAIL"
        print(f"[{mark}] {check.suite.value}: {check.claim} (expected {check.expected}, computed {check.computed})")
    if args.output:
        run_dir = artifact_store.get_run_dir(f"verify-{report.suite.value}", args.output)
        print(f"report: {artifact_store.write_report(run_dir, report)}")
    print(f"{sum(c.passed for c in report.checks)}/{len(report.checks)} checks passed")
    return 0 if report.passed else 1


def _cmd_distinguish(args: argparse.Namespace) -> int:
    config = load_config(args.config, {k: getattr(args, k) for k in _CONFIG_FLAGS})
    report = run_distinguisher(config)
    print(f"matrices ranked: {len(report.ranks)} (rank cap {report.rank_cap})")
    if report.comparison is not None:
        print(f"comparison: chi2={report.comparison.statistic:.4f} p={report.comparison.p_value:.4g}")
    if report.validation is not None:
        print(f"validation: chi2={report.validation.statistic:.4f} p={report.validation.p_value:.4g}")
    print(f"verdict: {'none' if report.verdict is None else 'distinguished' if report.verdict else 'not distinguished'}")
    for note in report.notes:
        print(f"note: {note}")
    return 0


def _cmd_rank_dist(args: argparse.Namespace) -> int:
    _, params = embedding_for(CipherName.REDUCED, EmbeddingKind.EPS, args.m, args.b)
    rows = rank_table(params, args.rows, args.trials, args.seed)
    print(f"{'rank':>4}  {'formula':>14}  {'exhaustive':>10}  {'monte-carlo':>11}")
    for row in rows:
        formula = "-" if row.formula is None else f"{float(row.formula):.1f}"
        exhaustive = "-" if row.exhaustive is None else str(row.exhaustive)
        print(f"{row.rank:>4}  {formula:>14}  {exhaustive:>10}  {row.monte_carlo:>11}")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    _, params = embedding_for(CipherName(args.cipher), EmbeddingKind(args.embedding), args.m, args.b)
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    states = random_states(params, args.count, rng)
    matrix = build_H(params, states) if params.t == 1 else build_D(params, states)
    export_matrix(args.path, matrix)
    print(f"wrote {matrix.rows}x{matrix.cols} matrix to {args.path}")
    return 0


_COMMANDS = {
    "verify": _cmd_verify,
    "distinguish": _cmd_distinguish,
    "rank-dist": _cmd_rank_dist,
    "export-matrix": _cmd_export,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, ValueError, MemoryBudgetError, OSError, tomllib.TOMLDecodeError) as err:
        print(f"[error] {err}", file=sys.stderr)
        return 2
    except ArithmeticError as err:
        # a self-check inside a computation failed (matrix order, admissible dimension)
        print(f"[error] {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
