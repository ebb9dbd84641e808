import pytest

from embedlab import verify
from embedlab.embed import EmbeddingParams, admissible_dim
from embedlab.schemas import Suite
from embedlab.verify import run_verifications


@pytest.mark.parametrize(
    "suite",
    [
        Suite.ORDERS,
        Suite.COUNTEREXAMPLES,
        Suite.RANKSTATS,
        Suite.EXTEND,
        Suite.BOUNDS,
        pytest.param(Suite.DIMS, marks=pytest.mark.slow),
    ],
    ids=lambda s: s.value,
)
def test_suite_passes(suite):
    report = run_verifications(suite)
    assert report.checks
    failed = [c.claim for c in report.checks if not c.passed]
    assert not failed
    assert report.passed
    assert all(c.suite == suite for c in report.checks)


def test_suite_names_accepted_as_strings():
    report = run_verifications("bounds")
    assert report.suite == Suite.BOUNDS


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_verifications("everything")


@pytest.mark.slow
def test_all_suites_with_long_checks():
    report = run_verifications(Suite.ALL, include_long=True)
    assert report.passed
    assert any("AES alpha" in c.claim for c in report.checks)


def test_raising_claim_becomes_failed_check(monkeypatch):
    def broken(matrix, cap=None):
        raise ArithmeticError("order exceeds cap")

    monkeypatch.setattr(verify, "matrix_order", broken)
    report = run_verifications(Suite.ORDERS)
    assert not report.passed
    assert len(report.checks) == 5
    assert all(c.computed.startswith("ArithmeticError") for c in report.checks)


def test_raising_suite_setup_is_reported(monkeypatch):
    def broken():
        raise ArithmeticError("no admissible relation")

    monkeypatch.setattr(verify, "verify_mc_counterexample", broken)
    report = run_verifications(Suite.COUNTEREXAMPLES)
    assert not report.passed
    [setup] = report.checks
    assert setup.claim == "counterexamples suite setup"
    assert setup.suite == Suite.COUNTEREXAMPLES
    assert setup.computed == "ArithmeticError: no admissible relation"


def test_shiftrows_lift_claim():
    assert verify.shiftrows_lift_holds(samples=5, seed=1)


def test_long_dimension_stays_out_of_cache(gf16):
    before = admissible_dim.cache_info()
    assert verify._uncached_dim(EmbeddingParams(gf16, 3)) == 46
    after = admissible_dim.cache_info()
    assert after.currsize == before.currsize
    assert after.misses == before.misses
