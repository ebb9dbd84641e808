import asyncio
import time

import pytest

from embedlab.scheduler import run_pool, snapshot_pool
from embedlab.schemas import RunState
from embedlab.store import RunStore


def test_run_lifecycle():
    async def scenario():
        store = RunStore()
        run = await store.create_run(kind="distinguisher", matrices_total=4)
        assert run.state == RunState.PENDING
        await store.update_run_state(run.run_id, RunState.RUNNING)
        await store.set_run_progress(run.run_id, 2)
        mid = await store.get_run(run.run_id)
        assert mid.progress == pytest.approx(0.5)
        # progress never moves backwards
        await store.set_run_progress(run.run_id, 1)
        assert (await store.get_run(run.run_id)).matrices_done == 2
        await store.set_run_result_path(run.run_id, "/tmp/report.json")
        done = await store.update_run_state(run.run_id, RunState.SUCCEEDED)
        assert done.progress == 1.0
        assert done.result_path == "/tmp/report.json"
        with pytest.raises(ValueError):
            await store.update_run_state(run.run_id, RunState.FAILED)
        assert len(await store.list_runs()) == 1

    asyncio.run(scenario())


def test_unknown_run_ids():
    async def scenario():
        store = RunStore()
        assert await store.get_run("missing") is None
        assert await store.update_run_state("missing", RunState.RUNNING) is None
        assert await store.set_run_progress("missing", 1) is None

    asyncio.run(scenario())


def test_progress_total_override():
    async def scenario():
        store = RunStore()
        run = await store.create_run(kind="distinguisher")
        updated = await store.set_run_progress(run.run_id, 3, matrices_total=12)
        assert updated.matrices_total == 12
        assert updated.progress == pytest.approx(0.25)

    asyncio.run(scenario())


def _sleeper(value: int, delay: float):
    def task() -> int:
        time.sleep(delay)
        return value

    return task


def test_pool_keeps_task_order():
    seen: list[int] = []

    async def on_done(index: int, result: int) -> None:
        seen.append(index)

    tasks = [_sleeper(i, 0.02 * (5 - i)) for i in range(5)]
    results = asyncio.run(run_pool(tasks, workers=5, on_done=on_done))
    assert results == [0, 1, 2, 3, 4]
    assert sorted(seen) == [0, 1, 2, 3, 4]


def test_pool_respects_worker_limit():
    peak = 0

    async def on_done(index: int, result: int) -> None:
        nonlocal peak
        peak = max(peak, result)

    def read_active() -> int:
        active = snapshot_pool()["active_workers"]
        time.sleep(0.01)
        return active

    asyncio.run(run_pool([read_active] * 8, workers=2, on_done=on_done))
    assert 1 <= peak <= 2
    assert snapshot_pool()["max_workers"] == 2
    assert snapshot_pool()["active_workers"] == 0


def test_pool_rejects_zero_workers():
    with pytest.raises(ValueError):
        asyncio.run(run_pool([_sleeper(1, 0)], workers=0))


def test_pool_propagates_errors():
    def boom() -> int:
        raise RuntimeError("task failed")

    with pytest.raises(RuntimeError):
        asyncio.run(run_pool([_sleeper(1, 0), boom], workers=2))
