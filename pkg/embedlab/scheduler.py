import asyncio
import logging
from typing import Awaitable, Callable, Optional, Sequence, TypeVar

from .settings import MAX_WORKERS

logger = logging.getLogger(__name__)

T = TypeVar("T")

_active_workers: int = 0
_max_workers: int = MAX_WORKERS


async def _worker(
    index: int,
    task: Callable[[], T],
    gate: asyncio.Semaphore,
    on_done: Optional[Callable[[int, T], Awaitable[None]]],
) -> T:
    global _active_workers
    async with gate:
        _active_workers += 1
        try:
            result = await asyncio.to_thread(task)
        finally:
            _active_workers -= 1
    if on_done is not None:
        await on_done(index, result)
    return result


async def run_pool(
    tasks: Sequence[Callable[[], T]],
    workers: int = MAX_WORKERS,
    on_done: Optional[Callable[[int, T], Awaitable[None]]] = None,
) -> list[T]:
    """Run blocking ``tasks`` in threads, at most ``workers`` at a time.

    Results come back in task order whatever the completion order.
    """
    global _max_workers
    if workers < 1:
        raise ValueError("workers must be at least 1")
    # one semaphore per call: each asyncio.run gets its own loop
    gate = asyncio.Semaphore(workers)
    _max_workers = workers
    logger.debug("pool: %d tasks on %d workers", len(tasks), workers)
    return list(await asyncio.gather(*(_worker(i, t, gate, on_done) for i, t in enumerate(tasks))))


def snapshot_pool() -> dict:
    return {
        "active_workers": _active_workers,
        "max_workers": _max_workers,
    }
