import asyncio
import uuid
from typing import Dict, List, Optional

from .schemas import RunInfo, RunState


class RunStore:
    def __init__(self) -> None:
        self._runs: Dict[str, RunInfo] = {}
        self._lock = asyncio.Lock()

    async def create_run(self, *, kind: str, matrices_total: int = 0) -> RunInfo:
        async with self._lock:
            run_id = str(uuid.uuid4())
            run = RunInfo(
                run_id=run_id,
                kind=kind,
                state=RunState.PENDING,
                progress=0.0,
                matrices_done=0,
                matrices_total=matrices_total,
                result_path=None,
            )
            self._runs[run_id] = run
            return run

    async def get_run(self, run_id: str) -> Optional[RunInfo]:
        async with self._lock:
            return self._runs.get(run_id)

    async def list_runs(self) -> List[RunInfo]:
        async with self._lock:
            return list(self._runs.values())

    async def update_run_state(self, run_id: str, state: RunState) -> Optional[RunInfo]:
        async with self._lock:
            run = self._runs.get(run_id)
            if run is None:
                return None
            if run.state in (RunState.SUCCEEDED, RunState.FAILED) and state != run.state:
                raise ValueError(f"run {run_id} already finished as {run.state.value}")
            run.state = state
            if state == RunState.SUCCEEDED:
                run.progress = 1.0
            return run

    async def set_run_progress(self, run_id: str, matrices_done: int, matrices_total: int = 0) -> Optional[RunInfo]:
        async with self._lock:
            run = self._runs.get(run_id)
            if run is None:
                return None
            if matrices_total > 0:
                run.matrices_total = matrices_total
            run.matrices_done = max(run.matrices_done, matrices_done)
            if run.matrices_total:
                run.progress = min(1.0, run.matrices_done / run.matrices_total)
            return run

    async def set_run_result_path(self, run_id: str, path: str) -> Optional[RunInfo]:
        async with self._lock:
            run = self._runs.get(run_id)
            if run is None:
                return None
            run.result_path = path
            return run


run_store = RunStore()
