"""
Parallel execution of independent pure tasks.

Tasks run in a process pool when more than one worker is requested and in
the calling process otherwise.  Results are merged by task index, so the
output never depends on the completion order or on the worker count.
"""
from __future__ import annotations

import logging
import os
from concurrent import futures
from dataclasses import dataclass

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TaskStatus:
    index: int
    name: str
    ok: bool
    message: str = ''

    def to_json(self):
        return {'index': self.index, 'name': self.name, 'status': 'ok' if self.ok else 'failed',
                'message': self.message}


def default_workers():
    return os.cpu_count() or 1


def run_tasks(work, task_args, workers=1, names=None):
    """
    Run ``work(*args)`` for every entry of ``task_args``.

    Returns ``(results, statuses)`` in task order; failed tasks leave ``None``
    in ``results`` and carry the exception message in their status.
    """
    task_args = list(task_args)
    names = list(names) if names is not None else [f'task_{i}' for i in range(len(task_args))]
    results = [None] * len(task_args)
    statuses = [None] * len(task_args)
    workers = max(1, int(workers))

    if workers == 1 or len(task_args) <= 1:
        for index, args in enumerate(task_args):
            try:
                results[index] = work(*args)
                statuses[index] = TaskStatus(index, names[index], True)
            except Exception as err:
                logger.warning('task %s failed: %s', names[index], err)
                statuses[index] = TaskStatus(index, names[index], False, f'{type(err).__name__}: {err}')
        return results, statuses

    logger.debug('running %d tasks on %d workers', len(task_args), workers)
    with futures.ProcessPoolExecutor(max_workers=workers) as executor:
        pending = {executor.submit(work, *args): index for index, args in enumerate(task_args)}
        try:
            for future in futures.as_completed(pending):
                index = pending[future]
                try:
                    results[index] = future.result()
                    statuses[index] = TaskStatus(index, names[index], True)
                except Exception as err:
                    logger.warning('task %s failed: %s', names[index], err)
                    statuses[index] = TaskStatus(index, names[index], False, f'{type(err).__name__}: {err}')
        except KeyboardInterrupt:
            for future in pending:
                future.cancel()
            raise
    return results, statuses
