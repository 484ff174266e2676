import functools
import logging
import sys
import time
import traceback

from rich import print as pprint

from python.errors import CornerUnfoldError

logger = logging.getLogger(__name__)


class TimeCounter:
    def __init__(self):
        self.start_tic = 0
        self.start_real = 0

    def started(self):
        return self.start_tic != 0

    def start(self):
        self.start_tic = time.perf_counter()
        self.start_real = time.time()

    def real_time(self):
        return time.time() - self.start_real

    def time(self):
        return time.perf_counter() - self.start_tic

    def time_per_task(self, ntasks):
        elapsed = self.time()
        return elapsed, elapsed / max(ntasks, 1)


def print_stats(func):
    """
    Time a command and map library errors to exit codes:
    2 configuration, 3 numeric failure, 4 partial results, 1 anything else.
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        counter = TimeCounter()
        counter.start()

        ntasks = 0
        try:
            ntasks += func(*args, **kwargs) or 0
        except CornerUnfoldError as err:
            pprint(f'[bold red]{type(err).__name__}[/]: {err}')
            sys.exit(err.exit_code)
        except Exception as inst:
            print(str(inst))
            print('Unexpected error:', sys.exc_info()[0])
            traceback.print_exc()
            sys.exit(1)

        if counter.started():
            elapsed, per_task = counter.time_per_task(ntasks)
            pprint('\n===========================================')
            pprint(f'{func.__name__}: {ntasks} tasks in {elapsed:.2f} s ({per_task:.3f} s/task)')

    return wrapper
