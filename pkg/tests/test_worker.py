import threading

import pytest

from rootshield.src.WorkerThreadInterface import WorkerThreadInterface
from rootshield.src.exceptions import EmptyWindow


def current_thread_name():
    return threading.current_thread().name


def test_inline_worker():
    with WorkerThreadInterface(threaded=False) as worker:
        assert worker.run(sum, ([1, 2, 3],)) == 6
        assert worker.run(current_thread_name) == threading.current_thread().name


def test_threaded_worker():
    with WorkerThreadInterface(threaded=True, name='table-builder') as worker:
        assert worker.run(current_thread_name) == 'table-builder'
        container = worker.run(sum, ([4, 5],), wait=False)
        assert worker.collect(container, timeout=5) == 9


@pytest.mark.parametrize('threaded', [False, True])
def test_worker_errors_reach_the_caller(threaded):
    def build():
        raise EmptyWindow('no traffic')

    with WorkerThreadInterface(threaded=threaded) as worker:
        with pytest.raises(EmptyWindow):
            worker.run(build)
        # the worker survives a failed job
        assert worker.run(len, ('abc',)) == 3
