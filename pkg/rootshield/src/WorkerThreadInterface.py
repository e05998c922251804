"""
This class abstracts away threaded communication between the replay loop and the learners.
The replay loop (the tick thread) hands a method to the worker thread and gets a container back,
which is set (the payload) with the return of the triggered method once the worker is done.
Waiting for that container at a tick boundary enables calling methods in another thread as if they
lived in the same thread, and keeps results independent of how the worker got scheduled.
"""

import logging
import queue
import threading

from .exceptions import RootShieldError
from .utils import Container, wait_until


logger = logging.getLogger(__name__)


class WorkerThreadInterface:
    """lives in the tick thread and triggers method executions in the worker thread"""

    def __init__(self, threaded: bool = True, name: str = 'rootshield-worker'):
        self.threaded = threaded
        self._jobs = queue.Queue()
        self._thread = None

        if threaded:
            self._thread = threading.Thread(target=self._work, name=name, daemon=True)
            self._thread.start()

    # run in worker
    def run(self, target_method, args: tuple = (), wait=True):
        """
        Runs some method in the worker thread.
        `wait` causes the tick thread to wait until the execution finished,
        otherwise the container is returned and can be collected later.
        """

        resp_container = Container()

        if not self.threaded:
            self.run_in_worker(target_method, tuple(args), resp_container)
        else:
            self._jobs.put((target_method, tuple(args), resp_container))

        if wait:
            return self.collect(resp_container)

        return resp_container

    def collect(self, resp_container: Container, timeout: float = None):
        """blocks until the job behind the container finished and returns its result"""
        if not resp_container.is_set():
            wait_until(resp_container.is_set, timeout=timeout)
        return resp_container.get()

    def run_in_worker(self, target_method, args: tuple, resp_container: Container):
        try:
            ret = target_method(*args)
        except Exception as e:
            name = getattr(target_method, '__name__', target_method)
            if isinstance(e, RootShieldError):
                logger.debug('worker job %s raised %s', name, e)
            else:
                logger.error('worker job %s failed: %s', name, e)
            resp_container.fail(e)
        else:
            resp_container.set(ret)

    def _work(self):
        while True:
            job = self._jobs.get()
            if job is None:
                break
            self.run_in_worker(*job)

    def shutdown(self):
        if self._thread is not None:
            self._jobs.put(None)
            self._thread.join()
            self._thread = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()
