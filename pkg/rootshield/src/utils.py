import json
from typing import Iterable, List

from waiting import wait


class Container:
    """used for threading; accessed from multiple threads"""

    def __init__(self):
        self.payload = None
        self.error: BaseException = None
        self.has_been_set = False

    def set(self, val):
        self.payload = val
        self.has_been_set = True

    def fail(self, err: BaseException):
        self.error = err
        self.has_been_set = True

    def is_set(self):
        return self.has_been_set

    def get(self):
        """returns the payload, re-raising an error that occurred while producing it"""
        if self.error is not None:
            raise self.error
        return self.payload


def wait_until(func, timeout: float = None):
    return wait(func, sleep_seconds=0.001, timeout_seconds=timeout)


def ip_to_int(addr: str) -> int:
    """Converts a dotted quad that has already been validated into its 32 bit integer."""
    a, b, c, d = addr.split('.')
    return (int(a) << 24) | (int(b) << 16) | (int(c) << 8) | int(d)


def int_to_ip(i: int) -> str:
    return f'{(i >> 24) & 255}.{(i >> 16) & 255}.{(i >> 8) & 255}.{i & 255}'


def sort_addresses(addrs: Iterable[str]) -> List[str]:
    """numerical order, so rendered rule files do not depend on hash seeds"""
    return sorted(addrs, key=ip_to_int)


def dump_json(data, filepath: str):
    with open(filepath, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')


def load_json(filepath: str):
    with open(filepath, 'r', encoding='utf-8') as f:
        return json.load(f)
