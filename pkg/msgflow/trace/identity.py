"""
Object and instance identity.

Objects are identified by the (host, pid, handle) triple, which is unique across
processes and hosts. Instances get string uids built from raw trace values, so the
simulator can name the exact instances the analysis will produce.
"""

from typing import NamedTuple


class ObjectKey(NamedTuple):
    host: str
    pid: int
    handle: int

    def __str__(self) -> str:
        return f"{self.host}:{self.pid}:{self.handle}"

    @classmethod
    def parse(cls, text: str) -> "ObjectKey":
        host, pid, handle = text.rsplit(":", 2)
        return cls(host, int(pid), int(handle, 0))


def publication_uid(host: str, pid: int, publisher_handle: int, source_timestamp: int) -> str:
    return f"pub:{host}:{pid}:{publisher_handle}:{source_timestamp}"


def callback_uid(host: str, pid: int, tid: int, owner_handle: int, local_start: int) -> str:
    return f"cb:{host}:{pid}:{tid}:{owner_handle}:{local_start}"
