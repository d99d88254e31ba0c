"""Bounded hand-off queue between pipeline stages."""

from __future__ import annotations

import threading
from collections import deque


class Closed(Exception):
    """Raised by ``get`` once the queue is closed and drained."""


class FrameQueue:
    """Bounded FIFO. When full, ``put`` either evicts the oldest item
    (``drop_oldest=True``, the real-time policy for live feeds) or blocks.

    Never holds more than ``capacity`` items.
    """

    def __init__(self, capacity: int = 8, drop_oldest: bool = True):
        if capacity < 1:
            raise ValueError("queue capacity must be >= 1")
        self.capacity = capacity
        self.drop_oldest = drop_oldest
        self.dropped = 0
        self.high_water = 0
        self._items: deque = deque()
        self._closed = False
        self._cond = threading.Condition()

    def put(self, item) -> bool:
        """Enqueue ``item``; returns False if an older item was evicted for it."""
        with self._cond:
            if self._closed:
                raise Closed()
            evicted = False
            while len(self._items) >= self.capacity:
                if self.drop_oldest:
                    self._items.popleft()
                    self.dropped += 1
                    evicted = True
                else:
                    self._cond.wait()
                    if self._closed:
                        raise Closed()
            self._items.append(item)
            self.high_water = max(self.high_water, len(self._items))
            self._cond.notify_all()
            return not evicted

    def get(self, timeout: float | None = None):
        with self._cond:
            if not self._cond.wait_for(lambda: self._items or self._closed, timeout):
                raise TimeoutError()
            if self._items:
                item = self._items.popleft()
                self._cond.notify_all()
                return item
            raise Closed()

    def close(self) -> None:
        """Stop accepting items; consumers drain what is left, then see ``Closed``."""
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def __len__(self):
        with self._cond:
            return len(self._items)
