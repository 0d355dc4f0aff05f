import logging
import threading
from typing import Any, Callable, Dict, Hashable, Optional

logger = logging.getLogger(__name__)

class MemoRepository:
    """
    Handles memoized results for a single namespace.

    The store behaves as an idempotent map: concurrent duplicate computation
    is allowed and the last write wins, since equal keys always carry equal values.
    """
    def __init__(self, namespace: str):
        self.namespace = namespace
        self._store: Dict[Hashable, Any] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable) -> Optional[Any]:
        """
        Returns the stored value for key, or None.
        """
        with self._lock:
            return self._store.get(key)

    def put(self, key: Hashable, value: Any) -> Any:
        """
        Stores a value and returns it.
        """
        with self._lock:
            self._store[key] = value
        return value

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        """
        Returns the cached value for key, computing and storing it on a miss.
        The computation runs outside the lock so recursive lookups are safe.
        """
        with self._lock:
            if key in self._store:
                self.hits += 1
                return self._store[key]
            self.misses += 1
        value = compute()
        logger.debug("%s: stored %r", self.namespace, key)
        return self.put(key, value)

    def clear(self) -> None:
        with self._lock:
            self._store.clear()
            self.hits = 0
            self.misses = 0

    def __contains__(self, key: Hashable) -> bool:
        with self._lock:
            return key in self._store

    def __len__(self) -> int:
        with self._lock:
            return len(self._store)
