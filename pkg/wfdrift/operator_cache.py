import logging
import threading
from typing import Dict, Tuple

from wfdrift.config import Config
from wfdrift.grid import Grid, build_grid
from wfdrift.schemes import SchemeKind, SchemeOperator, assemble_operator

logger = logging.getLogger(__name__)

# insertion-ordered; the oldest entry is evicted once a cache is full
store: Dict[Tuple[SchemeKind, int, float], SchemeOperator] = {}
grids: Dict[int, Grid] = {}
_lock = threading.Lock()


def _evict(cache: dict, limit: int):
    while len(cache) > max(limit, 1):
        key = next(iter(cache))
        del cache[key]
        logger.debug("Evicted cached entry %s", key)


def get_grid(M: int) -> Grid:
    with _lock:
        if M not in grids:
            grids[M] = build_grid(M)
            _evict(grids, Config.Cache.MAX_GRIDS)
        return grids[M]


def get_operator(scheme: SchemeKind, M: int, tau: float) -> SchemeOperator:
    key = (SchemeKind(scheme), int(M), float(tau))
    grid = get_grid(M)
    with _lock:
        if key in store:
            logger.debug("Reusing %s operator for M=%d tau=%g", key[0].value, key[1], key[2])
            return store[key]
        operator = store[key] = assemble_operator(key[0], grid, key[2])
        _evict(store, Config.Cache.MAX_OPERATORS)
        return operator


def clear():
    with _lock:
        store.clear()
        grids.clear()
