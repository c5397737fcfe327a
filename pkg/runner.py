"""
Bounded async worker pool for Monte Carlo blocks

Blocks run in threads through asyncio.to_thread with at most `threads` in flight.
Results come back in block order no matter which block finishes first, so any
reduction over them is independent of the worker count.
"""
import asyncio
import logging
from typing import Callable, List, Optional, Tuple, TypeVar

import config

logger = logging.getLogger(__name__)

T = TypeVar('T')


def block_slices(n_samples: int, block_size: int = config.MC_BLOCK_SIZE) -> List[Tuple[int, int]]:
    """
    Split a sample count into (start, size) blocks

    Examples:
        >>> block_slices(10, 4)
        [(0, 4), (4, 4), (8, 2)]
    """
    if n_samples < 1 or block_size < 1:
        raise ValueError(f"need positive sample count and block size, got {n_samples}, {block_size}")
    return [(start, min(block_size, n_samples - start)) for start in range(0, n_samples, block_size)]


class BlockRunner:
    """Runs numbered blocks of work in a bounded set of threads"""

    def __init__(self, threads: Optional[int] = None):
        self.threads = max(1, threads or config.get_worker_threads())
        self._semaphore = asyncio.Semaphore(self.threads)

    async def _run_block(self, func: Callable[[int], T], index: int) -> T:
        async with self._semaphore:  # Concurrency limiting
            return await asyncio.to_thread(func, index)

    async def map(self, func: Callable[[int], T], count: int) -> List[T]:
        """Evaluate func(0..count-1); results are returned in index order"""
        logger.debug(f"Running {count} blocks on up to {self.threads} threads")
        return list(await asyncio.gather(*(self._run_block(func, i) for i in range(count))))
