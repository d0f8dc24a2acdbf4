"""
Worker pool helpers for PrimeLab
Order-preserving maps so merged results never depend on worker count
"""

import logging
from concurrent.futures import ProcessPoolExecutor

logger = logging.getLogger('PrimeLab.Parallel')


def chunked(items, size):
    """Split a sequence into consecutive chunks of at most `size` items"""
    size = max(1, int(size))
    return [items[i:i + size] for i in range(0, len(items), size)]


def ordered_map(func, chunks, workers=1):
    """Apply `func` to every chunk and return results in chunk order

    `func` must be a module-level function so it can be shipped to a worker
    process. With one worker (or one chunk) everything runs in-process.
    """
    chunks = list(chunks)
    if workers is None or workers <= 1 or len(chunks) <= 1:
        return [func(chunk) for chunk in chunks]

    workers = min(int(workers), len(chunks))
    logger.debug(f"Dispatching {len(chunks)} chunks to {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, chunks))


def ordered_imap(func, chunks, workers=1):
    """Like ordered_map, but yields each result in chunk order as it is ready

    Callers that merge results into a preallocated buffer hold only the
    results not yet consumed.
    """
    chunks = list(chunks)
    if workers is None or workers <= 1 or len(chunks) <= 1:
        for chunk in chunks:
            yield func(chunk)
        return

    workers = min(int(workers), len(chunks))
    logger.debug(f"Streaming {len(chunks)} chunks through {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(func, chunks)
