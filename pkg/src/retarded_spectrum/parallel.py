"""Chunked fan-out of mu sweeps across worker threads."""

from __future__ import annotations

import asyncio
from collections.abc import Callable

import numpy as np
import structlog

from retarded_spectrum.expr import FloatArray

log = structlog.get_logger()

CHUNK_SIZE = 256

ChunkFn = Callable[[FloatArray], FloatArray]


async def _gather_chunks(fn: ChunkFn, chunks: list[FloatArray], threads: int) -> list[FloatArray]:
    semaphore = asyncio.Semaphore(threads)

    async def run(chunk: FloatArray) -> FloatArray:
        async with semaphore:
            return await asyncio.to_thread(fn, chunk)

    # return_exceptions lets every chunk finish, so the error raised is the first one in input
    # order rather than whichever thread failed first
    results = await asyncio.gather(*(run(c) for c in chunks), return_exceptions=True)
    outputs: list[FloatArray] = []
    for index, result in enumerate(results):
        if isinstance(result, BaseException):
            log.error("chunk_failed", chunk=index, chunks=len(chunks), error=str(result))
            raise result
        outputs.append(result)
    return outputs


def map_chunks(fn: ChunkFn, values: FloatArray, threads: int = 1, chunk_size: int = CHUNK_SIZE) -> FloatArray:
    """Apply ``fn`` to consecutive chunks of ``values`` and concatenate in input order.

    With ``threads > 1`` chunks run concurrently on worker threads, at most ``threads`` at a time.
    The first failing chunk (in input order) re-raises its exception.
    """
    flat = np.asarray(values, dtype=np.float64).ravel()
    if flat.size == 0:
        return np.empty(0, dtype=np.float64)
    chunks = [flat[i : i + chunk_size] for i in range(0, flat.size, chunk_size)]
    # each chunk is one vectorised march; numpy drops the GIL inside its array loops, which is
    # where threads overlap
    if threads <= 1 or len(chunks) == 1:
        return np.concatenate([fn(c) for c in chunks])
    return np.concatenate(asyncio.run(_gather_chunks(fn, chunks, threads)))
