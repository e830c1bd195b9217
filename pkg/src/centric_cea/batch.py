"""Replicate fan-out.  Results always come back in submission order."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def map_ordered(fn, arg_tuples, jobs: int = 1):
    arg_tuples = list(arg_tuples)
    if jobs <= 1 or len(arg_tuples) <= 1:
        return [fn(*args) for args in arg_tuples]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, *args) for args in arg_tuples]
        return [f.result() for f in futures]
