"""Optional process-level parallelism for independent shots."""
import logging
import os
import pickle
from concurrent.futures import ProcessPoolExecutor

logger = logging.getLogger(__name__)

ENV_VAR = "BILLIARD_BVP_THREADS"
MIN_PARALLEL_ITEMS = 64


def worker_count() -> int:
    """Workers allowed by ``BILLIARD_BVP_THREADS`` (0 or unset means all CPUs)."""
    raw = os.environ.get(ENV_VAR, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", ENV_VAR, raw)
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def parallel_map(fn, items):
    """Order-preserving map; falls back to a plain loop when parallelism cannot help."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1 or len(items) < MIN_PARALLEL_ITEMS:
        return [fn(x) for x in items]
    try:
        pickle.dumps(fn)
    except Exception:
        logger.debug("work function is not picklable, running serially")
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))
