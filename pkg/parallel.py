"""Worker-pool helpers shared by the Monte Carlo estimators and sweeps."""

from multiprocessing import Pool, cpu_count
from typing import Callable, List, Optional, Sequence, Tuple


def resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        return max(1, cpu_count() - 1)  # Leave one core free
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def split_range(start: int, stop: int, parts: int) -> List[Tuple[int, int]]:
    """Split [start, stop) into at most `parts` contiguous half-open chunks."""
    total = stop - start
    if total <= 0:
        return []
    parts = max(1, min(parts, total))
    size, extra = divmod(total, parts)
    chunks = []
    lo = start
    for i in range(parts):
        hi = lo + size + (1 if i < extra else 0)
        chunks.append((lo, hi))
        lo = hi
    return chunks


def pool_map(func: Callable, args_list: Sequence, workers: int = 1) -> list:
    """Ordered map; results never depend on the number of workers."""
    if workers <= 1 or len(args_list) <= 1:
        return [func(args) for args in args_list]
    with Pool(processes=min(workers, len(args_list))) as pool:
        return pool.map(func, args_list)
