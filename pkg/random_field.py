"""
Keyed-hash random field and the local-maximum rule.

Each group element a gets the value V_a = blake2b(normal form of a, key=seed)
mapped to [0, 1). Values are computed per site, never from a sequential
stream, so a configuration does not depend on evaluation order or on how
trials are split across workers.
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from configuration import BINARY, WindowConfiguration
from groups import GroupBackend, GroupElement, SymmetricSet, canonical_key, mul
from parallel import pool_map, resolve_workers, split_range

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
_SCALE = float(1 << 64)


class EmptySitesError(ValueError):
    """Raised when an event is requested over no sites."""


@dataclass(frozen=True)
class RandomField:
    seed: int
    backend: GroupBackend
    # test hook: every site gets this value, so only the tie-break decides
    constant: Optional[float] = None

    def __post_init__(self):
        if self.constant is not None and not 0.0 <= self.constant < 1.0:
            raise ValueError(f"Constant field value must lie in [0, 1), got {self.constant}")


def field_value(f: RandomField, a: GroupElement) -> float:
    if f.constant is not None:
        return f.constant
    key = (f.seed & MASK64).to_bytes(8, "big")
    digest = hashlib.blake2b(a.encode().encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "big") / _SCALE


def _rank(f: RandomField, a: GroupElement, cache: Dict[GroupElement, tuple]) -> tuple:
    rank = cache.get(a)
    if rank is None:
        rank = (field_value(f, a), canonical_key(a))
        cache[a] = rank
    return rank


def _neighbours(X: SymmetricSet) -> List[GroupElement]:
    if not X.contains_identity:
        raise ValueError("Local-maximum rule needs X to contain the identity")
    return [x for x in X.sorted() if not x.is_identity()]


def local_max_config(f: RandomField, X: SymmetricSet, W: Iterable[GroupElement]) -> WindowConfiguration:
    """u(a) = 1 iff V_a beats V_{ax} for every x in X minus e; equal values go to the larger word."""
    others = _neighbours(X)
    cache: Dict[GroupElement, tuple] = {}
    values: Dict[GroupElement, int] = {}
    ties = 0
    for a in W:
        mine = _rank(f, a, cache)
        is_max = 1
        for x in others:
            theirs = _rank(f, mul(a, x), cache)
            if theirs[0] == mine[0]:
                ties += 1
            if theirs >= mine:
                is_max = 0
                break
        values[a] = is_max
    if ties and f.constant is None:
        logger.debug("Random field seed %d: %d tied comparisons resolved by normal-form order", f.seed, ties)
    return WindowConfiguration(f.backend, values, BINARY, seed=f.seed)


def _site_hits(args: Tuple) -> int:
    """Pool worker: count trials in [lo, hi) where every site is a local maximum."""
    backend, neighbourhoods, lo, hi = args
    hits = 0
    for seed in range(lo, hi):
        f = RandomField(seed, backend)
        ok = True
        for site, nbrs in neighbourhoods:
            mine = (field_value(f, site), canonical_key(site))
            for b in nbrs:
                if (field_value(f, b), canonical_key(b)) >= mine:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            hits += 1
    return hits


def count_event_hits(
    X: SymmetricSet,
    sites: Sequence[GroupElement],
    trials: int,
    seed: int = 0,
    workers: Optional[int] = 1,
) -> int:
    """Number of seeds seed..seed+trials-1 for which u(site) = 1 at every listed site."""
    if not sites:
        raise EmptySitesError("Event needs at least one site")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    others = _neighbours(X)
    backend = sites[0].backend
    neighbourhoods = [(site, [mul(site, x) for x in others]) for site in sites]
    workers = resolve_workers(workers)
    chunks = split_range(seed, seed + trials, workers * 4)
    args_list = [(backend, neighbourhoods, lo, hi) for lo, hi in chunks]
    return sum(pool_map(_site_hits, args_list, workers))


def event_probability_estimate(
    X: SymmetricSet,
    sites: Sequence[GroupElement],
    trials: int,
    seed: int = 0,
    workers: Optional[int] = 1,
) -> float:
    """Monte Carlo estimate of Pr[u(site) = 1 for all sites] over fresh seeds."""
    return count_event_hits(X, sites, trials, seed, workers) / trials
