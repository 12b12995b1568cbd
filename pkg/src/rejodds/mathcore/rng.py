"""Counter-based random streams for reproducible Monte Carlo.

Runs are grouped into fixed-size blocks.  Block ``k`` of a simulation draws
from a Philox generator keyed by ``(master_seed, stream_id, k, *subkeys)``, so
every run's randomness depends only on its index and never on how blocks are
spread over workers.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

BLOCK_SIZE = 1 << 16
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngContract:
    master_seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or not 0 <= v <= _U64:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {v!r}")

    def generator(self, block, *subkeys):
        """Generator for one block (and optional sub-stream such as a stage)."""
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=(int(self.stream_id), int(block), *map(int, subkeys)),
        )
        return np.random.Generator(np.random.Philox(seq))


def blocks(n_runs, block_size=BLOCK_SIZE):
    """Split ``n_runs`` into ``(block_index, n_in_block)`` pairs."""
    if n_runs < 0:
        raise DomainError("n_runs must be non-negative")
    full, rest = divmod(n_runs, block_size)
    out = [(k, block_size) for k in range(full)]
    if rest:
        out.append((full, rest))
    return out


def map_blocks(fn, n_runs, workers=1, block_size=BLOCK_SIZE):
    """Apply ``fn(block_index, n_in_block)`` to every block, in block order."""
    work = blocks(n_runs, block_size)
    if workers <= 1 or len(work) <= 1:
        return [fn(k, n) for k, n in work]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda kn: fn(*kn), work))
