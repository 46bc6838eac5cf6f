"""Counter-based random streams keyed by ``(seed, *key, role)``.

Each stream is a Philox generator seeded from a ``SeedSequence`` whose
spawn key carries the caller's key and a fixed role code, so a trial
draws the same numbers whether it runs serially or on a worker.
"""

import numpy as np

ROLES = {"channel": 0, "symbols": 1, "noise": 2, "check": 3, "misc": 4}


def stream(seed: int, *key: int, role: str = "misc") -> np.random.Generator:
    if role not in ROLES:
        raise KeyError(f"unknown stream role '{role}'")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key) + (ROLES[role],))
    return np.random.Generator(np.random.Philox(ss))
