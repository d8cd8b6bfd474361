"""Deterministic seed derivation for task trees."""

import hashlib
import json

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(master_seed: int, task_path) -> int:
    """64-bit stream seed for the task at ``task_path`` below ``master_seed``.

    Keyed BLAKE2b over a canonical encoding of the path, so the result depends
    only on (master, path) and never on scheduling.
    """
    key = (int(master_seed) & SEED_MASK).to_bytes(8, "little")
    msg = json.dumps(list(task_path), separators=(",", ":")).encode()
    return int.from_bytes(hashlib.blake2b(msg, key=key, digest_size=8).digest(), "little")


def task_rng(master_seed: int, task_path) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, task_path))
