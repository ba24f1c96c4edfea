import hashlib


def derive_seed(seed: int, stage: str, index: int = 0) -> int:
    """Sub-seed for one stage (and fold) of a run, stable across processes and platforms."""
    digest = hashlib.blake2b(f"{seed}:{stage}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1
