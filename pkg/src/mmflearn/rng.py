"""
    Seed derivation for independent, reproducible random streams.

    A stream is identified by (base_seed, run, agent, purpose_label[, round]). The label is hashed
    with SHA-256 and its first 8 bytes are read as an unsigned integer; the resulting integer
    tuple is fed to numpy's SeedSequence, which does the mixing. Changing any component yields
    an unrelated stream.
"""

import hashlib

import numpy as np


def label_hash(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode('utf-8')).digest()[:8], 'little')


def stream_key(base_seed, run, agent, label, *extra):
    return [int(base_seed), int(run), int(agent), label_hash(label), *(int(x) for x in extra)]


def make_stream(base_seed, run, agent, label, *extra) -> np.random.Generator:
    key = stream_key(base_seed, run, agent, label, *extra)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))
