"""Binary SHA-256 Merkle tree; an odd node at any level is paired with itself."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

EMPTY_ROOT = hashlib.sha256(b"").digest()


def _bytes_of(tx) -> bytes:
    return tx if isinstance(tx, (bytes, bytearray)) else tx.encode()


def leaf_hash(tx) -> bytes:
    return hashlib.sha256(_bytes_of(tx)).digest()


def node_hash(left: bytes, right: bytes) -> bytes:
    return hashlib.sha256(left + right).digest()


def _next_level(level: list[bytes]) -> list[bytes]:
    if len(level) % 2:
        level = level + [level[-1]]
    return [node_hash(level[i], level[i + 1]) for i in range(0, len(level), 2)]


def merkle_root_of_leaves(leaves: Sequence[bytes]) -> bytes:
    if not leaves:
        return EMPTY_ROOT
    level = list(leaves)
    while len(level) > 1:
        level = _next_level(level)
    return level[0]


def merkle_root(txs: Sequence) -> bytes:
    return merkle_root_of_leaves([leaf_hash(t) for t in txs])


@dataclass(frozen=True)
class InclusionProof:
    index: int
    size: int  # leaf count of the tree the proof was cut from
    siblings: tuple  # bottom-up sibling digests


def merkle_proof(txs: Sequence, index: int) -> InclusionProof:
    if not 0 <= index < len(txs):
        raise IndexError(f"leaf index {index} out of range for {len(txs)} transactions")
    level = [leaf_hash(t) for t in txs]
    i, path = index, []
    while len(level) > 1:
        if len(level) % 2:
            level = level + [level[-1]]
        path.append(level[i ^ 1])
        level = _next_level(level)
        i //= 2
    return InclusionProof(index, len(txs), tuple(path))


def verify_proof(root: bytes, tx, proof: InclusionProof) -> bool:
    """Recompute the root along the proof path.

    The path shape is fixed by ``size``: a node without a right neighbour must be
    paired with itself, so a proof cannot be replayed at a shifted index.
    """
    if not 0 <= proof.index < proof.size:
        return False
    h, i, width = leaf_hash(tx), proof.index, proof.size
    siblings = list(proof.siblings)
    while width > 1:
        if not siblings:
            return False
        sib = siblings.pop(0)
        if i == width - 1 and i % 2 == 0 and sib != h:
            return False
        h = node_hash(sib, h) if i & 1 else node_hash(h, sib)
        i //= 2
        width = (width + 1) // 2
    return not siblings and h == root
