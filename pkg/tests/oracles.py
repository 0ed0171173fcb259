"""Brute-force references used by the property tests.

Spectra are enumerated numerically (first terms of every cluster) and accumulation is judged by
counting enumerated points in shrinking balls. Spectral projections of diagonalizable matrices
come from the eigenvector sum.
"""

import numpy as np

from gzspec.spectral_sets import SpectrumModel

LEAF_TERMS = 10_000
FAMILY_COUNT = 60
FAMILY_TERMS = 60
RADII = (1e-2, 1e-3, 1e-4)
MIN_HITS = 3


def enumerate_points(S: SpectrumModel) -> np.ndarray:
    """Every isolated candidate point plus the leading generated terms of every cluster."""
    parts = [np.array([complex(p) for p in S.points], dtype=complex)]
    for c in S.clusters:
        if c.depth == 1:
            parts.append(c.numeric_parent(LEAF_TERMS))
            continue
        parts.append(c.numeric_parent(FAMILY_COUNT))
        for rel in range(FAMILY_COUNT):
            parts.append(c.numeric_family(rel, FAMILY_TERMS))
    return np.concatenate(parts)


def accumulation_cloud(S: SpectrumModel) -> np.ndarray:
    """Points that are limits of enumerated terms: depth-1 limits and the child limits of depth-2 clusters."""
    parts = [np.array([complex(c.limit) for c in S.clusters if c.depth == 1], dtype=complex)]
    for c in S.clusters:
        if c.depth == 2:
            parts.append(c.numeric_parent(LEAF_TERMS))
    return np.concatenate(parts)


def accumulates(cloud: np.ndarray, candidate: complex, scale: float = 1.0) -> bool:
    """True when every shrinking ball around the candidate still holds other cloud points."""
    distance = np.abs(cloud - candidate)
    for radius in RADII:
        hits = int(np.count_nonzero((distance > 0) & (distance < radius * scale)))
        if hits < MIN_HITS:
            return False
    return True


def in_closure(cloud: np.ndarray, candidate: complex) -> bool:
    return bool(np.any(cloud == candidate)) or accumulates(cloud, candidate)


def eigenprojection(V: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Spectral projection onto the eigenvectors V[:, mask] of a diagonalizable matrix."""
    W = np.linalg.inv(V)
    return V[:, mask] @ W[mask, :]
