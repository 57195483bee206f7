"""Signed axis permutations leaving a cell-centred cube grid invariant.

If f and h are invariant under a group G of such maps, every discrete sum
over the grid is invariant under G as well, so only one representative per
orbit needs evaluating.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .distributions import NONE, RADIAL


@lru_cache(maxsize=None)
def signed_permutations():
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = np.zeros((3, 3), dtype=np.int64)
            for row, (col, sg) in enumerate(zip(perm, signs)):
                m[row, col] = sg
            mats.append(m)
    return tuple(mats)


@lru_cache(maxsize=None)
def group(label):
    """Matrices of the invariance group named by a distribution symmetry label."""
    mats = signed_permutations()
    if label == RADIAL:
        return mats
    if label.startswith("axial"):
        i = int(label[5:])
        e = np.zeros(3, dtype=np.int64)
        e[i] = 1
        return tuple(m for m in mats if np.array_equal(m @ e, e))
    return (np.eye(3, dtype=np.int64),)


def orbit_reduce(points, label, add_inversion=False):
    """Split integer points into orbit representatives.

    Returns ``(reps, members)`` where ``members[r]`` lists the indices of all
    points in the orbit of ``reps[r]``.  With ``add_inversion`` the group is
    closed under x -> -x as well.
    """
    mats = list(group(label))
    if add_inversion:
        mats = mats + [-m for m in mats]
    pts = np.asarray(points, dtype=np.int64)
    lookup = {tuple(p): i for i, p in enumerate(pts)}
    seen = np.zeros(len(pts), dtype=bool)
    reps, members = [], []
    for i, p in enumerate(pts):
        if seen[i]:
            continue
        orbit = set()
        for m in mats:
            j = lookup.get(tuple(m @ p))
            if j is not None:
                orbit.add(j)
        idx = sorted(orbit)
        seen[idx] = True
        reps.append(i)
        members.append(idx)
    return np.asarray(reps, dtype=np.int64), members


def grid_doubled_indices(grid):
    """Nodes as odd integers 2i + 1 - N, i.e. points = (h/2) * these."""
    return 2 * grid.index_points + 1 - grid.N


__all__ = ["group", "orbit_reduce", "grid_doubled_indices", "signed_permutations", "NONE", "RADIAL"]
