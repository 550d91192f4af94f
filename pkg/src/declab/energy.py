"""Additive energy of finite point sets.

E2(P) counts ordered quadruples (p1, p2, p3, p4) with p1 + p2 = p3 + p4,
equality meaning ||(p1+p2) - (p3+p4)||_inf <= tolerance.  Counting sorts the
|P|^2 pairwise sums under a quantized key (cell width = tolerance) and also
matches the 3^n - 1 neighboring cells, so no true match within the tolerance
is ever missed; candidate pairs from neighboring cells are verified against
the actual coordinates before being counted.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .expsum import SpecError, cone_points
from .moments import ExponentFit, fit_growth_exponent

_HASH_MULTS = (0x9E3779B97F4A7C15, 0xC2B2AE3D27D4EB4F, 0x165667B19E3779F9,
               0x27D4EB2F165667C5, 0x85EBCA77C2B2AE63, 0xFF51AFD7ED558CCD)


@dataclass(frozen=True)
class EnergyCount:
    count: int
    set_size: int
    tolerance: float
    near_tolerance_pairs: int = 0  # pair sums with gap in (tol, 2*tol]: rerun tighter

    def __post_init__(self) -> None:
        diag = 2 * self.set_size**2 - self.set_size
        if self.count < diag:
            raise SpecError(
                f"energy {self.count} below the diagonal floor {diag}; counting bug"
            )


def additive_energy(
    points: np.ndarray,
    tolerance: float = 1e-9,
    *,
    memory_cap_bytes: int = 4 << 30,
) -> EnergyCount:
    """Ordered-quadruple additive energy of a set of distinct points.

    Exact for exact-arithmetic inputs with tolerance 0.  When the pair-sum
    table would exceed the memory cap, counting switches to a streamed
    two-pass mode sharded on the first coordinate's cells.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    k, dim = pts.shape
    if k == 0:
        raise SpecError("empty point set")
    if tolerance < 0:
        raise SpecError("tolerance must be nonnegative")
    if dim > len(_HASH_MULTS):
        raise SpecError(f"dimension {dim} not supported")
    view = pts.copy()
    view = view[np.lexsort(tuple(view[:, c] for c in range(dim - 1, -1, -1)))]
    if k > 1 and np.any(np.all(view[1:] == view[:-1], axis=1)):
        raise SpecError("points must be pairwise distinct")

    bytes_needed = k * k * dim * 8 * 3
    if bytes_needed <= memory_cap_bytes:
        cells, sums = _pair_sum_cells(pts, tolerance, None)
        count, near = _count_cell_matches(cells, sums, tolerance)
    else:
        count, near = _streamed_count(pts, tolerance, memory_cap_bytes)
    return EnergyCount(count=int(count), set_size=k, tolerance=tolerance,
                       near_tolerance_pairs=int(near))


def _quantize(sums: np.ndarray, tolerance: float) -> np.ndarray:
    if tolerance == 0.0:
        # exact mode: raw float bit patterns (sums compare equal iff bits do)
        return np.ascontiguousarray(sums).view(np.int64).reshape(sums.shape)
    return np.floor(sums / tolerance).astype(np.int64)


def _pair_sum_cells(pts, tolerance, c0_range):
    """All pairwise sums (optionally filtered by first-coordinate cell range,
    keeping one ghost cell above the range), quantized to cells.

    Built in row blocks so a shard never materializes the full pair table.
    """
    k, dim = pts.shape
    chunk = max(1, (1 << 23) // max(k, 1))
    cell_parts = []
    sum_parts = []
    for i0 in range(0, k, chunk):
        blk = (pts[i0 : i0 + chunk, None, :] + pts[None, :, :]).reshape(-1, dim)
        cells = _quantize(blk, tolerance)
        if c0_range is not None:
            lo, hi = c0_range  # own cells in [lo, hi); cell hi kept as a ghost
            keep = (cells[:, 0] >= lo) & (cells[:, 0] <= hi)
            cells = cells[keep]
            blk = blk[keep]
        if cells.shape[0]:
            cell_parts.append(cells)
            sum_parts.append(blk)
    if not cell_parts:
        return np.empty((0, dim), dtype=np.int64), np.empty((0, dim))
    return np.concatenate(cell_parts), np.concatenate(sum_parts)


def _hash_rows(cells: np.ndarray) -> np.ndarray:
    h = np.zeros(cells.shape[0], dtype=np.uint64)
    for c in range(cells.shape[1]):
        h ^= cells[:, c].astype(np.uint64) * np.uint64(_HASH_MULTS[c])
    return h


def _count_cell_matches(cells, sums, tolerance, own_range=None):
    """Ordered within-tolerance pairs among rows: same-cell runs plus verified
    neighbor-cell candidates.

    own_range: in sharded mode a shard owns first cells in [lo, hi); a cross
    pair is counted by the shard owning its smaller first cell, so nothing is
    double counted across shards.
    """
    if cells.shape[0] == 0:
        return 0, 0
    dim = cells.shape[1]
    keys = _hash_rows(cells)
    order = np.lexsort(tuple(cells[:, c] for c in range(dim - 1, -1, -1)) + (keys,))
    keys = keys[order]
    cells = cells[order]
    sums = sums[order]

    boundary = np.empty(cells.shape[0], dtype=bool)
    boundary[0] = True
    np.any(cells[1:] != cells[:-1], axis=1, out=boundary[1:])
    starts = np.flatnonzero(boundary)
    lengths = np.diff(np.append(starts, cells.shape[0]))
    run_keys = keys[starts]
    run_cells = cells[starts]

    def owned(c0: np.ndarray) -> np.ndarray:
        if own_range is None:
            return np.ones(np.shape(c0), dtype=bool)
        lo, hi = own_range
        return (c0 >= lo) & (c0 < hi)

    # same-cell pairs differ by < tolerance per coordinate by construction
    count = int(np.sum((lengths.astype(np.int64) ** 2)[owned(run_cells[:, 0])]))

    near = 0
    if tolerance > 0.0:
        offsets = [o for o in itertools.product((-1, 0, 1), repeat=dim) if any(o)]
        half = [o for o in offsets if o > tuple([0] * dim)]
        for off in half:
            target = run_cells + np.asarray(off, dtype=np.int64)
            pairs = _find_rows(run_keys, run_cells, target)
            for ia, ib in pairs:
                c_min = min(int(run_cells[ia, 0]), int(run_cells[ib, 0]))
                if not owned(c_min):
                    continue
                a0, a1 = starts[ia], starts[ia] + lengths[ia]
                b0, b1 = starts[ib], starts[ib] + lengths[ib]
                diff = np.abs(sums[a0:a1, None, :] - sums[None, b0:b1, :]).max(axis=2)
                count += 2 * int(np.sum(diff <= tolerance))
                near += int(np.sum((diff > tolerance) & (diff <= 2 * tolerance)))
    return count, near


def _find_rows(run_keys, run_cells, target_cells):
    """(query_index, run_index) matches of target rows among the runs.

    Runs are sorted by (hash key, cells); a query hits iff its hashed key's
    run block contains an exactly equal cell row.  Hash collisions only
    enlarge the scanned block, never hide a match.
    """
    tkeys = _hash_rows(target_cells)
    pos = np.searchsorted(run_keys, tkeys, side="left")
    pairs = []
    n_runs = run_keys.size
    alive = np.flatnonzero(pos < n_runs)
    step = 0
    cur = pos.copy()
    while alive.size:
        idx = cur[alive]
        same_key = run_keys[idx] == tkeys[alive]
        exact = same_key & np.all(run_cells[idx] == target_cells[alive], axis=1)
        for qi, ri in zip(alive[exact], idx[exact]):
            pairs.append((int(qi), int(ri)))
        cont = same_key & ~exact
        alive = alive[cont]
        cur[alive] += 1
        alive = alive[cur[alive] < n_runs]
        step += 1
        if step > 64:  # defensive: essentially impossible collision pileup
            break
    return pairs


def _streamed_count(pts, tolerance, memory_cap_bytes):
    """Two-pass sharded counting on the first coordinate's cells.

    Pass 1 scans row blocks for the exact range of first-coordinate cells;
    pass 2 processes cell-range shards, keeping one ghost cell above each
    shard so neighbor matches across shard edges are seen exactly once.
    """
    k, dim = pts.shape
    lo, hi = None, None
    for i0 in range(0, k, 256):
        blk = pts[i0 : i0 + 256, None, 0] + pts[None, :, 0]
        c0 = _quantize(blk.reshape(-1, 1), tolerance)[:, 0]
        blo, bhi = int(c0.min()), int(c0.max())
        lo = blo if lo is None else min(lo, blo)
        hi = bhi if hi is None else max(hi, bhi)
    hi += 1  # exclusive upper bound
    rows_per_shard = max(memory_cap_bytes // (dim * 8 * 6), 1)
    n_shards = max(1, int(math.ceil(k * k / rows_per_shard)))
    # integer edge arithmetic: cell ids can exceed float53 exactness
    edges = np.unique(
        np.array([lo + (hi - lo) * i // n_shards for i in range(n_shards + 1)],
                 dtype=np.int64)
    )
    total = 0
    near = 0
    for si in range(edges.size - 1):
        s_lo, s_hi = int(edges[si]), int(edges[si + 1])
        cells, sums = _pair_sum_cells(pts, tolerance, (s_lo, s_hi))
        if cells.shape[0] == 0:
            continue
        c, nr = _count_cell_matches(cells, sums, tolerance, own_range=(s_lo, s_hi))
        total += c
        near += nr
    return total, near


def energy_exponent_scan(deltas, tolerance: float = 1e-9) -> ExponentFit:
    """Cone-point additive energy across a delta scan: fit of
    log2(E2) against log2(|set|)."""
    pts_sizes = []
    energies = []
    for d in deltas:
        pts = cone_points(d)
        e = additive_energy(pts, tolerance)
        pts_sizes.append(pts.shape[0])
        energies.append(e.count)
    return fit_growth_exponent(list(zip(pts_sizes, energies)))
