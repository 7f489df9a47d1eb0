"""Word Mover's Distance between stories, solved exactly per pair.

Each story becomes a normalized bag-of-words distribution over its
embeddable tokens (nBOW); the distance between two stories is the optimal
value of the transportation problem whose ground cost is the Euclidean
distance between word vectors. The solver is a transportation simplex
(northwest-corner start, Dantzig pricing with a Bland fallback) running
on integer-scaled supplies so pivot arithmetic is exact.

Stories with no embeddable tokens get NaN rows/columns in the corpus
matrix; impute_sentinels() fills those from row medians so downstream
consumers always see finite values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
from numba import njit, prange
from scipy.spatial.distance import cdist

from .errors import (
    AllEmptyDocumentsError,
    EmptyCorpusError,
    EmptyDocumentError,
    MalformedHeaderError,
    NumericError,
    TruncatedFileError,
)

_WMDM_MAGIC = b"WMDM"
_WMDM_VERSION = 1
_WCD_SLACK = 1e-9


@dataclass(frozen=True)
class NbowDistribution:
    """A story as integer token counts over embedding-table rows."""

    story_id: str
    rows: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def weights(self) -> np.ndarray:
        return self.counts / self.counts.sum()


def _build_nbow(story, table):
    tokens = getattr(story, "tokens", story)
    story_id = getattr(story, "story_id", "")
    tally: dict[int, int] = {}
    for token in tokens:
        idx, _ = table.resolve(token)
        if idx >= 0:
            tally[idx] = tally.get(idx, 0) + 1
    if not tally:
        return None, story_id
    rows = np.fromiter(sorted(tally), dtype=np.int64)
    counts = np.array([tally[r] for r in rows], dtype=np.int64)
    return NbowDistribution(story_id=story_id, rows=rows, counts=counts), story_id


def nbow(story, table) -> NbowDistribution:
    """nBOW over embeddable tokens; raises if none can be embedded."""
    dist, story_id = _build_nbow(story, table)
    if dist is None:
        raise EmptyDocumentError(f"story {story_id!r} has no embeddable tokens")
    return dist


def nbow_corpus(stories, table) -> list[NbowDistribution | None]:
    """Per-story distributions; None marks stories with nothing embeddable."""
    return [_build_nbow(story, table)[0] for story in stories]


@njit(cache=True)
def _transport_core(cost, a, b):
    """Exact optimum of the balanced transportation problem.

    Returns (objective, status); status 1 means the pivot cap was hit.
    Supplies/demands must be nonnegative with equal sums; integer-valued
    inputs keep every pivot exact.
    """
    m = a.shape[0]
    k = b.shape[0]
    if m == 1:
        v = 0.0
        for j in range(k):
            v += cost[0, j] * b[j]
        return v, 0
    if k == 1:
        v = 0.0
        for i in range(m):
            v += cost[i, 0] * a[i]
        return v, 0

    flow = np.zeros((m, k))
    basic = np.zeros((m, k), dtype=np.bool_)
    na = a.copy()
    nb = b.copy()
    i = 0
    j = 0
    while True:  # northwest corner: visits exactly m + k - 1 cells
        basic[i, j] = True
        x = na[i] if na[i] < nb[j] else nb[j]
        flow[i, j] = x
        na[i] -= x
        nb[j] -= x
        if i == m - 1 and j == k - 1:
            break
        if na[i] <= 0.0 and i < m - 1:
            i += 1
        elif j < k - 1:
            j += 1
        else:
            i += 1

    cscale = 0.0
    for r in range(m):
        for c in range(k):
            ac = abs(cost[r, c])
            if ac > cscale:
                cscale = ac
    tol = 1e-11 * (cscale if cscale > 0.0 else 1.0)

    u = np.empty(m)
    v = np.empty(k)
    uk = np.empty(m, dtype=np.bool_)
    vk = np.empty(k, dtype=np.bool_)
    max_len = 2 * (m + k)
    cyc_r = np.empty(max_len, dtype=np.int64)
    cyc_c = np.empty(max_len, dtype=np.int64)
    rdeg = np.empty(m, dtype=np.int64)
    cdeg = np.empty(k, dtype=np.int64)

    dantzig_limit = 20 * (m + k)
    max_pivots = 1000 * (m + k)
    pivots = 0
    while True:
        # duals from the basis tree, u[0] anchored at zero
        for r in range(m):
            uk[r] = False
        for c in range(k):
            vk[c] = False
        u[0] = 0.0
        uk[0] = True
        for _ in range(m + k):
            changed = False
            for r in range(m):
                for c in range(k):
                    if basic[r, c]:
                        if uk[r] and not vk[c]:
                            v[c] = cost[r, c] - u[r]
                            vk[c] = True
                            changed = True
                        elif vk[c] and not uk[r]:
                            u[r] = cost[r, c] - v[c]
                            uk[r] = True
                            changed = True
            if not changed:
                break

        ei = -1
        ej = -1
        if pivots < dantzig_limit:
            best = -tol
            for r in range(m):
                for c in range(k):
                    if not basic[r, c]:
                        red = cost[r, c] - u[r] - v[c]
                        if red < best:
                            best = red
                            ei = r
                            ej = c
        else:
            # Bland-style pricing: first improving cell, guards cycling
            done = False
            for r in range(m):
                if done:
                    break
                for c in range(k):
                    if not basic[r, c]:
                        red = cost[r, c] - u[r] - v[c]
                        if red < -tol:
                            ei = r
                            ej = c
                            done = True
                            break
        if ei < 0:
            break
        pivots += 1
        if pivots > max_pivots:
            return -1.0, 1

        # the unique cycle through the entering cell: prune leaves away
        active = np.zeros((m, k), dtype=np.bool_)
        for r in range(m):
            rdeg[r] = 0
        for c in range(k):
            cdeg[c] = 0
        for r in range(m):
            for c in range(k):
                if basic[r, c]:
                    active[r, c] = True
                    rdeg[r] += 1
                    cdeg[c] += 1
        active[ei, ej] = True
        rdeg[ei] += 1
        cdeg[ej] += 1
        changed = True
        while changed:
            changed = False
            for r in range(m):
                if rdeg[r] == 1:
                    for c in range(k):
                        if active[r, c]:
                            active[r, c] = False
                            rdeg[r] -= 1
                            cdeg[c] -= 1
                            changed = True
                            break
            for c in range(k):
                if cdeg[c] == 1:
                    for r in range(m):
                        if active[r, c]:
                            active[r, c] = False
                            rdeg[r] -= 1
                            cdeg[c] -= 1
                            changed = True
                            break

        cyc_r[0] = ei
        cyc_c[0] = ej
        length = 1
        along_row = True
        cr = ei
        cc = ej
        while True:
            if along_row:
                for c in range(k):
                    if c != cc and active[cr, c]:
                        cc = c
                        break
            else:
                for r in range(m):
                    if r != cr and active[r, cc]:
                        cr = r
                        break
            if cr == ei and cc == ej:
                break
            cyc_r[length] = cr
            cyc_c[length] = cc
            length += 1
            along_row = not along_row

        theta = np.inf
        lidx = -1
        for t in range(1, length, 2):
            fl = flow[cyc_r[t], cyc_c[t]]
            if fl < theta:
                theta = fl
                lidx = t
        for t in range(length):
            r = cyc_r[t]
            c = cyc_c[t]
            if t % 2 == 0:
                flow[r, c] += theta
            else:
                flow[r, c] -= theta
                if flow[r, c] < 0.0:
                    flow[r, c] = 0.0
        basic[ei, ej] = True
        basic[cyc_r[lidx], cyc_c[lidx]] = False
        flow[cyc_r[lidx], cyc_c[lidx]] = 0.0

    total = 0.0
    for r in range(m):
        for c in range(k):
            if flow[r, c] > 0.0:
                total += flow[r, c] * cost[r, c]
    return total, 0


def transport_value(cost, supply, demand) -> float:
    """Python-visible wrapper around the simplex kernel (for direct use)."""
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    supply = np.ascontiguousarray(supply, dtype=np.float64)
    demand = np.ascontiguousarray(demand, dtype=np.float64)
    if cost.shape != (supply.shape[0], demand.shape[0]):
        raise ValueError("cost shape does not match supply/demand lengths")
    if np.any(supply < 0) or np.any(demand < 0):
        raise ValueError("supplies and demands must be nonnegative")
    if abs(supply.sum() - demand.sum()) > 1e-9 * max(1.0, supply.sum()):
        raise ValueError("supply and demand totals differ")
    value, status = _transport_core(cost, supply, demand)
    if status != 0:
        raise NumericError("transportation simplex hit its pivot cap")
    return value


def _pair_value(dist_a, dist_b, cost) -> float:
    ta = float(dist_a.counts.sum())
    tb = float(dist_b.counts.sum())
    # integer-scaled supplies keep the simplex arithmetic exact
    a = dist_a.counts.astype(np.float64) * tb
    b = dist_b.counts.astype(np.float64) * ta
    value, status = _transport_core(cost, a, b)
    if status != 0:
        raise NumericError("transportation simplex hit its pivot cap")
    return value / (ta * tb)


def wmd(dist_a: NbowDistribution, dist_b: NbowDistribution, table) -> float:
    """Exact WMD between two stories' nBOW distributions."""
    va = table.matrix[dist_a.rows].astype(np.float64)
    vb = table.matrix[dist_b.rows].astype(np.float64)
    cost = cdist(va, vb)
    value = _pair_value(dist_a, dist_b, cost)
    centroid_gap = float(
        np.linalg.norm(dist_a.weights @ va - dist_b.weights @ vb)
    )
    if centroid_gap > value + _WCD_SLACK * (1.0 + value):
        raise NumericError(
            f"centroid distance {centroid_gap} exceeds reported optimum {value}"
        )
    return value


@njit(parallel=True, cache=True)
def _wmd_block(pair_i, pair_j, offsets, rows, counts, totals, token_dist, out):
    # each slot writes only out[p]: bit-identical under any thread schedule
    for p in prange(pair_i.shape[0]):
        i = pair_i[p]
        j = pair_j[p]
        a0 = offsets[i]
        a1 = offsets[i + 1]
        b0 = offsets[j]
        b1 = offsets[j + 1]
        m = a1 - a0
        k = b1 - b0
        cost = np.empty((m, k))
        for r in range(m):
            tr = rows[a0 + r]
            for c in range(k):
                cost[r, c] = token_dist[tr, rows[b0 + c]]
        ta = float(totals[i])
        tb = float(totals[j])
        a = np.empty(m)
        b = np.empty(k)
        for r in range(m):
            a[r] = counts[a0 + r] * tb
        for c in range(k):
            b[c] = counts[b0 + c] * ta
        value, status = _transport_core(cost, a, b)
        out[p] = -1.0 if status != 0 else value / (ta * tb)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric story-by-story WMD matrix; NaN marks empty stories."""

    matrix: np.ndarray
    story_ids: tuple[str, ...]
    empty_story_ids: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def distance_matrix(stories, table, parallelism=1, progress=None,
                    block_size=200_000) -> DistanceMatrix:
    """All-pairs WMD over a tokenized corpus.

    Rows and columns of stories without embeddable tokens are NaN (their
    diagonal entry stays 0). progress, if given, is called as
    progress(done_pairs, total_pairs) after each block.
    """
    stories = list(stories)
    if not stories:
        raise EmptyCorpusError("no stories to compare")
    dists = nbow_corpus(stories, table)
    story_ids = tuple(
        getattr(s, "story_id", "") or str(i) for i, s in enumerate(stories)
    )
    n = len(stories)
    live = [i for i, d in enumerate(dists) if d is not None]
    if not live:
        raise AllEmptyDocumentsError("every story has zero embeddable tokens")
    empty_ids = tuple(story_ids[i] for i, d in enumerate(dists) if d is None)

    # compact the embedding rows actually used, precompute their distances
    used = sorted({int(r) for i in live for r in dists[i].rows})
    remap = {r: c for c, r in enumerate(used)}
    vectors = table.matrix[np.asarray(used, dtype=np.int64)].astype(np.float64)
    token_dist = cdist(vectors, vectors)

    offsets = np.zeros(n + 1, dtype=np.int64)
    rows_list, counts_list = [], []
    totals = np.zeros(n, dtype=np.int64)
    for i in range(n):
        if dists[i] is not None:
            rows_list.append(
                np.asarray([remap[int(r)] for r in dists[i].rows], dtype=np.int32)
            )
            counts_list.append(dists[i].counts.astype(np.float64))
            totals[i] = dists[i].total
        offsets[i + 1] = offsets[i] + (len(rows_list[-1]) if dists[i] is not None else 0)
    rows = np.concatenate(rows_list) if rows_list else np.zeros(0, np.int32)
    counts = np.concatenate(counts_list) if counts_list else np.zeros(0)

    pair_i, pair_j = [], []
    for ai in range(len(live)):
        for bi in range(ai + 1, len(live)):
            pair_i.append(live[ai])
            pair_j.append(live[bi])
    pair_i = np.asarray(pair_i, dtype=np.int32)
    pair_j = np.asarray(pair_j, dtype=np.int32)
    total_pairs = pair_i.shape[0]

    threads = max(1, int(parallelism))
    threads = min(threads, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(threads)

    out = np.empty(total_pairs, dtype=np.float64)
    done = 0
    for start in range(0, total_pairs, block_size):
        stop = min(start + block_size, total_pairs)
        _wmd_block(
            pair_i[start:stop], pair_j[start:stop],
            offsets, rows, counts, totals.astype(np.float64), token_dist,
            out[start:stop],
        )
        done = stop
        if progress is not None:
            progress(done, total_pairs)
    if total_pairs and out.min() < 0:
        raise NumericError("transportation simplex hit its pivot cap")

    matrix = np.full((n, n), np.nan, dtype=np.float64)
    np.fill_diagonal(matrix, 0.0)
    matrix[np.ix_(live, live)] = 0.0
    matrix[pair_i, pair_j] = out
    matrix[pair_j, pair_i] = out

    # sanity: the centroid distance is a lower bound on every optimum
    if len(live) > 1:
        cents = np.zeros((len(live), table.dim), dtype=np.float64)
        for c, i in enumerate(live):
            d = dists[i]
            cents[c] = d.weights @ table.matrix[d.rows].astype(np.float64)
        wcd = cdist(cents, cents)
        sub = matrix[np.ix_(live, live)]
        if np.any(wcd > sub + _WCD_SLACK * (1.0 + sub)):
            raise NumericError("centroid lower bound exceeded a reported optimum")

    return DistanceMatrix(matrix=matrix, story_ids=story_ids, empty_story_ids=empty_ids)


def impute_sentinels(matrix: np.ndarray) -> np.ndarray:
    """Replace NaN sentinels with row medians, preserving symmetry.

    Entry (i, j) takes the median of the finite off-diagonal entries of
    row j, falling back to row i's median, then to the global median.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    out = matrix.copy()
    n = matrix.shape[0]
    off = ~np.eye(n, dtype=bool)
    finite = np.isfinite(matrix) & off
    row_med = np.full(n, np.nan)
    for i in range(n):
        vals = matrix[i][finite[i]]
        if vals.size:
            row_med[i] = np.median(vals)
    all_vals = matrix[finite]
    global_med = float(np.median(all_vals)) if all_vals.size else 0.0
    for i in range(n):
        for j in range(n):
            if i != j and not np.isfinite(out[i, j]):
                if np.isfinite(row_med[j]):
                    out[i, j] = row_med[j]
                elif np.isfinite(row_med[i]):
                    out[i, j] = row_med[i]
                else:
                    out[i, j] = global_med
    return out


# --- binary cache ------------------------------------------------------------

def save_wmdm(matrix: np.ndarray, path: str | Path) -> None:
    """WMDM file: magic, u32 version, u64 n, then n*n f64 LE (NaN preserved)."""
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("expected a square matrix")
    n = matrix.shape[0]
    with open(path, "wb") as fh:
        fh.write(_WMDM_MAGIC)
        fh.write(struct.pack("<IQ", _WMDM_VERSION, n))
        fh.write(matrix.tobytes())


def load_wmdm(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(4 + 4 + 8)
        if len(head) < 16 or head[:4] != _WMDM_MAGIC:
            raise MalformedHeaderError("not a WMDM file")
        version, n = struct.unpack("<IQ", head[4:16])
        if version != _WMDM_VERSION:
            raise MalformedHeaderError(f"unsupported WMDM version {version}")
        payload = fh.read(8 * n * n)
        if len(payload) != 8 * n * n:
            raise TruncatedFileError("WMDM payload shorter than header promises")
        if fh.read(1):
            raise MalformedHeaderError("trailing bytes after WMDM payload")
    return np.frombuffer(payload, dtype="<f8").reshape(n, n).copy()
