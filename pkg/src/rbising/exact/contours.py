"""Plus/minus ensemble labels from the contour picture of a 2D configuration.

Same-sign nearest neighbours form clusters; contours run between clusters.
Where four contour edges meet at a plaquette (a 2x2 checkerboard), the
diagonal pair that stays connected is fixed by position: the main-diagonal
pair when the plaquette's top row is even, the anti-diagonal pair otherwise.
The rule never looks at spin values, so flipping every spin flips the label.
With it the clusters of a box form a tree.

Each contour piece separates the box into two sides; the side holding at most
one of the four box corners is its interior. The sea is the cluster lying on
the exterior side of every contour, and its sign is the label. If some contour
splits the corners two against two (an interface), the label is the majority
sign of the spins along the box edge, with ties resolved by the spin at the
origin (the box centre).

Three-dimensional boxes use the sign of the magnetization instead, with the
same tie break.
"""

import os
from functools import lru_cache
from pathlib import Path

import numpy as np
from numba import njit

from ..lattice import SpinConfig

PLUS, MINUS = 1, -1
_LABEL_RULE_VERSION = "v2"


def cache_dir() -> Path:
    """Where exhaustive label tables are kept between runs (RBISING_CACHE overrides)."""
    return Path(os.environ.get("RBISING_CACHE", Path.home() / ".cache" / "rbising"))


@njit(cache=True, inline="always")
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True, inline="always")
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra != rb:
        parent[ra] = rb


@njit(cache=True)
def _sea_sign(g, R, C, parent, lab, deg, start, adj, eu, ev, bparent, order, sub, maxchild):
    n = R * C
    for i in range(n):
        parent[i] = i
    for r in range(R):
        for c in range(C):
            i = r * C + c
            if c + 1 < C and g[i] == g[i + 1]:
                _union(parent, i, i + 1)
            if r + 1 < R and g[i] == g[i + C]:
                _union(parent, i, i + C)
    for r in range(R - 1):
        for c in range(C - 1):
            i = r * C + c
            if g[i] == g[i + C + 1] and g[i + 1] == g[i + C] and g[i] != g[i + 1]:
                if r % 2 == 0:
                    _union(parent, i, i + C + 1)
                else:
                    _union(parent, i + 1, i + C)
    nc = 0
    for i in range(n):
        lab[i] = -1
    for i in range(n):
        root = _find(parent, i)
        if lab[root] == -1:
            lab[root] = nc
            nc += 1
        lab[i] = lab[root]
    if nc == 1:
        return g[0]

    # cluster adjacency (duplicates allowed) in CSR form
    ne = 0
    for r in range(R):
        for c in range(C):
            i = r * C + c
            if c + 1 < C and lab[i] != lab[i + 1]:
                eu[ne] = lab[i]
                ev[ne] = lab[i + 1]
                ne += 1
            if r + 1 < R and lab[i] != lab[i + C]:
                eu[ne] = lab[i]
                ev[ne] = lab[i + C]
                ne += 1
    for k in range(nc + 1):
        deg[k] = 0
    for e in range(ne):
        deg[eu[e] + 1] += 1
        deg[ev[e] + 1] += 1
    for k in range(nc):
        deg[k + 1] += deg[k]
    for k in range(nc + 1):
        start[k] = deg[k]
    for e in range(ne):
        adj[start[eu[e]]] = ev[e]
        start[eu[e]] += 1
        adj[start[ev[e]]] = eu[e]
        start[ev[e]] += 1

    for k in range(nc):
        bparent[k] = -2
        sub[k] = 0
        maxchild[k] = 0
    sub[lab[0]] += 1
    sub[lab[C - 1]] += 1
    sub[lab[(R - 1) * C]] += 1
    sub[lab[n - 1]] += 1

    # BFS tree rooted at cluster 0
    bparent[0] = -1
    order[0] = 0
    head, tail = 0, 1
    while head < tail:
        v = order[head]
        head += 1
        for p in range(deg[v], deg[v + 1]):
            w = adj[p]
            if bparent[w] == -2:
                bparent[w] = v
                order[tail] = w
                tail += 1
    for t in range(tail - 1, 0, -1):
        v = order[t]
        sub[bparent[v]] += sub[v]

    interface = False
    for t in range(1, tail):
        v = order[t]
        if sub[v] == 2:
            interface = True
        if sub[v] > maxchild[bparent[v]]:
            maxchild[bparent[v]] = sub[v]

    if interface:
        s = 0
        for r in range(R):
            for c in range(C):
                if r == 0 or r == R - 1 or c == 0 or c == C - 1:
                    s += g[r * C + c]
        if s > 0:
            return 1
        if s < 0:
            return -1
        return g[(R // 2) * C + C // 2]

    for t in range(tail):
        v = order[t]
        up = 0 if bparent[v] == -1 else 4 - sub[v]
        if maxchild[v] <= 1 and up <= 1:
            for i in range(n):
                if lab[i] == v:
                    return g[i]
    return 0  # unreachable for a tree


@njit(cache=True)
def _make_buffers(R, C):
    n = R * C
    return (
        np.empty(n, np.int32),
        np.empty(n, np.int32),
        np.empty(n + 1, np.int32),
        np.empty(n + 1, np.int32),
        np.empty(4 * n, np.int32),
        np.empty(2 * n, np.int32),
        np.empty(2 * n, np.int32),
        np.empty(n, np.int32),
        np.empty(n, np.int32),
        np.empty(n, np.int32),
        np.empty(n, np.int32),
    )


@njit(cache=True)
def _classify_one(g, R, C):
    parent, lab, deg, start, adj, eu, ev, bparent, order, sub, maxchild = _make_buffers(R, C)
    return _sea_sign(g, R, C, parent, lab, deg, start, adj, eu, ev, bparent, order, sub, maxchild)


@njit(cache=True)
def _classify_all(R, C, out):
    n = R * C
    parent, lab, deg, start, adj, eu, ev, bparent, order, sub, maxchild = _make_buffers(R, C)
    g = np.empty(n, np.int8)
    full = (1 << n) - 1
    # the label is odd under a global flip, which maps index i to full - i
    for idx in range(1 << (n - 1)):
        for k in range(n):
            g[k] = 1 if (idx >> k) & 1 else -1
        sign = _sea_sign(g, R, C, parent, lab, deg, start, adj, eu, ev, bparent, order, sub, maxchild)
        out[idx] = sign
        out[full - idx] = -sign


@njit(cache=True)
def _longest_contours_all(R, C, out):
    """Edge count of the largest contour for every configuration of an R x C box."""
    n = R * C
    nh = R * (C - 1)
    ne = nh + (R - 1) * C
    parent = np.empty(max(ne, 1), np.int32)
    size = np.empty(max(ne, 1), np.int32)
    g = np.empty(n, np.int8)
    for idx in range(1 << n):
        for k in range(n):
            g[k] = 1 if (idx >> k) & 1 else -1
        for e in range(ne):
            parent[e] = e
        for r in range(R - 1):
            for c in range(C - 1):
                up = r * (C - 1) + c
                down = (r + 1) * (C - 1) + c
                left = nh + r * C + c
                right = nh + r * C + c + 1
                tl = g[r * C + c]
                tr = g[r * C + c + 1]
                bl = g[(r + 1) * C + c]
                br = g[(r + 1) * C + c + 1]
                a_up = tl != tr
                a_down = bl != br
                a_left = tl != bl
                a_right = tr != br
                cnt = a_up + a_down + a_left + a_right
                if cnt == 2:
                    first = -1
                    for e, on in ((up, a_up), (down, a_down), (left, a_left), (right, a_right)):
                        if on:
                            if first < 0:
                                first = e
                            else:
                                _union(parent, first, e)
                elif cnt == 4:
                    if r % 2 == 0:
                        # main diagonal stays connected: contour bends around tr and bl
                        _union(parent, up, right)
                        _union(parent, down, left)
                    else:
                        _union(parent, up, left)
                        _union(parent, down, right)
        for e in range(ne):
            size[e] = 0
        best = 0
        for r in range(R):
            for c in range(C - 1):
                if g[r * C + c] != g[r * C + c + 1]:
                    root = _find(parent, r * (C - 1) + c)
                    size[root] += 1
                    if size[root] > best:
                        best = size[root]
        for r in range(R - 1):
            for c in range(C):
                if g[r * C + c] != g[(r + 1) * C + c]:
                    root = _find(parent, nh + r * C + c)
                    size[root] += 1
                    if size[root] > best:
                        best = size[root]
        out[idx] = best


def _magnetization_labels(n: int, center: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int32)
    plus = np.zeros(idx.shape, dtype=np.int32)
    for k in range(n):
        plus += (idx >> k) & 1
    M = 2 * plus - n
    tie = np.where((idx >> center) & 1, 1, -1)
    return np.where(M > 0, 1, np.where(M < 0, -1, tie)).astype(np.int8)


@lru_cache(maxsize=8)
def all_labels(shape) -> np.ndarray:
    """Ensemble label (+1/-1) of every configuration, indexed by its bit pattern.

    Bit k of the index is the spin at site k (1 -> +1).
    """
    n = int(np.prod(shape))
    if n > 25:
        raise ValueError(f"{n} sites is too many to label exhaustively")
    if len(shape) != 2:
        center = int(np.ravel_multi_index(tuple(k // 2 for k in shape), shape))
        return _magnetization_labels(n, center)
    if n <= 16:
        out = np.empty(1 << n, dtype=np.int8)
        _classify_all(shape[0], shape[1], out)
        return out
    path = cache_dir() / f"labels_{shape[0]}x{shape[1]}_{_LABEL_RULE_VERSION}.npy"
    if path.exists():
        return np.load(path)
    out = np.empty(1 << n, dtype=np.int8)
    _classify_all(shape[0], shape[1], out)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(f".{os.getpid()}.tmp.npy")
    np.save(tmp, out)
    os.replace(tmp, path)
    return out


@lru_cache(maxsize=4)
def all_longest_contours(shape) -> np.ndarray:
    n = int(np.prod(shape))
    if len(shape) != 2 or n > 25:
        raise ValueError("contour lengths need a 2D box of at most 25 sites")
    out = np.empty(1 << n, dtype=np.int16)
    _longest_contours_all(shape[0], shape[1], out)
    return out


def classify_ensemble(sigma, vol) -> int:
    """+1 if the configuration belongs to the plus ensemble, -1 for minus."""
    s = np.asarray(sigma.values if isinstance(sigma, SpinConfig) else sigma, dtype=np.int8)
    if s.shape != (vol.n_sites,):
        raise ValueError("configuration does not match volume")
    if vol.d == 2:
        return int(_classify_one(s, vol.shape[0], vol.shape[1]))
    M = int(s.sum())
    return 1 if M > 0 else (-1 if M < 0 else int(s[vol.center]))
