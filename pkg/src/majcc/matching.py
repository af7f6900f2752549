"""Minimum-weight perfect matching engines.

Three interchangeable solvers back the decoder:

* a C kernel (``_mwpm.c``, compiled on demand with the system compiler) --
  the fast path used by Monte Carlo runs;
* networkx's blossom implementation -- the fallback when no compiler is
  available;
* exhaustive enumeration -- the oracle for tests and for very small
  clusters, where it beats both.

``match_events`` is the decoder-facing entry: given the event-to-event
distance matrix and each event's distance to the boundary, it splits the
events into provably independent clusters (events a, b can share an optimal
pair only if d(a,b) < d(a,bnd) + d(b,bnd)) and solves each cluster exactly.
"""

from __future__ import annotations

import ctypes
import os
import subprocess
import sysconfig
import tempfile
from dataclasses import dataclass

import numpy as np


class MatchingInfeasibleError(RuntimeError):
    """Raised when no perfect matching exists on the supplied graph."""


# -- C kernel loading ---------------------------------------------------------

_KERNEL = None
_KERNEL_TRIED = False


def _source_path() -> str:
    return os.path.join(os.path.dirname(__file__), "_mwpm.c")


def _kernel_so_path() -> str:
    cache = os.environ.get("MAJCC_CACHE_DIR") or os.path.join(
        os.path.expanduser("~"), ".cache", "majcc")
    os.makedirs(cache, exist_ok=True)
    tag = sysconfig.get_platform().replace("-", "_")
    return os.path.join(cache, f"_mwpm_{tag}.so")


def load_kernel():
    """Compile (once) and load the C matching kernel; None if unavailable."""
    global _KERNEL, _KERNEL_TRIED
    if _KERNEL_TRIED:
        return _KERNEL
    _KERNEL_TRIED = True
    if os.environ.get("MAJCC_NO_KERNEL"):
        return None
    so_path = _kernel_so_path()
    src = _source_path()
    try:
        if (not os.path.exists(so_path)
                or os.path.getmtime(so_path) < os.path.getmtime(src)):
            with tempfile.TemporaryDirectory() as tmp:
                tmp_so = os.path.join(tmp, "k.so")
                for cc in ("cc", "gcc", "clang"):
                    try:
                        subprocess.run(
                            [cc, "-O2", "-shared", "-fPIC", "-o", tmp_so, src],
                            check=True, capture_output=True)
                        break
                    except (OSError, subprocess.CalledProcessError):
                        continue
                else:
                    return None
                os.replace(tmp_so, so_path)
        lib = ctypes.CDLL(so_path)
        lib.mwpm_solve.restype = ctypes.c_int
        lib.mwpm_solve.argtypes = [
            ctypes.c_int, ctypes.c_int,
            np.ctypeslib.ndpointer(np.int32, flags="C_CONTIGUOUS"),
            np.ctypeslib.ndpointer(np.int32, flags="C_CONTIGUOUS"),
            np.ctypeslib.ndpointer(np.float64, flags="C_CONTIGUOUS"),
            np.ctypeslib.ndpointer(np.int32, flags="C_CONTIGUOUS"),
        ]
        _KERNEL = lib
    except OSError:
        _KERNEL = None
    return _KERNEL


def kernel_available() -> bool:
    return load_kernel() is not None


# -- Perfect matching on explicit graphs --------------------------------------


def _solve_c(n: int, edges) -> list[int]:
    lib = load_kernel()
    ei = np.asarray([e[0] for e in edges], dtype=np.int32)
    ej = np.asarray([e[1] for e in edges], dtype=np.int32)
    w = np.asarray([e[2] for e in edges], dtype=np.float64)
    # Maximize (wmax + 1 - w) at maximum cardinality == minimize total w
    # over perfect matchings.
    wmax = float(w.max()) if len(w) else 0.0
    wt = (wmax + 1.0) - w
    mate = np.full(n, -1, dtype=np.int32)
    rc = lib.mwpm_solve(n, len(edges), ei, ej, wt, mate)
    if rc != 0:
        raise RuntimeError(f"matching kernel failed with code {rc}")
    return mate.tolist()


def _solve_networkx(n: int, edges) -> list[int]:
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(range(n))
    wmax = max((e[2] for e in edges), default=0.0)
    for i, j, w in edges:
        g.add_edge(i, j, weight=wmax + 1.0 - w)
    mates = nx.max_weight_matching(g, maxcardinality=True)
    out = [-1] * n
    for a, b in mates:
        out[a] = b
        out[b] = a
    return out


def min_weight_perfect_matching(n: int, edges, engine: str = "auto") -> list[int]:
    """mate[v] for a minimum-weight perfect matching; raises if infeasible.

    ``edges`` is an iterable of (i, j, weight).  ``engine`` is "auto", "c",
    or "networkx".
    """
    if n == 0:
        return []
    if n % 2:
        raise MatchingInfeasibleError(f"odd vertex count {n}")
    edges = list(edges)
    if engine == "auto":
        engine = "c" if kernel_available() else "networkx"
    if engine == "c":
        mate = _solve_c(n, edges)
    elif engine == "networkx":
        mate = _solve_networkx(n, edges)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    if any(m < 0 for m in mate):
        raise MatchingInfeasibleError("graph admits no perfect matching")
    return mate


# -- Event matching with a boundary -------------------------------------------


@dataclass
class EventMatching:
    pairs: list[tuple[int, int]]       # indices into the event list
    to_boundary: list[int]             # event indices matched to the boundary
    weight: float


def _brute_force(idx: list[int], dist, bnd) -> tuple[float, list]:
    """Exact enumeration over all pairings (with boundary) of a small cluster."""
    if not idx:
        return 0.0, []
    first, rest = idx[0], idx[1:]
    best_w, best = bnd[first], [("b", first)]
    sub_w, sub = _brute_force(rest, dist, bnd)
    best_w, best = best_w + sub_w, best + sub
    for pos, j in enumerate(rest):
        others = rest[:pos] + rest[pos + 1:]
        sub_w, sub = _brute_force(others, dist, bnd)
        w = dist[first][j] + sub_w
        if w < best_w:
            best_w, best = w, [("p", first, j)] + sub
    return best_w, best


def brute_force_match(dist, bnd) -> EventMatching:
    """Reference oracle: exhaustive minimum over all pairings (<= ~12 events)."""
    k = len(bnd)
    if k > 12:
        raise ValueError("brute force limited to 12 events")
    w, plan = _brute_force(list(range(k)), dist, bnd)
    pairs = [(a, b) for tag, *ab in plan if tag == "p" for a, b in [ab]]
    solo = [a for tag, *ab in plan if tag == "b" for a in ab]
    return EventMatching(pairs=pairs, to_boundary=solo, weight=w)


_BRUTE_CLUSTER_MAX = 6


def _match_cluster(idx: list[int], dist, bnd, engine: str) -> tuple[float, list, list]:
    m = len(idx)
    if m == 1:
        return bnd[idx[0]], [], [idx[0]]
    if m <= _BRUTE_CLUSTER_MAX:
        w, plan = _brute_force(idx, dist, bnd)
        pairs = [tuple(ab) for tag, *ab in plan if tag == "p"]
        solo = [ab[0] for tag, *ab in plan if tag == "b"]
        return w, pairs, solo
    # Twin construction: node t < m is event idx[t]; node m + t is its
    # boundary twin.  Twin-twin edges are free so unused twins pair up.
    edges = []
    for a in range(m):
        for b in range(a + 1, m):
            edges.append((a, b, float(dist[idx[a]][idx[b]])))
            edges.append((m + a, m + b, 0.0))
        edges.append((a, m + a, float(bnd[idx[a]])))
    mate = min_weight_perfect_matching(2 * m, edges, engine=engine)
    pairs, solo, total = [], [], 0.0
    for a in range(m):
        ma = mate[a]
        if ma == m + a:
            solo.append(idx[a])
            total += bnd[idx[a]]
        elif ma < m and a < ma:
            pairs.append((idx[a], idx[ma]))
            total += dist[idx[a]][idx[ma]]
    return total, pairs, solo


def match_events(dist, bnd, engine: str = "auto",
                 decompose: bool = True) -> EventMatching:
    """Minimum-weight matching of detection events against each other or the
    boundary.

    ``dist`` is a (k, k) array of pairwise path distances, ``bnd`` a length-k
    array of boundary distances.  With ``decompose`` the instance is split
    into independent clusters first: if d(a,b) >= d(a,bnd) + d(b,bnd) any
    pairing of a with b can be swapped for two boundary pairings at no cost,
    so only the transitive closure of the strict inequality has to be solved
    jointly.
    """
    k = len(bnd)
    if k == 0:
        return EventMatching(pairs=[], to_boundary=[], weight=0.0)
    dist = np.asarray(dist, dtype=np.float64)
    bnd = np.asarray(bnd, dtype=np.float64)

    if not decompose:
        w, pairs, solo = _match_cluster(list(range(k)), dist, bnd, engine)
        return EventMatching(pairs=pairs, to_boundary=solo, weight=w)

    close = dist < (bnd[:, None] + bnd[None, :])
    np.fill_diagonal(close, False)
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    rows, cols = np.nonzero(close)
    for a, b in zip(rows.tolist(), cols.tolist()):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    clusters: dict[int, list[int]] = {}
    for x in range(k):
        clusters.setdefault(find(x), []).append(x)

    pairs, solo, total = [], [], 0.0
    for idx in clusters.values():
        w, p, s = _match_cluster(idx, dist, bnd, engine)
        total += w
        pairs.extend(p)
        solo.extend(s)
    return EventMatching(pairs=pairs, to_boundary=solo, weight=total)
