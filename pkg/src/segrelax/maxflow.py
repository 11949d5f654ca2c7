"""Max-flow / min-cut on the superpixel graph.

Augmenting-path max-flow in the Boykov-Kolmogorov style: two search trees
rooted at the source and sink are grown simultaneously and reused between
augmentations, with orphaned subtrees re-adopted instead of rebuilt.  The
graph is small (superpixel counts), so the point here is exactness, not raw
speed: the returned cut is a true minimum cut, giving the discrete optimum of
the seed-pinned p=1 boundary energy.

Terminal attachments are ordinary arcs from/to two extra nodes, with
"infinite" capacity chosen as a finite value no augmenting path can saturate.
The source side of the cut is re-derived by a final residual reachability
sweep rather than read off the search trees.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InputError

_FREE, _SRC, _SNK = 0, 1, 2


@dataclass(frozen=True)
class FlowResult:
    flow: float
    source_side: np.ndarray  # bool per original node


def solve_max_flow(node_count: int, edges, capacities,
                   source_capacity, sink_capacity) -> FlowResult:
    """Max flow from a super-source to a super-sink through an undirected graph.

    Parameters
    ----------
    edges : (E, 2) int
        Undirected node pairs; each gets residual capacity in both directions.
    capacities : (E,) float
        Per-edge capacity (same both ways).
    source_capacity, sink_capacity : (N,) float
        Terminal arc capacities; 0 means no arc, ``inf`` is replaced by a
        finite value larger than any possible flow.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    caps = np.asarray(capacities, dtype=float).reshape(-1)
    sc = np.asarray(source_capacity, dtype=float).reshape(-1)
    tc = np.asarray(sink_capacity, dtype=float).reshape(-1)
    if caps.size != edges.shape[0] or sc.size != node_count or tc.size != node_count:
        raise InputError("inconsistent max-flow input sizes")
    if caps.size and caps.min() < 0:
        raise InputError("negative edge capacity")
    if (sc < 0).any() or (tc < 0).any():
        raise InputError("negative terminal capacity")

    finite_total = float(caps.sum()) + float(sc[np.isfinite(sc)].sum()) \
        + float(tc[np.isfinite(tc)].sum())
    big = 2.0 * finite_total + 1.0
    sc = np.where(np.isfinite(sc), sc, big)
    tc = np.where(np.isfinite(tc), tc, big)

    nn = node_count + 2
    s, t = node_count, node_count + 1

    # forward-star arc storage; arc a and a^1 are the two directions
    arc_to: list[int] = []
    arc_cap: list[float] = []
    first = np.full(nn, -1, dtype=np.int64)
    nxt: list[int] = []

    def add_arc(u, v, cap_uv, cap_vu):
        for (a, b, c) in ((u, v, cap_uv), (v, u, cap_vu)):
            arc_to.append(b)
            arc_cap.append(c)
            nxt.append(first[a])
            first[a] = len(arc_to) - 1

    for k in range(edges.shape[0]):
        i, j = int(edges[k, 0]), int(edges[k, 1])
        add_arc(i, j, float(caps[k]), float(caps[k]))
    for i in range(node_count):
        if sc[i] > 0:
            add_arc(s, i, float(sc[i]), 0.0)
        if tc[i] > 0:
            add_arc(i, t, float(tc[i]), 0.0)

    to = np.asarray(arc_to, dtype=np.int64)
    cap = np.asarray(arc_cap, dtype=float)
    nxt = np.asarray(nxt, dtype=np.int64)
    eps = 1e-12 * max(1.0, float(cap.max(initial=0.0)))

    tree = np.zeros(nn, dtype=np.int8)
    parent_arc = np.full(nn, -1, dtype=np.int64)
    dist = np.zeros(nn, dtype=np.int64)
    stamp = np.zeros(nn, dtype=np.int64)
    tree[s], tree[t] = _SRC, _SNK
    active = deque([s, t])
    orphans: deque = deque()
    time = 1

    def residual(a: int, from_source_tree: bool) -> float:
        return cap[a] if from_source_tree else cap[a ^ 1]

    def root_path_valid(p: int) -> int:
        """Length to a terminal root, or -1 if the chain dead-ends."""
        d = 0
        q = p
        while True:
            if stamp[q] == time:
                return dist[q] + d
            if q == s or q == t:
                return d
            if parent_arc[q] == -1:
                return -1
            a = parent_arc[q]
            q = to[a ^ 1] if tree[q] == _SRC else to[a]
            d += 1

    def set_stamps(p: int, total: int) -> None:
        d = total
        q = p
        while stamp[q] != time and q != s and q != t:
            stamp[q] = time
            dist[q] = d
            a = parent_arc[q]
            if a == -1:
                break
            q = to[a ^ 1] if tree[q] == _SRC else to[a]
            d -= 1

    def grow() -> int:
        while active:
            p = active[0]
            if tree[p] == _FREE:
                active.popleft()
                continue
            from_src = tree[p] == _SRC
            a = first[p]
            while a != -1:
                if residual(a, from_src) > eps:
                    q = to[a]
                    if tree[q] == _FREE:
                        tree[q] = tree[p]
                        parent_arc[q] = a if from_src else a ^ 1
                        active.append(q)
                    elif tree[q] != tree[p]:
                        return a if from_src else a ^ 1
                a = nxt[a]
            active.popleft()
        return -1

    def augment(bridge: int) -> float:
        u, v = to[bridge ^ 1], to[bridge]
        bottleneck = cap[bridge]
        q = u
        while q != s:
            a = parent_arc[q]
            bottleneck = min(bottleneck, cap[a])
            q = to[a ^ 1]
        q = v
        while q != t:
            a = parent_arc[q]
            bottleneck = min(bottleneck, cap[a])
            q = to[a]
        cap[bridge] -= bottleneck
        cap[bridge ^ 1] += bottleneck
        q = u
        while q != s:
            a = parent_arc[q]
            cap[a] -= bottleneck
            cap[a ^ 1] += bottleneck
            if cap[a] <= eps:
                parent_arc[q] = -1
                orphans.append(q)
            q = to[a ^ 1]
        q = v
        while q != t:
            a = parent_arc[q]
            cap[a] -= bottleneck
            cap[a ^ 1] += bottleneck
            if cap[a] <= eps:
                parent_arc[q] = -1
                orphans.append(q)
            q = to[a]
        return float(bottleneck)

    def adopt() -> None:
        nonlocal time
        while orphans:
            p = orphans.popleft()
            side = tree[p]
            if side == _FREE:
                continue
            in_src = side == _SRC
            best_arc = -1
            best_d = -1
            a = first[p]
            while a != -1:
                q = to[a]
                # parent must offer residual toward p (src tree) or from p (snk)
                if tree[q] == side and residual(a ^ 1, in_src) > eps:
                    d = root_path_valid(q)
                    if d >= 0:
                        set_stamps(q, d)
                        if best_arc == -1 or d < best_d:
                            best_arc = a
                            best_d = d
                a = nxt[a]
            if best_arc != -1:
                q = to[best_arc]
                parent_arc[p] = best_arc ^ 1 if in_src else best_arc
                stamp[p] = time
                dist[p] = best_d + 1
                continue
            # no parent: free p, orphan its children, reactivate neighbors
            a = first[p]
            while a != -1:
                q = to[a]
                if tree[q] == side:
                    if residual(a ^ 1, in_src) > eps:
                        active.append(q)
                    pa = parent_arc[q]
                    if pa != -1:
                        anchor = to[pa ^ 1] if in_src else to[pa]
                        if anchor == p:
                            parent_arc[q] = -1
                            orphans.append(q)
                a = nxt[a]
            tree[p] = _FREE

    flow = 0.0
    while True:
        bridge = grow()
        if bridge == -1:
            break
        time += 1
        flow += augment(bridge)
        adopt()

    # definitive cut side: residual reachability from the source
    reach = np.zeros(nn, dtype=bool)
    reach[s] = True
    stack = [s]
    while stack:
        p = stack.pop()
        a = first[p]
        while a != -1:
            q = to[a]
            if not reach[q] and cap[a] > eps:
                reach[q] = True
                stack.append(q)
            a = nxt[a]
    return FlowResult(flow, reach[:node_count])
