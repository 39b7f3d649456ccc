"""Feynman graphs for the bullet product.

A graph has a vertex ``L`` (only outgoing edges, carrying ``dbar^J f1``), a
vertex ``R`` (only incoming edges, carrying ``d^I f2``), solid vertices
(``-Phi_{I Jbar}``; in >= 1, out >= 1, in + out >= 3) and hollow vertices
(``Psi_{I Jbar}``; in + out >= 1). Every edge runs from an antiholomorphic
slot to a holomorphic slot and carries ``h^{i jbar}``. A graph contributes
``hbar^chi W / |Aut|`` with ``chi = #edges - #solid``.

Shapes are enumerated once per grade and reused for every context. The
product is assembled from connected pieces: graphs in which every component
meets ``L`` or ``R`` ("rooted"), and connected vacuum graphs, which enter
through the exponential formula.
"""
from __future__ import annotations

import json
import os
import pickle
import threading
from dataclasses import dataclass, field
from itertools import permutations, product
from math import factorial, prod

from gmpy2 import mpq

from .jets import HbarSeries, TruncatedJet, join_key
from .laplace import OperatorSeries
from .models import BudgetError, JetContext
from .rings import mfact, multi_indices, slots

__all__ = ["Graph", "vertex_configs", "config_tables", "connected_pieces", "enumerate_graphs",
           "aut_size", "aut_bruteforce", "canonical_key", "graph_weight",
           "graph_operator_series", "bullet_via_graphs", "GraphEvaluator", "dump_graphs"]

L, R, SOLID, HOLLOW = "L", "R", "S", "H"


@dataclass(frozen=True)
class Graph:
    """Vertex kinds and adjacency counts ``adj[u][v]`` = #edges u -> v.

    Vertex 0 is L and vertex 1 is R.
    """

    kinds: tuple
    adj: tuple
    _aut: list = field(default_factory=list, compare=False, hash=False, repr=False)

    @property
    def size(self) -> int:
        return len(self.kinds)

    def in_deg(self, v) -> int:
        return sum(row[v] for row in self.adj)

    def out_deg(self, v) -> int:
        return sum(self.adj[v])

    @property
    def n_edges(self) -> int:
        return sum(map(sum, self.adj))

    @property
    def n_solid(self) -> int:
        return sum(1 for k in self.kinds if k == SOLID)

    @property
    def chi(self) -> int:
        return self.n_edges - self.n_solid

    def edges(self) -> list:
        return [(u, v) for u, row in enumerate(self.adj) for v, m in enumerate(row)
                for _ in range(m)]

    @property
    def aut(self) -> int:
        if not self._aut:
            self._aut.append(aut_size(self))
        return self._aut[0]

    def touches(self, v) -> bool:
        return self.in_deg(v) + self.out_deg(v) > 0

    def is_valid(self) -> bool:
        if self.kinds[:2] != (L, R):
            return False
        if self.in_deg(0) or self.out_deg(1):
            return False
        for v, k in enumerate(self.kinds[2:], 2):
            i, o = self.in_deg(v), self.out_deg(v)
            if k == SOLID and not (i >= 1 and o >= 1 and i + o >= 3):
                return False
            if k == HOLLOW and i + o < 1:
                return False
            if k not in (SOLID, HOLLOW):
                return False
        return True

    def relabel(self, perm) -> "Graph":
        """Graph with vertex ``v`` renamed ``perm[v]`` (L and R must stay put)."""
        n = self.size
        inv = [0] * n
        for v, p in enumerate(perm):
            inv[p] = v
        kinds = tuple(self.kinds[inv[i]] for i in range(n))
        adj = tuple(tuple(self.adj[inv[i]][inv[j]] for j in range(n)) for i in range(n))
        return Graph(kinds, adj)

    def to_json(self) -> dict:
        return {"chi": self.chi, "aut": self.aut, "kinds": list(self.kinds),
                "edges": [list(e) for e in self.edges()]}


# --- vertex configurations and tables ------------------------------------------

def _vertex_types(budget):
    """(kind, in, out, cost) with cost <= budget."""
    out = []
    for tot in range(1, budget + 3):
        for i in range(tot + 1):
            o = tot - i
            if i >= 1 and o >= 1 and tot >= 3 and tot - 2 <= budget:
                out.append((SOLID, i, o, tot - 2))
            if tot <= budget:
                out.append((HOLLOW, i, o, tot))
    return sorted(out)


def vertex_configs(k: int):
    """All (interior types, a, b) of grade ``k``: a = out(L), b = in(R).

    Interior types are sorted tuples of ``(kind, in, out)``.
    """
    types = _vertex_types(2 * k)
    res = []

    def rec(start, left, chosen):
        for a in range(left + 1):
            b = left - a
            ins = sum(t[1] for t in chosen) + b
            outs = sum(t[2] for t in chosen) + a
            if ins == outs:
                res.append((tuple(chosen), a, b))
        for idx in range(start, len(types)):
            t = types[idx]
            if t[3] <= left:
                chosen.append(t[:3])
                rec(idx, left - t[3], chosen)
                chosen.pop()

    rec(0, 2 * k, [])
    return res


def config_tables(types, a, b):
    """Adjacency matrices for a configuration, one or more per isomorphism class.

    Same-type vertices are adjacent in the vertex order; the generator only
    emits matrices that do not decrease under swapping two adjacent
    same-type vertices, which removes most relabelings.
    """
    verts = [(L, 0, a), (R, b, 0)] + list(types)
    n = len(verts)
    rows = [v[2] for v in verts]
    cols = [v[1] for v in verts]
    pairs = [i for i in range(2, n - 1) if verts[i] == verts[i + 1]]
    M = [None] * n
    out = []

    def rec(r, colrem, tied):
        if r == n:
            if not any(colrem):
                out.append(tuple(M))
            return
        row = [0] * n
        total_after = [0] * (n + 1)
        for c in range(n - 1, -1, -1):
            total_after[c] = total_after[c + 1] + colrem[c]

        def rowrec(c, rem):
            if c == n:
                if rem:
                    return
                newtied = set(tied)
                for i in pairs:
                    if i not in tied:
                        continue
                    if r < i:
                        x, y = row[i], row[i + 1]
                        if x > y:
                            return
                        if x < y:
                            newtied.discard(i)
                    elif r == i + 1:
                        sw = list(row)
                        sw[i], sw[i + 1] = sw[i + 1], sw[i]
                        ri, rs = M[i], tuple(sw)
                        if ri > rs:
                            return
                        if ri < rs:
                            newtied.discard(i)
                M[r] = tuple(row)
                rec(r + 1, [colrem[t] - row[t] for t in range(n)], newtied)
                M[r] = None
                return
            if rem > total_after[c]:
                return
            for x in range(min(rem, colrem[c]) + 1):
                row[c] = x
                rowrec(c + 1, rem - x)
            row[c] = 0

        rowrec(0, rows[r])

    rec(0, list(cols), set(pairs))
    kinds = tuple(v[0] for v in verts)
    return kinds, out


def _components(adj, n):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u in range(n):
        for v in range(n):
            if adj[u][v]:
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[ru] = rv
    return [find(v) for v in range(n)]


# --- canonical forms and automorphisms -------------------------------------------

def _neighbours(adj, n):
    outs = [tuple((u, adj[v][u]) for u in range(n) if adj[v][u]) for v in range(n)]
    ins = [tuple((u, adj[u][v]) for u in range(n) if adj[u][v]) for v in range(n)]
    return outs, ins


def _refine(adj, n, colours, nbrs=None):
    """Colour refinement to a stable, label-independent partition (ranks)."""
    outs, ins = nbrs or _neighbours(adj, n)
    col = list(colours)
    ncol = len(set(col))
    while True:
        sig = [(col[v], tuple(sorted([(m, col[u]) for u, m in outs[v]])),
                tuple(sorted([(m, col[u]) for u, m in ins[v]]))) for v in range(n)]
        ranks = {s: i for i, s in enumerate(sorted(set(sig)))}
        m = len(ranks)
        new = [ranks[s] for s in sig]
        if m == ncol:
            return new
        col, ncol = new, m


def _twin_reduce(kinds, adj, colours):
    """Collapse classes of interchangeable vertices.

    Returns the quotient (colours, adj) and the factor ``prod |class|!``.
    """
    n = len(kinds)
    cls = list(range(n))
    for u in range(n):
        if cls[u] != u:
            continue
        for w in range(u + 1, n):
            if cls[w] != w or colours[u] != colours[w]:
                continue
            if adj[u][u] != adj[w][w] or adj[u][w] != adj[w][u]:
                continue
            ok = True
            for x in range(n):
                if x == u or x == w:
                    continue
                if adj[u][x] != adj[w][x] or adj[x][u] != adj[x][w]:
                    ok = False
                    break
            if ok:
                cls[w] = u
    reps = sorted(set(cls))
    if len(reps) == n:
        return colours, adj, 1
    size = {r: cls.count(r) for r in reps}
    factor = prod(factorial(s) for s in size.values())
    qcol = []
    for r in reps:
        intra = 0
        if size[r] > 1:
            other = next(w for w in range(n) if cls[w] == r and w != r)
            intra = adj[r][other]
        qcol.append((colours[r], size[r], intra))
    qadj = tuple(tuple(adj[r][s] for s in reps) for r in reps)
    return qcol, qadj, factor


def _canon_search(adj, n, colours):
    """Individualisation-refinement: (min certificate, #leaves attaining it)."""
    best = [None, 0, None]
    nbrs = _neighbours(adj, n)

    def search(col):
        col = _refine(adj, n, col, nbrs)
        if best[2] is None:
            best[2] = col
        cells = {}
        for v, c in enumerate(col):
            cells.setdefault(c, []).append(v)
        target = None
        for c in sorted(cells):
            if len(cells[c]) > 1:
                target = cells[c]
                break
        if target is None:
            order = sorted(range(n), key=lambda v: col[v])
            cert = tuple(tuple(adj[u][v] for v in order) for u in order)
            if best[0] is None or cert < best[0]:
                best[0], best[1] = cert, 1
            elif cert == best[0]:
                best[1] += 1
            return
        for v in target:
            new = [2 * c + (0 if c != col[v] or u == v else 1) for u, c in enumerate(col)]
            search(new)

    search(colours)
    return best[0], best[1], best[2]


def _initial_colours(kinds, adj):
    n = len(kinds)
    cols = []
    for v in range(n):
        i = sum(adj[u][v] for u in range(n))
        o = sum(adj[v])
        cols.append((kinds[v] != L, kinds[v] != R, kinds[v], i, o) if v >= 2 else (v,))
    ranks = {c: r for r, c in enumerate(sorted(set(cols), key=repr))}
    return [ranks[c] for c in cols], cols


def canonical_key(g: Graph):
    """Label-independent key: equal iff the graphs are isomorphic (L, R fixed)."""
    return _canonical(g)[0]


def _canonical(g: Graph):
    n = g.size
    ranks, raw = _initial_colours(g.kinds, g.adj)
    col = _refine(g.adj, n, ranks)
    # carry the initial colour names so that keys compare across graphs
    names = {}
    for v in range(n):
        names.setdefault(col[v], raw[v])
    cur = [(col[v], names[col[v]]) for v in range(n)]
    adj = g.adj
    factor = 1
    while True:
        qcol, qadj, f = _twin_reduce(cur, adj, cur)
        if f == 1:
            break
        factor *= f
        adj, cur = qadj, qcol
    m = len(adj)
    order = sorted(set(cur), key=repr)
    ranks = {c: r for r, c in enumerate(order)}
    start = [ranks[c] for c in cur]
    cert, count, final = _canon_search(adj, m, start)
    # the certificate orders vertices by refined colour, which is
    # label-independent; include the colour names in that order
    ordered = sorted(range(m), key=lambda v: final[v])
    names_in_order = tuple(repr(cur[v]) for v in ordered)
    key = (g.n_edges, tuple(sorted(g.kinds)), names_in_order, cert)
    return key, factor * count


def aut_size(g: Graph) -> int:
    """|Aut|: vertex automorphisms fixing L and R, times permutations of parallel edges."""
    _, vaut = _canonical(g)
    edge_factor = prod(factorial(m) for row in g.adj for m in row)
    return vaut * edge_factor


def aut_bruteforce(g: Graph) -> int:
    """Reference count by trying every permutation of interior vertices."""
    n = g.size
    interior = list(range(2, n))
    count = 0
    for p in permutations(interior):
        perm = [0, 1] + list(p)
        if any(g.kinds[v] != g.kinds[perm[v]] for v in range(n)):
            continue
        if all(g.adj[u][v] == g.adj[perm[u]][perm[v]] for u in range(n) for v in range(n)):
            count += 1
    return count * prod(factorial(m) for row in g.adj for m in row)


# --- connected pieces ---------------------------------------------------------------

_cache_lock = threading.Lock()
_piece_cache: dict = {}


_DISK_FORMAT = 1


def _cache_path(k):
    base = os.environ.get("KSTAR_CACHE_DIR")
    if base is None:
        root = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
        base = os.path.join(root, "kahlerstar")
    return os.path.join(base, f"pieces-v{_DISK_FORMAT}-k{k}.pickle")


def _disk_load(k):
    try:
        with open(_cache_path(k), "rb") as fh:
            fmt, vac, root = pickle.load(fh)
    except (OSError, pickle.UnpicklingError, EOFError, ValueError):
        return None
    if fmt != _DISK_FORMAT:
        return None
    build = lambda rows: [Graph(kinds, adj, [aut]) for kinds, adj, aut in rows]
    return build(vac), build(root)


def _disk_store(k, vac, root):
    path = _cache_path(k)
    rows = lambda gs: [(g.kinds, g.adj, g.aut) for g in gs]
    try:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp = f"{path}.{os.getpid()}.tmp"
        with open(tmp, "wb") as fh:
            pickle.dump((_DISK_FORMAT, rows(vac), rows(root)), fh, protocol=4)
        os.replace(tmp, path)
    except OSError:
        pass


def connected_pieces(k: int):
    """(vacuum, rooted) graphs of grade exactly ``k``, one per isomorphism class.

    Vacuum: no edge at L or R and the interior is connected. Rooted: every
    interior vertex is joined to L or R. Grades from 3 up are also kept on
    disk (``KSTAR_CACHE_DIR``, default ``~/.cache/kahlerstar``) because grade
    4 takes about a minute to enumerate.
    """
    with _cache_lock:
        hit = _piece_cache.get(k)
        if hit is not None:
            return hit
        if k >= 3 and os.environ.get("KSTAR_NO_DISK_CACHE") is None:
            hit = _disk_load(k)
            if hit is not None:
                _piece_cache[k] = hit
                return hit
        vac, root = [], []
        for types, a, b in vertex_configs(k):
            if a == 0 and b == 0 and not types:
                if k == 0:
                    root.append(Graph((L, R), ((0, 0), (0, 0))))
                continue
            kinds, tables = config_tables(types, a, b)
            n = len(kinds)
            seen = {}
            for M in tables:
                comp = _components(M, n)
                if a == 0 and b == 0:
                    c0 = comp[2]
                    if any(comp[v] != c0 for v in range(2, n)):
                        continue
                else:
                    roots = {comp[0], comp[1]}
                    if any(comp[v] not in roots for v in range(2, n)):
                        continue
                g = Graph(kinds, M)
                key, vaut = _canonical(g)
                if key not in seen:
                    g._aut.append(vaut * prod(factorial(m) for row in M for m in row))
                    seen[key] = g
            (vac if a == 0 and b == 0 else root).extend(seen.values())
        _piece_cache[k] = (vac, root)
        if k >= 3 and os.environ.get("KSTAR_NO_DISK_CACHE") is None:
            _disk_store(k, vac, root)
        return vac, root


def _union(parts):
    """Disjoint union of graphs sharing L and R."""
    kinds = [L, R]
    blocks = []
    for g in parts:
        blocks.append(g)
        kinds.extend(g.kinds[2:])
    n = len(kinds)
    adj = [[0] * n for _ in range(n)]
    off = 2
    for g in blocks:
        m = g.size
        idx = [0, 1] + list(range(off, off + m - 2))
        for u in range(m):
            for v in range(m):
                if g.adj[u][v]:
                    adj[idx[u]][idx[v]] += g.adj[u][v]
        off += m - 2
    return Graph(tuple(kinds), tuple(tuple(r) for r in adj))


def enumerate_graphs(k: int) -> list:
    """Every graph of grade ``k`` up to isomorphism, vacuum components included."""
    root = connected_pieces_upto(k)[1]
    vac = connected_pieces_upto(k)[0]
    out = []

    def vac_multisets(budget, start, acc):
        if budget == 0:
            yield list(acc)
            return
        for idx in range(start, len(vac)):
            g = vac[idx]
            if g.chi <= budget:
                acc.append(idx)
                yield from vac_multisets(budget - g.chi, idx, acc)
                acc.pop()

    for r in root:
        if r.chi > k:
            continue
        for ms in vac_multisets(k - r.chi, 0, []):
            parts = [r] + [vac[i] for i in ms]
            g = _union(parts)
            aut = r.aut
            for i in set(ms):
                m = ms.count(i)
                aut *= vac[i].aut ** m * factorial(m)
            g._aut.append(aut)
            out.append(g)
    return out


def connected_pieces_upto(K: int):
    vac, root = [], []
    for k in range(K + 1):
        v, r = connected_pieces(k)
        vac.extend(v)
        root.extend(r)
    return vac, root


def dump_graphs(graphs) -> str:
    """JSON lines, sorted deterministically."""
    rows = [json.dumps(g.to_json(), sort_keys=True) for g in graphs]
    return "\n".join(sorted(rows, key=lambda s: (json.loads(s)["chi"], s))) + "\n"


# --- weights --------------------------------------------------------------------------

class GraphEvaluator:
    """Contracts graph shapes against one context.

    Every edge carries the index of its holomorphic end; the inverse metric
    of each edge is absorbed into the tensor at the edge's antiholomorphic
    end ("raised" tensors).
    """

    def __init__(self, ctx: JetContext):
        self.ctx = ctx
        self.n = ctx.n
        self.ring = ctx.ring
        self._raised = {}
        self._lpoly = {}

    def _vertex_table(self, kind, i, o):
        """``{(I, I'): value}`` for in-multiset I and raised out-multiset I'."""
        key = (kind, i, o)
        tab = self._raised.get(key)
        if tab is not None:
            return tab
        ctx, n, R = self.ctx, self.n, self.ring
        hinv = ctx.hinv
        tab = {}
        for I in multi_indices(n, i):
            for Ip in multi_indices(n, o):
                tgt = slots(Ip)
                s = R.zero
                for js in product(range(n), repeat=o):
                    J = [0] * n
                    for j in js:
                        J[j] += 1
                    J = tuple(J)
                    if kind == SOLID:
                        try:
                            base = -ctx.phi[(I, J)]
                        except KeyError:
                            raise BudgetError(f"solid vertex of degree {i + o} needs "
                                              f"potential jets of that order") from None
                    else:
                        try:
                            base = ctx.psi[(I, J)]
                        except KeyError:
                            raise BudgetError(f"hollow vertex of degree {i + o} needs "
                                              f"log-det jets of that order") from None
                    term = base
                    for t, j in zip(tgt, js):
                        term = term * hinv[t][j]
                    s = s + term
                tab[(I, Ip)] = s
        self._raised[key] = tab
        return tab

    def _l_poly(self, Lms):
        """prod over L-edges of sum_j h^{i jbar} xbar_j, as {J: coeff}."""
        p = self._lpoly.get(Lms)
        if p is not None:
            return p
        n, R = self.n, self.ring
        hinv = self.ctx.hinv
        cur = {(0,) * n: R.one}
        for i in slots(Lms):
            nxt = {}
            for J, c in cur.items():
                for j in range(n):
                    J2 = list(J)
                    J2[j] += 1
                    J2 = tuple(J2)
                    v = c * hinv[i][j]
                    nxt[J2] = nxt[J2] + v if J2 in nxt else v
            cur = nxt
        self._lpoly[Lms] = cur
        return cur

    def contract(self, g: Graph) -> dict:
        """Open-slot tensor of a graph: ``{(J, I): value}`` (no 1/|Aut|)."""
        n, Rg = self.n, self.ring
        size = g.size
        edges = g.edges()
        inc_in = [[] for _ in range(size)]
        inc_out = [[] for _ in range(size)]
        for e, (u, v) in enumerate(edges):
            inc_out[u].append(e)
            inc_in[v].append(e)
        interior = _elimination_order(g)
        processed = set()
        active = []  # edge ids currently open
        states = {(): Rg.one}
        for v in interior:
            kind = g.kinds[v]
            table = self._vertex_table(kind, len(inc_in[v]), len(inc_out[v]))
            incident = list(dict.fromkeys(inc_in[v] + inc_out[v]))
            pos = {e: p for p, e in enumerate(active)}
            new = [e for e in incident if e not in pos]
            closing = [e for e in incident if e in pos]
            keep = [e for e in active if e not in closing]
            opened = [e for e in new
                      if not (edges[e][0] == v and edges[e][1] == v)]
            nxt_active = keep + opened
            keep_pos = [pos[e] for e in keep]
            nxt = {}
            for key, val in states.items():
                for assign in product(range(n), repeat=len(new)):
                    idx = {e: key[pos[e]] for e in closing}
                    idx.update(zip(new, assign))
                    I = [0] * n
                    for e in inc_in[v]:
                        I[idx[e]] += 1
                    Ip = [0] * n
                    for e in inc_out[v]:
                        Ip[idx[e]] += 1
                    w = table[(tuple(I), tuple(Ip))]
                    if _is_zero(Rg, w):
                        continue
                    nkey = tuple(key[p] for p in keep_pos) + tuple(
                        idx[e] for e in opened)
                    p = val * w
                    old = nxt.get(nkey)
                    nxt[nkey] = p if old is None else old + p
            states = nxt
            active = nxt_active
            processed.add(v)
            if not states:
                return {}
        # remaining open edges touch L or R; direct L -> R edges are added here
        direct = [e for e, (u, v) in enumerate(edges) if u == 0 and v == 1]
        lr_edges = active + direct
        grouped = {}
        for key, val in states.items():
            for assign in product(range(n), repeat=len(direct)):
                full = key + assign
                Lm = [0] * n
                Rm = [0] * n
                for e, i in zip(lr_edges, full):
                    if edges[e][0] == 0:
                        Lm[i] += 1
                    if edges[e][1] == 1:
                        Rm[i] += 1
                k2 = (tuple(Lm), tuple(Rm))
                grouped[k2] = grouped[k2] + val if k2 in grouped else val
        out = {}
        for (Lm, Rm), val in grouped.items():
            for J, c in self._l_poly(Lm).items():
                k2 = (J, Rm)
                p = val * c
                out[k2] = out[k2] + p if k2 in out else p
        return out


def _is_zero(R, x):
    try:
        return R.is_zero(x)
    except Exception:
        return False


def _elimination_order(g: Graph):
    """Interior vertices in an order that keeps few edges open."""
    n = g.size
    left = set(range(2, n))
    order = []
    done = set()
    while left:
        best, score = None, None
        for v in sorted(left):
            links = sum(g.adj[v][u] + g.adj[u][v] for u in done)
            s = (-links, sum(g.adj[v]) + sum(g.adj[u][v] for u in range(n)))
            if score is None or s < score:
                best, score = v, s
        order.append(best)
        done.add(best)
        left.discard(best)
    return order


def graph_weight(g: Graph, ctx: JetContext, f1: TruncatedJet | None = None,
                 f2: TruncatedJet | None = None):
    """W_Gamma: full contraction including the L and R data.

    Returns ``(W, |Aut|, chi)``. With ``f1``/``f2`` omitted, only graphs with
    no edges at L (resp. R) can be evaluated.
    """
    ev = GraphEvaluator(ctx)
    tab = ev.contract(g)
    Rg = ctx.ring
    n = ctx.n
    z = (0,) * n
    W = Rg.zero
    for (J, I), c in tab.items():
        if sum(J) and f1 is None or sum(I) and f2 is None:
            raise ValueError("graph has edges at L or R; pass f1 and f2")
        a = f1[join_key(z, J)] * mfact(J) if f1 is not None else Rg.one
        b = f2[join_key(I, z)] * mfact(I) if f2 is not None else Rg.one
        W = W + c * a * b
    return W, g.aut, g.chi


def graph_operator_series(ctx: JetContext, K: int) -> OperatorSeries:
    """Bidifferential coefficients of the bullet product summed over graphs."""
    ctx.require(K)
    Rg = ctx.ring
    n = ctx.n
    if n == 1:
        rooted, vac = _grouped_1d(ctx, K)
    else:
        ev = GraphEvaluator(ctx)
        rooted = [dict() for _ in range(K + 1)]
        vac = [Rg.zero for _ in range(K + 1)]
        for k in range(K + 1):
            vg, rg = connected_pieces(k)
            for g in rg:
                inv = Rg.const(mpq(1, g.aut))
                for key, c in ev.contract(g).items():
                    v = c * inv
                    rooted[k][key] = rooted[k][key] + v if key in rooted[k] else v
            for g in vg:
                t = ev.contract(g)
                if t:
                    vac[k] = vac[k] + t[((0,) * n, (0,) * n)] * Rg.const(mpq(1, g.aut))
    # Z = exp(sum_k hbar^k vac[k]) with vac[0] = 0
    Z = _series_exp(vac, K, Rg)
    tables = []
    for k in range(K + 1):
        tab = {}
        for k1 in range(k + 1):
            zk = Z[k - k1]
            if _is_zero(Rg, zk):
                continue
            for key, c in rooted[k1].items():
                v = c * zk
                tab[key] = tab[key] + v if key in tab else v
        tables.append({key: v for key, v in tab.items() if not _is_zero(Rg, v)})
    return OperatorSeries(n, K, tables, Rg)


def _series_exp(a, K, Rg):
    # e' = a' e  =>  m e_m = sum_j j a_j e_{m-j}
    e = [Rg.one] + [Rg.zero] * K
    for m in range(1, K + 1):
        s = Rg.zero
        for j in range(1, m + 1):
            s = s + a[j] * e[m - j] * j
        e[m] = s * Rg.const(mpq(1, m))
    return e


def _grouped_1d(ctx, K):
    """n = 1: weights depend only on the vertex configuration."""
    Rg = ctx.ring
    h = ctx.hinv[0][0]
    hp = [Rg.one]
    for _ in range(3 * K + 2):
        hp.append(hp[-1] * h)
    rooted = [dict() for _ in range(K + 1)]
    vac = [Rg.zero for _ in range(K + 1)]
    for k in range(K + 1):
        for is_vac, sums in zip((True, False), _config_sums(k)):
            for (types, a, b, E), s in sums.items():
                w = hp[E] * Rg.const(s)
                for kind, i, o in types:
                    if kind == SOLID:
                        w = w * (-ctx.phi[((i,), (o,))])
                    else:
                        w = w * ctx.psi[((i,), (o,))]
                if is_vac:
                    vac[k] = vac[k] + w
                else:
                    key = ((a,), (b,))
                    rooted[k][key] = rooted[k][key] + w if key in rooted[k] else w
    return rooted, vac


_sum_cache: dict = {}


def _config_sums(k):
    """Per configuration, the sum of 1/|Aut| over vacuum and rooted pieces."""
    hit = _sum_cache.get(k)
    if hit is None:
        hit = []
        for graphs in connected_pieces(k):
            sums = {}
            for g in graphs:
                cfg = _config_of(g)
                sums[cfg] = sums.get(cfg, 0) + mpq(1, g.aut)
            hit.append(sums)
        _sum_cache[k] = hit = tuple(hit)
    return hit


def _config_of(g: Graph):
    types = tuple(sorted((g.kinds[v], g.in_deg(v), g.out_deg(v)) for v in range(2, g.size)))
    return types, g.out_deg(0), g.in_deg(1), g.n_edges


def bullet_via_graphs(ctx: JetContext, f1: TruncatedJet, f2: TruncatedJet, K: int) -> HbarSeries:
    return graph_operator_series(ctx, K).apply(f1, f2, K)
