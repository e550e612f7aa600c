"""Deciders for always synchronizing (one answer for all winning modes)
and strongly synchronizing (sum and max variants).

Always/sum is the sure safety region; always/max asks for an infinite path
in the graph of probability-1 transitions.  Strongly/sum reduces to
reaching the safety region; strongly/max reduces to synchronized
reachability of a simple deterministic cycle, checked in the cycle-counter
product.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .model import (
    AnalysisQuery,
    Distribution,
    FnKind,
    Mdp,
    ModelError,
    SyncMode,
    TargetFunction,
    Verdict,
    WinningMode,
    duplicate_outside,
    is_subset,
    iter_bits,
    split_distribution,
)
from .reach import (
    almost_sure_reach_mask,
    counter_state,
    product_cycle_counter,
    sure_reach_mask,
    sure_safety_mask,
)


def _query(m, d0, t, sync, winning, kind):
    return AnalysisQuery(sync, winning, TargetFunction(kind, frozenset(t)), d0)


def always_sum(
    m: Mdp, d0: Distribution, t: Iterable[str], mode: WinningMode = WinningMode.SURE
) -> Verdict:
    """Mass 1 in `t` at every step; the three winning modes coincide."""
    m.check_distribution(d0)
    t_set = frozenset(t)
    region = sure_safety_mask(m, m.mask_of(t_set))
    answer = is_subset(m.support_mask(d0), region)
    query = _query(m, d0, t_set, SyncMode.ALWAYS, mode, FnKind.SUM)
    witness = {"safe_region": m.sorted_names(region)} if answer else None
    return Verdict(query, answer, witness)


def det_succ_masks(m: Mdp) -> list:
    """Per-state mask of probability-1 successors."""
    out = []
    for qi in range(m.n):
        mask = 0
        for row in m._succ[qi]:
            if row and row & (row - 1) == 0:
                mask |= row
        out.append(mask)
    return out


def deterministic_graph(m: Mdp) -> dict:
    """Edges (q, q') such that some action moves q to q' with probability 1."""
    masks = det_succ_masks(m)
    return {q: m.names_of(masks[qi]) for qi, q in enumerate(m.states)}


def always_max(
    m: Mdp, d0: Distribution, t: Iterable[str], mode: WinningMode = WinningMode.SURE
) -> Verdict:
    """Mass 1 in a single `t`-state at every step; modes coincide.

    Holds exactly for Dirac initial distributions on a `t`-state with an
    infinite path in the deterministic-transition graph restricted to `t`.
    """
    m.check_distribution(d0)
    t_set = frozenset(t)
    query = _query(m, d0, t_set, SyncMode.ALWAYS, mode, FnKind.MAX)
    if not d0.is_dirac():
        return Verdict(query, False)
    (q0,) = d0.support()
    t_mask = m.mask_of(t_set)
    succ = det_succ_masks(m)
    # states of t from which the restricted graph has an infinite path
    region = t_mask
    while True:
        shrunk = 0
        for qi in iter_bits(region):
            if succ[qi] & region:
                shrunk |= 1 << qi
        if shrunk == region:
            break
        region = shrunk
    answer = bool(region & (1 << m.state_index(q0)))
    witness = {"state": q0, "live_region": m.sorted_names(region)} if answer else None
    return Verdict(query, answer, witness)


# -- strongly synchronizing, max variant ------------------------------------


def _trimmed_det_adj(m: Mdp) -> list:
    """Deterministic adjacency restricted to states with an infinite
    deterministic continuation (dead ends removed iteratively)."""
    succ = det_succ_masks(m)
    alive = m.full_mask
    while True:
        next_alive = 0
        for qi in iter_bits(alive):
            if succ[qi] & alive:
                next_alive |= 1 << qi
        if next_alive == alive:
            break
        alive = next_alive
    return [succ[qi] & alive if alive & (1 << qi) else 0 for qi in range(m.n)]


def _sccs(vertices: int, adj: list) -> list:
    """Tarjan's algorithm (iterative) over the masked subgraph."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    sccs = []
    counter = [0]

    for root in iter_bits(vertices):
        if root in index:
            continue
        work = [(root, iter(list(iter_bits(adj[root]))))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(list(iter_bits(adj[w])))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = 0
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp |= 1 << w
                    if w == v:
                        break
                sccs.append(comp)
    return sccs


def _bottom_sccs(vertices: int, adj: list) -> list:
    bottoms = []
    for comp in _sccs(vertices, adj):
        leaving = 0
        for qi in iter_bits(comp):
            leaving |= adj[qi] & ~comp
        if leaving == 0:
            bottoms.append(comp)
    bottoms.sort(key=lambda comp: (comp & -comp).bit_length())
    return bottoms


def _simple_cycle(comp: int, adj: list) -> list:
    """A simple cycle inside a bottom SCC, walked from its smallest state."""
    start = (comp & -comp).bit_length() - 1
    path = []
    position = {}
    current = start
    while current not in position:
        position[current] = len(path)
        path.append(current)
        current = (adj[current] & comp & -(adj[current] & comp)).bit_length() - 1
    return path[position[current] :]


def _cycle_check(
    md: Mdp, supp_mask: int, cycle: list, sure: bool
) -> Optional[list]:
    """Try every rotation of the cycle as the synchronization anchor;
    return the rotated cycle that the whole support can reach at counter 0."""
    ell = len(cycle)
    product = product_cycle_counter(md, ell)
    entry = product.mask_of(
        counter_state(md.states[i], 0) for i in iter_bits(supp_mask)
    )
    for j, anchor in enumerate(cycle):
        target = product.mask_of([counter_state(md.states[anchor], 0)])
        region = (
            sure_reach_mask(product, target)
            if sure
            else almost_sure_reach_mask(product, target)
        )
        if is_subset(entry, region):
            return cycle[j:] + cycle[:j]
    return None


def _strongly_max_cycle(
    md: Mdp, supp_mask: int, sure: bool
) -> Optional[list]:
    """Winning rotated cycle over the bottom SCCs of the trimmed
    deterministic graph, or None."""
    adj = _trimmed_det_adj(md)
    vertices = 0
    for qi in range(md.n):
        if adj[qi]:
            vertices |= 1 << qi
            vertices |= adj[qi]
    for comp in _bottom_sccs(vertices, adj):
        rotated = _cycle_check(md, supp_mask, _simple_cycle(comp, adj), sure)
        if rotated is not None:
            return [md.states[qi] for qi in rotated]
    return None


def strongly_max(
    m: Mdp, d0: Distribution, t: Iterable[str], mode: WinningMode
) -> Verdict:
    """Mass in a single `t`-state tends to 1 (all but finitely many steps).

    Duplicating the states outside `t` reduces to max over all states;
    the winner is a simple deterministic cycle (necessarily inside `t`)
    that the whole mass can reach synchronously, i.e. at a fixed step
    count modulo the cycle length.
    """
    m.check_distribution(d0)
    t_set = frozenset(t)
    mode = WinningMode(mode)
    query = _query(m, d0, t_set, SyncMode.STRONGLY, mode, FnKind.MAX)
    note = None
    if mode is WinningMode.LIMIT_SURE:
        note = "decided via almost-sure equivalence"

    md = duplicate_outside(m, t_set)
    d0_mapped = split_distribution(m, d0, t_set)
    cycle = _strongly_max_cycle(
        md, md.support_mask(d0_mapped), sure=mode is WinningMode.SURE
    )
    if cycle is None:
        return Verdict(query, False, note=note)
    return Verdict(query, True, {"cycle": cycle}, note=note)


def strongly_sum(
    m: Mdp, d0: Distribution, t: Iterable[str], mode: WinningMode
) -> Verdict:
    """Mass in `t` tends to 1: reachability of the safety region of `t`."""
    m.check_distribution(d0)
    t_set = frozenset(t)
    mode = WinningMode(mode)
    query = _query(m, d0, t_set, SyncMode.STRONGLY, mode, FnKind.SUM)
    safe = sure_safety_mask(m, m.mask_of(t_set))
    if mode is WinningMode.SURE:
        region = sure_reach_mask(m, safe)
        note = None
    else:
        region = almost_sure_reach_mask(m, safe)
        note = (
            "decided via almost-sure equivalence"
            if mode is WinningMode.LIMIT_SURE
            else None
        )
    answer = is_subset(m.support_mask(d0), region)
    witness = {"safe_region": m.sorted_names(safe)} if answer else None
    return Verdict(query, answer, witness, note=note)


def dispatch_always(m: Mdp, query: AnalysisQuery) -> Verdict:
    if query.sync_mode is not SyncMode.ALWAYS:
        raise ModelError("dispatch_always got a non-always query")
    decide = always_sum if query.function.kind is FnKind.SUM else always_max
    return decide(m, query.initial, query.function.target, query.winning_mode)


def dispatch_strongly(m: Mdp, query: AnalysisQuery) -> Verdict:
    if query.sync_mode is not SyncMode.STRONGLY:
        raise ModelError("dispatch_strongly got a non-strongly query")
    decide = strongly_sum if query.function.kind is FnKind.SUM else strongly_max
    return decide(m, query.initial, query.function.target, query.winning_mode)
