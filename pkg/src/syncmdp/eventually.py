"""Deciders for the eventually synchronizing objective (all winning modes).

Sure winning reduces to membership in an iterated predecessor set.
Limit-sure winning (optionally with exact support) reduces to almost-sure
reachability in the mod-counter product over the periodic part of the pair
sequence.  Almost-sure winning enumerates a recurring support set and
combines the other two.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Optional

from .model import (
    SUBSET_ENUM_CAP,
    AnalysisQuery,
    Distribution,
    FnKind,
    Mdp,
    ModelError,
    ResourceLimitError,
    SyncMode,
    TargetFunction,
    Verdict,
    WinningMode,
    is_subset,
    iter_bits,
)
from .reach import (
    almost_sure_reach_mask,
    counter_state,
    iterate_pre,
    iterate_pre_pair,
    product_mod_counter,
)


def _query(m, d0, t, winning, kind=FnKind.SUM, sync=SyncMode.EVENTUALLY):
    return AnalysisQuery(sync, winning, TargetFunction(kind, frozenset(t)), d0)


def _sure_step(m: Mdp, supp_mask: int, t_mask: int) -> Optional[int]:
    """Smallest n with the support inside Pre^n(t), or None."""
    seq = iterate_pre(m, t_mask)
    for n, mask in enumerate(seq.masks):
        if is_subset(supp_mask, mask):
            return n
    return None


def sure_eventually(m: Mdp, d0: Distribution, t: Iterable[str]) -> Verdict:
    """One strategy puts the whole mass in `t` at one step."""
    m.check_distribution(d0)
    t_set = frozenset(t)
    n = _sure_step(m, m.support_mask(d0), m.mask_of(t_set))
    witness = None if n is None else {"step": n}
    return Verdict(_query(m, d0, t_set, WinningMode.SURE), n is not None, witness)


def _product_shift(m: Mdp, supp_mask: int, t_mask: int, u_mask: int):
    """Shift making the support almost-surely reach R x {0} in the product.

    R and Z are the pair sequence's first periodic elements; returns
    (prefix, period, shift) or None.
    """
    pair_seq = iterate_pre_pair(m, t_mask, u_mask)
    k = pair_seq.prefix_len
    r = pair_seq.period
    r_mask, z_mask = pair_seq.pair_at(k)
    product = product_mod_counter(m, z_mask, r)
    target = product.mask_of(
        counter_state(m.states[i], 0) for i in iter_bits(r_mask)
    )
    region = almost_sure_reach_mask(product, target)
    for shift in range(r):
        entry = product.mask_of(
            counter_state(m.states[i], shift) for i in iter_bits(supp_mask)
        )
        if is_subset(entry, region):
            return k, r, shift
    return None


def limit_sure_eventually_support(
    m: Mdp, d0: Distribution, t: Iterable[str], u: Iterable[str]
) -> Verdict:
    """For every eps some strategy gets mass >= 1-eps in `t` while the
    whole mass sits in `u`, both at the same step."""
    m.check_distribution(d0)
    t_set, u_set = frozenset(t), frozenset(u)
    t_mask, u_mask = m.mask_of(t_set), m.mask_of(u_set)
    if not is_subset(t_mask, u_mask):
        raise ModelError("exact-support target must be a subset of the support set")
    query = _query(m, d0, t_set, WinningMode.LIMIT_SURE)
    supp_mask = m.support_mask(d0)

    n = _sure_step(m, supp_mask, t_mask)
    if n is not None:
        return Verdict(query, True, {"via": "sure", "step": n})
    found = _product_shift(m, supp_mask, t_mask, u_mask)
    if found is not None:
        k, r, shift = found
        return Verdict(
            query, True, {"via": "product", "prefix": k, "period": r, "shift": shift}
        )
    return Verdict(query, False)


def limit_sure_eventually(m: Mdp, d0: Distribution, t: Iterable[str]) -> Verdict:
    """Limit-sure eventually synchronizing; support constraint is trivial."""
    return limit_sure_eventually_support(m, d0, t, m.states)


def iter_subsets(n: int):
    """Nonempty index subsets by increasing cardinality, lexicographic."""
    for size in range(1, n + 1):
        for combo in combinations(range(n), size):
            mask = 0
            for i in combo:
                mask |= 1 << i
            yield mask


def _recurring_support_search(m: Mdp, d0: Distribution, accept) -> Optional[int]:
    """Smallest support set U that is surely reachable from d0 and passes
    `accept(U)`; the enumeration order fixes the reported witness."""
    if m.n > SUBSET_ENUM_CAP:
        raise ResourceLimitError(
            f"support enumeration needs 2^{m.n} subsets, cap is 2^{SUBSET_ENUM_CAP}"
        )
    supp_mask = m.support_mask(d0)
    for u_mask in iter_subsets(m.n):
        if _sure_step(m, supp_mask, u_mask) is None:
            continue
        if accept(u_mask):
            return u_mask
    return None


def almost_sure_eventually(m: Mdp, d0: Distribution, t: Iterable[str]) -> Verdict:
    """One strategy's mass in `t` has supremum 1 over time.

    Characterization: some set U is surely reachable as the exact support,
    and from the uniform distribution over U the MDP is limit-sure
    eventually synchronizing in t&U with support U.
    """
    m.check_distribution(d0)
    t_set = frozenset(t)
    t_mask = m.mask_of(t_set)
    query = _query(m, d0, t_set, WinningMode.ALMOST_SURE)

    def accept(u_mask: int) -> bool:
        target = t_mask & u_mask
        if target == 0:
            return False
        d_u = Distribution.uniform(m.states[i] for i in iter_bits(u_mask))
        inner = limit_sure_eventually_support(
            m, d_u, m.names_of(target), m.names_of(u_mask)
        )
        return inner.answer

    u_mask = _recurring_support_search(m, d0, accept)
    if u_mask is None:
        return Verdict(query, False)
    return Verdict(query, True, {"recurring_support": m.sorted_names(u_mask)})


def dispatch_eventually(m: Mdp, query: AnalysisQuery) -> Verdict:
    """Route an eventually-synchronizing query; Max goes through the union
    of its singleton-sum verdicts."""
    if query.sync_mode is not SyncMode.EVENTUALLY:
        raise ModelError("dispatch_eventually got a non-eventually query")
    deciders = {
        WinningMode.SURE: sure_eventually,
        WinningMode.ALMOST_SURE: almost_sure_eventually,
        WinningMode.LIMIT_SURE: limit_sure_eventually,
    }
    decide = deciders[query.winning_mode]
    if query.function.kind is FnKind.SUM:
        inner = decide(m, query.initial, query.function.target)
        return Verdict(query, inner.answer, inner.witness, inner.note)
    for q in sorted(query.function.target):
        inner = decide(m, query.initial, frozenset([q]))
        if inner.answer:
            witness = dict(inner.witness or {})
            witness["max_state"] = q
            return Verdict(query, True, witness)
    return Verdict(query, False)
