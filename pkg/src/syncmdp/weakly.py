"""Deciders for the weakly synchronizing objective.

Sure winning asks for a subset S of the target with S contained in
Pre^n(S) that the initial support can surely enter.  Almost-sure winning
reuses the exact-support limit-sure machinery one predecessor step before
the target; limit-sure winning coincides with almost-sure winning.
"""

from __future__ import annotations

from typing import Iterable

from .model import (
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
from .eventually import (
    _recurring_support_search,
    _sure_step,
    limit_sure_eventually_support,
)
from .reach import iterate_pre, pre_mask

# The paper bound for the witness period is 2^|Q|; above this many states
# the exhaustive n-scan is refused rather than silently truncated.
WEAKLY_PERIOD_STATE_CAP = 20


def _query(m, d0, t, winning, kind=FnKind.SUM):
    return AnalysisQuery(SyncMode.WEAKLY, winning, TargetFunction(kind, frozenset(t)), d0)


def _pre_pow(m: Mdp, mask: int, n: int) -> int:
    for _ in range(n):
        mask = pre_mask(m, mask)
    return mask


def _period_fixpoint(m: Mdp, t_mask: int, n: int) -> int:
    """Greatest S with S = t & Pre^n(S); contains every witness for n."""
    region = t_mask
    while True:
        shrunk = t_mask & _pre_pow(m, region, n)
        if shrunk == region:
            return region
        region = shrunk


def sure_weakly(m: Mdp, d0: Distribution, t: Iterable[str]) -> Verdict:
    """One strategy re-synchronizes the whole mass in `t` forever.

    Scans periods n = 1..2^|Q|; for each n the greatest fixpoint of
    S -> t & Pre^n(S) subsumes every candidate S, so only it is checked.
    """
    m.check_distribution(d0)
    if m.n > WEAKLY_PERIOD_STATE_CAP:
        raise ResourceLimitError(
            f"period scan needs 2^{m.n} candidates, cap is 2^{WEAKLY_PERIOD_STATE_CAP}"
        )
    t_set = frozenset(t)
    t_mask = m.mask_of(t_set)
    query = _query(m, d0, t_set, WinningMode.SURE)
    supp_mask = m.support_mask(d0)

    seen = set()
    for n in range(1, 2 ** m.n + 1):
        s_mask = _period_fixpoint(m, t_mask, n)
        if s_mask == 0 or not is_subset(s_mask, _pre_pow(m, s_mask, n)):
            continue
        if s_mask in seen:
            continue
        seen.add(s_mask)
        entry = _sure_step(m, supp_mask, s_mask)
        if entry is not None:
            witness = {
                "set_used": m.sorted_names(s_mask),
                "entry_step": entry,
                "period": n,
            }
            return Verdict(query, True, witness)
    return Verdict(query, False)


def almost_sure_weakly(m: Mdp, d0: Distribution, t: Iterable[str]) -> Verdict:
    """One strategy's mass in `t` has limsup 1.

    Characterization: some set U is surely reachable as the exact support
    and, from the uniform distribution over U, the MDP is limit-sure
    eventually synchronizing in Pre(t&U) with support Pre(U); the extra
    predecessor step then moves the mass into t and the support back into
    U, so the construction can repeat with shrinking eps.
    """
    m.check_distribution(d0)
    t_set = frozenset(t)
    t_mask = m.mask_of(t_set)
    query = _query(m, d0, t_set, WinningMode.ALMOST_SURE)

    def accept(u_mask: int) -> bool:
        target = pre_mask(m, t_mask & u_mask)
        support = pre_mask(m, u_mask)
        if target == 0:
            return False
        d_u = Distribution.uniform(m.states[i] for i in iter_bits(u_mask))
        inner = limit_sure_eventually_support(
            m, d_u, m.names_of(target), m.names_of(support)
        )
        return inner.answer

    u_mask = _recurring_support_search(m, d0, accept)
    if u_mask is None:
        return Verdict(query, False)
    return Verdict(query, True, {"recurring_support": m.sorted_names(u_mask)})


def limit_sure_weakly(m: Mdp, d0: Distribution, t: Iterable[str]) -> Verdict:
    """Limit-sure weakly synchronizing equals almost-sure weakly."""
    inner = almost_sure_weakly(m, d0, t)
    query = _query(m, d0, frozenset(t), WinningMode.LIMIT_SURE)
    return Verdict(
        query, inner.answer, inner.witness, note="decided via almost-sure equivalence"
    )


def dispatch_weakly(m: Mdp, query: AnalysisQuery) -> Verdict:
    """Route a weakly-synchronizing query; Max is the union of its
    singleton-sum verdicts."""
    if query.sync_mode is not SyncMode.WEAKLY:
        raise ModelError("dispatch_weakly got a non-weakly query")
    deciders = {
        WinningMode.SURE: sure_weakly,
        WinningMode.ALMOST_SURE: almost_sure_weakly,
        WinningMode.LIMIT_SURE: limit_sure_weakly,
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
            return Verdict(query, True, witness, inner.note)
    return Verdict(query, False)
